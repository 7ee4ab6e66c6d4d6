"""Command-line front end: solve single instances, sweep benchmark sets.

The solve report on stdout is deterministic for a fixed seed and one worker;
timing always goes to stderr so repeated runs stay byte-identical.  Bench
reports include wall times by design.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .cooperation import choose_mode, orchestrate
from .evaluator import check_schedule_feasible
from .instance import (ProjectInstance, PsplibParseError, critical_path_length,
                       load_psplib, validate)
from .search import SearchParams
from .selector import DEFAULT_RULES, load_rules

_WORKERS_ENV = "RCPSP_TABU_WORKERS"


def _default_workers() -> int:
    env = os.environ.get(_WORKERS_ENV, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _add_search_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--iters", type=int, default=10000,
                        help="total iteration budget shared by all workers")
    parser.add_argument("--workers", type=int, default=None,
                        help=f"search workers (default: ${_WORKERS_ENV} or CPU count)")
    parser.add_argument("--delta", type=int, default=None,
                        help="max swap distance (default: by instance size)")
    parser.add_argument("--tabu-size", type=int, default=None,
                        help="tabu list length (default: by instance size)")
    parser.add_argument("--phi-steps", type=int, default=20,
                        help="random swaps applied when diversifying")
    parser.add_argument("--phi-max", type=int, default=3,
                        help="unimproved reads before an entry is diversified")
    parser.add_argument("--pool-size", type=int, default=16,
                        help="working set size")
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    parser.add_argument("--eval", dest="evaluator", default="auto",
                        choices=["time", "capacity", "auto-rule", "auto-measure", "auto"],
                        help="resource evaluation mode ('auto': rules for multi-"
                             "worker runs, measurement for single-worker runs)")
    parser.add_argument("--rules", type=Path, default=None,
                        help="decision-rule file for auto-rule selection")


def build_params(instance: ProjectInstance, args: argparse.Namespace) -> SearchParams:
    workers = args.workers if args.workers is not None else _default_workers()
    overrides = {
        "total_iters": args.iters,
        "workers": max(1, workers),
        "phi_steps": args.phi_steps,
        "phi_max": args.phi_max,
        "pool_size": args.pool_size,
        "seed": args.seed,
    }
    if args.delta is not None:
        overrides["delta"] = args.delta
    if args.tabu_size is not None:
        overrides["tabu_size"] = args.tabu_size
    return SearchParams.defaults_for(instance.n_activities, **overrides)


def _resolve_eval(args: argparse.Namespace, params: SearchParams) -> str:
    if args.evaluator != "auto":
        return args.evaluator
    return "auto-measure" if params.workers == 1 else "auto-rule"


def _load_instance_or_fail(path: Path) -> ProjectInstance:
    if not path.is_file():
        raise SystemExit(f"error: instance file not found: {path}")
    try:
        instance = load_psplib(path)
    except PsplibParseError as exc:
        raise SystemExit(f"error: {path}: {exc}") from None
    violations = validate(instance)
    if violations:
        listing = "\n  ".join(violations)
        raise SystemExit(f"error: {path} failed validation:\n  {listing}")
    return instance


@dataclass
class SolveReport:
    instance: str
    n_activities: int
    n_resources: int
    workers: int
    seed: int
    evaluator: str
    iterations: int
    evaluations: int
    best_cmax: int
    critical_path: int
    stop_reason: str
    feasible: bool
    starts: list[int]

    def as_text(self) -> str:
        lines = [
            f"instance: {self.instance}",
            f"activities: {self.n_activities}",
            f"resources: {self.n_resources}",
            f"workers: {self.workers}",
            f"seed: {self.seed}",
            f"evaluator: {self.evaluator}",
            f"iterations: {self.iterations}",
            f"evaluated-schedules: {self.evaluations}",
            f"best-makespan: {self.best_cmax}",
            f"critical-path: {self.critical_path}",
            f"stop-reason: {self.stop_reason}",
            f"feasible: {'yes' if self.feasible else 'NO'}",
            "start-times: " + " ".join(str(s) for s in self.starts),
        ]
        return "\n".join(lines)


def cmd_solve(args: argparse.Namespace) -> int:
    instance = _load_instance_or_fail(args.instance)
    params = build_params(instance, args)
    params.collect_trace = args.trace is not None
    rules = load_rules(args.rules) if args.rules else DEFAULT_RULES
    mode, controller = choose_mode(instance, params, _resolve_eval(args, params),
                                   rules)
    stats = orchestrate(instance, params, mode, controller)
    report = SolveReport(
        instance=instance.name,
        n_activities=instance.n_activities,
        n_resources=instance.n_resources,
        workers=params.workers,
        seed=params.seed,
        evaluator=stats.mode,
        iterations=stats.iterations,
        evaluations=stats.evaluations,
        best_cmax=stats.best_cmax,
        critical_path=stats.critical_path,
        stop_reason=stats.stop_reason,
        feasible=stats.feasible,
        starts=[int(s) for s in stats.schedule.starts],
    )
    if args.format == "json":
        text = json.dumps(report.__dict__, indent=2)
    else:
        text = report.as_text()
    _emit(text, args.out)
    rate = stats.evaluations / stats.wall_time if stats.wall_time > 0 else 0.0
    print(f"wall-time: {stats.wall_time:.3f}s  schedules/sec: {rate:,.0f}",
          file=sys.stderr)
    if args.trace is not None:
        with open(args.trace, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["iteration", "cmax"])
            step = 0
            for chunk in stats.traces:
                for value in chunk:
                    writer.writerow([step, int(value)])
                    step += 1
    return 0 if report.feasible else 2


# ---------------------------------------------------------------------------
# Benchmark sweep

def load_bounds(path: str | Path) -> dict[str, int]:
    """CSV with header ``instance,bound``; duplicate names are an error."""
    bounds: dict[str, int] = {}
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["instance", "bound"]:
            raise ValueError(f"{path}: expected header 'instance,bound'")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            name = row[0].strip()
            try:
                value = int(row[1])
            except (IndexError, ValueError):
                raise ValueError(f"{path}:{lineno}: bound for {name!r} is not an integer") from None
            if name in bounds:
                raise ValueError(f"{path}:{lineno}: duplicate instance {name!r}")
            bounds[name] = value
    return bounds


_BENCH_COLUMNS = ["instance", "activities", "cmax", "critical_path", "bound",
                  "feasible", "iterations", "evaluations", "wall_time_s",
                  "sched_per_sec", "error"]


def _bench_one(path: Path, args: argparse.Namespace,
               bounds: dict[str, int]) -> dict:
    row = {column: "" for column in _BENCH_COLUMNS}
    row["instance"] = path.stem
    try:
        instance = _load_instance_or_fail(path)
        params = build_params(instance, args)
        rules = load_rules(args.rules) if args.rules else DEFAULT_RULES
        mode, controller = choose_mode(instance, params,
                                       _resolve_eval(args, params), rules)
        stats = orchestrate(instance, params, mode, controller)
        feasible, violations = check_schedule_feasible(instance, stats.schedule)
        if violations:
            raise RuntimeError(f"infeasible result: {violations[0]}")
        row.update(
            activities=instance.n_activities,
            cmax=stats.best_cmax,
            critical_path=stats.critical_path,
            bound=bounds.get(path.stem, ""),
            feasible=feasible,
            iterations=stats.iterations,
            evaluations=stats.evaluations,
            wall_time_s=round(stats.wall_time, 6),
            sched_per_sec=round(stats.evaluations / stats.wall_time, 1)
            if stats.wall_time > 0 else 0.0,
        )
    except SystemExit as exc:
        row["error"] = str(exc)
    except Exception as exc:  # sweep must continue past one bad instance
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def aggregate_rows(rows: list[dict]) -> dict:
    """Deviation and throughput aggregates recomputable from the rows."""
    solved = [r for r in rows if not r["error"]]
    cpm_devs = [100.0 * (r["cmax"] - r["critical_path"]) / r["critical_path"]
                for r in solved if r["critical_path"]]
    bounded = [r for r in solved if r["bound"] != ""]
    bound_devs = [100.0 * (r["cmax"] - r["bound"]) / r["bound"] for r in bounded]
    comp_time = sum(r["wall_time_s"] for r in solved)
    total_evals = sum(r["evaluations"] for r in solved)
    return {
        "data_set_size": len(rows),
        "solved": len(solved),
        "failures": len(rows) - len(solved),
        "cpm_dev": sum(cpm_devs) / len(cpm_devs) if cpm_devs else None,
        "bound_dev": sum(bound_devs) / len(bound_devs) if bound_devs else None,
        "best_sol": sum(1 for r in bounded if r["cmax"] == r["bound"]),
        "bounded_rows": len(bounded),
        "comp_time": comp_time,
        "sched_sec": total_evals / comp_time if comp_time > 0 else 0.0,
    }


def cmd_bench(args: argparse.Namespace) -> int:
    directory = args.directory
    if not directory.is_dir():
        raise SystemExit(f"error: data-set directory not found: {directory}")
    paths = sorted(directory.glob("*.sm"))
    if args.limit is not None:
        paths = paths[:args.limit]
    bounds = load_bounds(args.bounds) if args.bounds else {}

    tick = time.perf_counter()
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(lambda p: _bench_one(p, args, bounds), paths))
    else:
        rows = [_bench_one(path, args, bounds) for path in paths]
    sweep_wall = time.perf_counter() - tick

    aggregates = aggregate_rows(rows)
    aggregates["sweep_wall_time"] = round(sweep_wall, 3)

    if args.format == "csv":
        text = _rows_as_csv(rows)
    elif args.format == "json":
        text = json.dumps({"rows": rows, "aggregates": aggregates}, indent=2)
    else:
        text = _bench_as_text(rows, aggregates)
    _emit(text, args.out)
    return 0


def _rows_as_csv(rows: list[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=_BENCH_COLUMNS)
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue().rstrip("\n")


def _bench_as_text(rows: list[dict], aggregates: dict) -> str:
    lines = []
    for r in rows:
        if r["error"]:
            lines.append(f"{r['instance']}: FAILED ({r['error']})")
        else:
            bound = f" bound={r['bound']}" if r["bound"] != "" else ""
            lines.append(
                f"{r['instance']}: cmax={r['cmax']} cpm={r['critical_path']}"
                f"{bound} iters={r['iterations']} t={r['wall_time_s']:.2f}s")
    lines.append("-" * 40)
    cpm = aggregates["cpm_dev"]
    bnd = aggregates["bound_dev"]
    lines.append(f"instances: {aggregates['data_set_size']} "
                 f"(failures: {aggregates['failures']})")
    lines.append(f"CPM dev: {cpm:.2f}%" if cpm is not None else "CPM dev: n/a")
    if bnd is not None:
        lines.append(f"bound dev: {bnd:.2f}%  best_sol: {aggregates['best_sol']}"
                     f"/{aggregates['bounded_rows']}")
    lines.append(f"comp time: {aggregates['comp_time']:.1f}s  "
                 f"schedules/sec: {aggregates['sched_sec']:,.0f}")
    return "\n".join(lines)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        print(text)
    else:
        Path(out).write_text(text + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rcpsp-tabu",
        description="Cooperative parallel tabu search for the RCPSP "
                    f"(kernel backend: {kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve a single PSPLIB instance")
    solve.add_argument("instance", type=Path, help="PSPLIB .sm file")
    _add_search_flags(solve)
    solve.add_argument("--format", default="text", choices=["text", "json"])
    solve.add_argument("--out", type=Path, default=None,
                       help="write the report here instead of stdout")
    solve.add_argument("--trace", type=Path, default=None,
                       help="write per-iteration makespans as CSV")
    solve.set_defaults(func=cmd_solve)

    bench = sub.add_parser("bench", help="sweep a directory of .sm files")
    bench.add_argument("directory", type=Path, help="directory of .sm files")
    _add_search_flags(bench)
    bench.add_argument("--bounds", type=Path, default=None,
                       help="CSV of per-instance best-known makespans")
    bench.add_argument("--format", default="text", choices=["text", "csv", "json"])
    bench.add_argument("--out", type=Path, default=None)
    bench.add_argument("--limit", type=int, default=None,
                       help="only run the first N instances")
    bench.add_argument("--jobs", type=int, default=1,
                       help="instances solved concurrently (keep 1 unless "
                            "--workers 1)")
    bench.set_defaults(func=cmd_bench)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
