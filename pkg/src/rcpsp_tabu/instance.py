"""RCPSP instance model: PSPLIB parsing, validation and graph-derived bounds.

Activities are 0-based internally; PSPLIB job numbers (1-based) are remapped
at the parse boundary only.  Activities 0 and N-1 are the dummy source/sink.
"""

from __future__ import annotations

import io
from collections import namedtuple
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np


class PsplibParseError(ValueError):
    """Malformed PSPLIB input.  The message names the offending line."""


#: Numpy view of an instance used by the hot kernels (all arrays read-only).
#: adjacency[i, j] is True iff (i, j) is a precedence edge.
KernelArrays = namedtuple(
    "KernelArrays",
    "durations demands capacities pred_ptr pred_dat succ_ptr succ_dat adjacency horizon",
)


@dataclass(frozen=True)
class ProjectInstance:
    """Immutable project description: durations, precedences and resources.

    ``demands[i, k]`` is the amount of resource ``k`` activity ``i`` holds
    while running; ``capacities[k]`` is the corresponding availability.
    Safe to share between threads: every array is flagged non-writeable.
    """

    name: str
    n_activities: int
    n_resources: int
    durations: np.ndarray          # (N,) int32
    capacities: np.ndarray         # (M,) int32
    demands: np.ndarray            # (N, M) int32
    successors: tuple[tuple[int, ...], ...]
    predecessors: tuple[tuple[int, ...], ...]

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self.successors)

    @cached_property
    def kernel_arrays(self) -> KernelArrays:
        """CSR adjacency plus a dense edge matrix, shared by all workers."""
        n = self.n_activities
        pred_ptr = np.zeros(n + 1, dtype=np.int32)
        succ_ptr = np.zeros(n + 1, dtype=np.int32)
        for i in range(n):
            pred_ptr[i + 1] = pred_ptr[i] + len(self.predecessors[i])
            succ_ptr[i + 1] = succ_ptr[i] + len(self.successors[i])
        pred_dat = np.fromiter(
            (p for preds in self.predecessors for p in preds), dtype=np.int32,
            count=int(pred_ptr[-1]),
        )
        succ_dat = np.fromiter(
            (s for succs in self.successors for s in succs), dtype=np.int32,
            count=int(succ_ptr[-1]),
        )
        adjacency = np.zeros((n, n), dtype=np.bool_)
        for i, succs in enumerate(self.successors):
            for j in succs:
                adjacency[i, j] = True
        horizon = int(self.durations.sum())
        for arr in (pred_ptr, pred_dat, succ_ptr, succ_dat, adjacency):
            arr.setflags(write=False)
        return KernelArrays(
            self.durations, self.demands, self.capacities,
            pred_ptr, pred_dat, succ_ptr, succ_dat, adjacency, horizon,
        )


@dataclass(frozen=True)
class InstanceFeatures:
    """Per-instance attributes driving the evaluation-mode decision rules."""

    min_capacity: int
    avg_capacity: float
    max_capacity: int
    avg_duration: float
    avg_branch_factor: float
    critical_path_length: int


def make_instance(
    name: str,
    durations: Sequence[int],
    capacities: Sequence[int],
    demands: Sequence[Sequence[int]],
    successors: Sequence[Iterable[int]],
) -> ProjectInstance:
    """Build an instance from plain sequences, deriving predecessors."""
    n = len(durations)
    succ = tuple(tuple(sorted(s)) for s in successors)
    if len(succ) != n:
        raise ValueError("successors length does not match durations length")
    preds: list[list[int]] = [[] for _ in range(n)]
    for i, ss in enumerate(succ):
        for j in ss:
            if not 0 <= j < n:
                raise ValueError(f"successor {j} of activity {i} out of range")
            preds[j].append(i)
    dur = np.asarray(durations, dtype=np.int32)
    caps = np.asarray(capacities, dtype=np.int32)
    dem = np.asarray(demands, dtype=np.int32)
    if dem.shape != (n, len(caps)):
        raise ValueError(f"demands shape {dem.shape} != ({n}, {len(caps)})")
    for arr in (dur, caps, dem):
        arr.setflags(write=False)
    return ProjectInstance(
        name=name,
        n_activities=n,
        n_resources=len(caps),
        durations=dur,
        capacities=caps,
        demands=dem,
        successors=succ,
        predecessors=tuple(tuple(sorted(p)) for p in preds),
    )


# ---------------------------------------------------------------------------
# PSPLIB single-mode (.sm) parsing

def parse_psplib(source: str | TextIO, name: str = "") -> ProjectInstance:
    """Parse a PSPLIB single-mode file into a 0-based ProjectInstance.

    Job 1 becomes activity 0 and job N becomes activity N-1.  Multi-mode
    files are rejected.  Errors carry the 1-based line number.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = source
    lines = text.splitlines()

    def fail(lineno: int, msg: str) -> PsplibParseError:
        return PsplibParseError(f"line {lineno}: {msg}")

    def find_section(keyword: str) -> int:
        for idx, line in enumerate(lines):
            if keyword in line.upper():
                return idx
        raise PsplibParseError(f"missing section header {keyword!r}")

    def ints(lineno: int, line: str) -> list[int]:
        out = []
        for tok in line.split():
            try:
                out.append(int(tok))
            except ValueError:
                raise fail(lineno + 1, f"non-integer token {tok!r}") from None
        return out

    # Precedence table: jobnr, #modes, #successors, successor list.
    prec_at = find_section("PRECEDENCE RELATIONS")
    succ_by_job: dict[int, list[int]] = {}
    row = prec_at + 1
    while row < len(lines):
        stripped = lines[row].strip()
        if stripped.startswith("***"):
            break
        if not stripped or not stripped[0].isdigit():
            row += 1
            continue
        vals = ints(row, stripped)
        if len(vals) < 3:
            raise fail(row + 1, "precedence row needs jobnr, #modes, #successors")
        job, modes, n_succ = vals[0], vals[1], vals[2]
        if modes != 1:
            raise fail(row + 1, f"job {job} has {modes} modes; only single-mode is supported")
        if len(vals) != 3 + n_succ:
            raise fail(row + 1, f"job {job} lists {len(vals) - 3} successors, expected {n_succ}")
        if job in succ_by_job:
            raise fail(row + 1, f"duplicate precedence row for job {job}")
        succ_by_job[job] = vals[3:]
        row += 1
    if not succ_by_job:
        raise fail(prec_at + 1, "empty PRECEDENCE RELATIONS section")
    n = len(succ_by_job)
    if sorted(succ_by_job) != list(range(1, n + 1)):
        raise fail(prec_at + 1, f"precedence table does not cover jobs 1..{n}")
    for job, succs in succ_by_job.items():
        for s in succs:
            if not 1 <= s <= n:
                raise fail(prec_at + 1, f"successor {s} of job {job} out of range 1..{n}")

    # Requests/durations table: jobnr, mode, duration, demand per resource.
    req_at = find_section("REQUESTS/DURATIONS")
    durations = [0] * n
    demand_rows: dict[int, list[int]] = {}
    row = req_at + 1
    while row < len(lines):
        stripped = lines[row].strip()
        if stripped.startswith("***"):
            break
        if not stripped or not stripped[0].isdigit():
            row += 1
            continue
        vals = ints(row, stripped)
        if len(vals) < 3:
            raise fail(row + 1, "request row needs jobnr, mode, duration")
        job, mode, dur = vals[0], vals[1], vals[2]
        if mode != 1:
            raise fail(row + 1, f"job {job} uses mode {mode}; only single-mode is supported")
        if not 1 <= job <= n:
            raise fail(row + 1, f"job {job} out of range 1..{n}")
        if job in demand_rows:
            raise fail(row + 1, f"duplicate request row for job {job}")
        durations[job - 1] = dur
        demand_rows[job] = vals[3:]
        row += 1
    if sorted(demand_rows) != list(range(1, n + 1)):
        raise fail(req_at + 1, f"requests table does not cover jobs 1..{n}")

    # Capacities: first integer row after the header.
    avail_at = find_section("RESOURCEAVAILABILITIES")
    capacities: list[int] = []
    for row in range(avail_at + 1, len(lines)):
        stripped = lines[row].strip()
        if not stripped or stripped.startswith("***"):
            continue
        if not stripped[0].isdigit():
            continue
        capacities = ints(row, stripped)
        break
    if not capacities:
        raise fail(avail_at + 1, "no capacity row under RESOURCEAVAILABILITIES")
    m = len(capacities)
    for job, dem in demand_rows.items():
        if len(dem) != m:
            raise fail(req_at + 1, f"job {job} lists {len(dem)} demands, expected {m}")

    return make_instance(
        name=name,
        durations=durations,
        capacities=capacities,
        demands=[demand_rows[j] for j in range(1, n + 1)],
        successors=[[s - 1 for s in succ_by_job[j]] for j in range(1, n + 1)],
    )


def load_psplib(path: str | Path) -> ProjectInstance:
    """Parse a .sm file from disk; the instance is named after the file stem."""
    path = Path(path)
    with io.open(path, "r", encoding="latin-1") as handle:
        return parse_psplib(handle, name=path.stem)


def write_psplib(instance: ProjectInstance) -> str:
    """Serialize back to the single-mode format (parse/write round-trips)."""
    n = instance.n_activities
    m = instance.n_resources
    lines = [
        "*" * 72,
        f"file with basedata            : {instance.name or 'instance'}.bas",
        "initial value random generator: 0",
        "*" * 72,
        "projects                      :  1",
        f"jobs (incl. supersource/sink ):  {n}",
        f"horizon                       :  {int(instance.durations.sum())}",
        "RESOURCES",
        f"  - renewable                 :  {m}   R",
        "*" * 72,
        "PRECEDENCE RELATIONS:",
        "jobnr.    #modes  #successors   successors",
    ]
    for i in range(n):
        succs = "   ".join(str(j + 1) for j in instance.successors[i])
        lines.append(f"{i + 1:4d}        1   {len(instance.successors[i]):10d}"
                     f"           {succs}".rstrip())
    lines += ["*" * 72, "REQUESTS/DURATIONS:",
              "jobnr. mode duration  " + "  ".join(f"R {k + 1}" for k in range(m)),
              "-" * 72]
    for i in range(n):
        demands = "  ".join(f"{int(instance.demands[i, k]):4d}" for k in range(m))
        lines.append(f"{i + 1:4d}    1   {int(instance.durations[i]):5d}   {demands}")
    lines += ["*" * 72, "RESOURCEAVAILABILITIES:",
              "  " + "  ".join(f"R {k + 1}" for k in range(m)),
              "  " + "  ".join(str(int(c)) for c in instance.capacities),
              "*" * 72]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Validation and graph-derived quantities

def validate(instance: ProjectInstance) -> list[str]:
    """Return a description of every violated instance invariant (empty = valid)."""
    violations: list[str] = []
    n = instance.n_activities
    last = n - 1

    for dummy in (0, last):
        if instance.durations[dummy] != 0:
            violations.append(f"dummy activity {dummy} has nonzero duration "
                              f"{int(instance.durations[dummy])}")
        for k in range(instance.n_resources):
            if instance.demands[dummy, k] != 0:
                violations.append(f"dummy activity {dummy} demands resource {k}")

    for i in range(n):
        for k in range(instance.n_resources):
            if instance.demands[i, k] > instance.capacities[k]:
                violations.append(
                    f"activity {i} demands {int(instance.demands[i, k])} of resource {k} "
                    f"with capacity {int(instance.capacities[k])}")
        if instance.durations[i] < 0:
            violations.append(f"activity {i} has negative duration")

    # predecessors must mirror successors exactly
    mirror: list[list[int]] = [[] for _ in range(n)]
    for i, succs in enumerate(instance.successors):
        for j in succs:
            mirror[j].append(i)
    for j in range(n):
        if tuple(sorted(mirror[j])) != instance.predecessors[j]:
            violations.append(f"predecessors of activity {j} do not mirror the edge set")

    order, cycle = _topological_order(instance)
    if cycle:
        violations.append("precedence graph has a cycle through activities "
                          + ",".join(str(i) for i in cycle))
        return violations

    reach_fwd = _reachable_from(instance.successors, 0)
    reach_bwd = _reachable_from(instance.predecessors, last)
    for i in range(n):
        if i not in reach_fwd:
            violations.append(f"activity {i} unreachable from activity 0")
        if i not in reach_bwd:
            violations.append(f"activity {i} cannot reach activity {last}")
    return violations


def _topological_order(instance: ProjectInstance) -> tuple[list[int], list[int]]:
    """Kahn's algorithm; returns (order, leftover-nodes) where leftovers mark a cycle."""
    n = instance.n_activities
    indeg = [len(instance.predecessors[i]) for i in range(n)]
    ready = [i for i in range(n) if indeg[i] == 0]
    order: list[int] = []
    while ready:
        i = ready.pop()
        order.append(i)
        for j in instance.successors[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
    leftovers = [i for i in range(n) if indeg[i] > 0]
    return order, leftovers


def _reachable_from(adjacency: Sequence[Sequence[int]], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        for j in adjacency[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return seen


def critical_path_length(instance: ProjectInstance) -> int:
    """Longest 0 -> N-1 path with edge (i, j) weighted by duration of i.

    Equals the optimal makespan when resources never bind.
    """
    order, cycle = _topological_order(instance)
    if cycle:
        raise ValueError("instance has a precedence cycle")
    dist = [0] * instance.n_activities
    for i in order:
        di = int(instance.durations[i])
        for j in instance.successors[i]:
            if dist[i] + di > dist[j]:
                dist[j] = dist[i] + di
    return dist[instance.n_activities - 1]


def makespan_upper_bound(instance: ProjectInstance) -> int:
    """Sum of all durations: the fully serialized schedule length."""
    return int(instance.durations.sum())


def compute_levels(instance: ProjectInstance) -> list[list[int]]:
    """Group activities by longest unit-weight path from activity 0.

    Level 0 is {0}; the last level is {N-1}; every edge points to a
    strictly later level.
    """
    order, cycle = _topological_order(instance)
    if cycle:
        raise ValueError("instance has a precedence cycle")
    depth = [0] * instance.n_activities
    for i in order:
        for j in instance.successors[i]:
            if depth[i] + 1 > depth[j]:
                depth[j] = depth[i] + 1
    levels: list[list[int]] = [[] for _ in range(max(depth) + 1)]
    for i, d in enumerate(depth):
        levels[d].append(i)
    for group in levels:
        group.sort()
    return levels


def extract_features(instance: ProjectInstance) -> InstanceFeatures:
    """Attribute vector (capacities, durations, branching, critical path)."""
    caps = instance.capacities
    return InstanceFeatures(
        min_capacity=int(caps.min()),
        avg_capacity=float(caps.sum()) / instance.n_resources,
        max_capacity=int(caps.max()),
        avg_duration=float(instance.durations.sum()) / instance.n_activities,
        avg_branch_factor=instance.n_edges / instance.n_activities,
        critical_path_length=critical_path_length(instance),
    )
