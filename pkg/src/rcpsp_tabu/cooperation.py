"""Shared working set of solutions, the exchange protocol and the orchestrator.

The working set is the only mutable structure shared between workers.  One
coarse lock guards every transaction; a transaction is a write-back of an
improved solution plus the adoption of the next entry (round-robin), so a
reader of the global best is stale by at most one transaction.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import moves
from .evaluator import (EvalScratch, Schedule, check_schedule_feasible, evaluate,
                        forward_backward_improve)
from .instance import ProjectInstance, critical_path_length, extract_features
from .search import SearchParams, Worker, run_worker
from .selector import DEFAULT_RULES, EvalMode, decide_dynamic, decide_static


@dataclass
class WorkingSetEntry:
    """One shared solution: order, makespan, tabu snapshot and usage counters."""

    order: np.ndarray
    cmax: int
    tabu_entries: np.ndarray
    tabu_head: int
    iter_count: int = 0                  # iterations invested in this solution
    reads_without_improvement: int = 0
    mode: EvalMode = EvalMode.TIME       # mode under which cmax was computed


def assigned_iterations(entry: WorkingSetEntry, block_iters: int,
                        best_cmax: int) -> int:
    """Iteration budget for a freshly adopted entry.

    Scales block_iters/5 (so every worker reads at least five solutions) by
    a quality term rewarding makespans close to the global best and an
    intactness term rewarding solutions that have seen little search yet.
    """
    quality = 0.8 * math.exp(-100.0 * (entry.cmax / best_cmax - 1.0))
    intactness = 0.2 * math.exp(-4.0 * (entry.iter_count / block_iters))
    return math.floor((block_iters / 5.0) * (quality + intactness))


class WorkingSet:
    """|F| entries plus the global best, guarded by one lock."""

    def __init__(self, entries: list[WorkingSetEntry], total_iters: int,
                 floor_cmax: int):
        if not entries:
            raise ValueError("working set needs at least one entry")
        self.entries = entries
        self.lock = threading.Lock()
        self.cursor = 0
        self.total_iters = total_iters
        self.floor_cmax = floor_cmax
        self.planned = 0                 # iterations granted, adjusted on return
        self.consumed = 0                # iterations actually executed
        self.stop = False
        self.grant_cap = 0               # 0 = uncapped; used by dynamic mode runs
        self.mode_controller = None
        best = min(range(len(entries)), key=lambda i: entries[i].cmax)
        self.best_cmax = entries[best].cmax
        self.best_order = entries[best].order.copy()
        self.best_mode = entries[best].mode
        if self.best_cmax <= floor_cmax:
            self.stop = True

    def _assert_pool_min(self) -> None:
        pool_min = min(entry.cmax for entry in self.entries)
        assert self.best_cmax <= pool_min, (
            f"global best {self.best_cmax} above pool minimum {pool_min}")


def exchange(worker: Worker, ws: WorkingSet):
    """One atomic transaction: write back an improvement, adopt the next entry.

    Returns (order copy, granted iterations, best-known cmax, diversify flag)
    or None when the run is over.  The worker must leave its chunk results in
    (improved, best_order, local_best_cmax, used_iterations, tabu).
    """
    with ws.lock:
        if worker.entry_index >= 0:
            ws.planned -= max(0, worker.granted - worker.used_iterations)
            ws.consumed += worker.used_iterations
            if worker.improved:
                entry = ws.entries[worker.entry_index]
                entry.order = worker.best_order.copy()
                entry.cmax = worker.local_best_cmax
                entry.tabu_entries, entry.tabu_head = worker.tabu.snapshot()
                entry.iter_count += worker.used_iterations
                entry.reads_without_improvement = 0
                entry.mode = worker.mode
                if worker.local_best_cmax < ws.best_cmax:
                    ws.best_cmax = worker.local_best_cmax
                    ws.best_order = worker.best_order.copy()
                    ws.best_mode = worker.mode
            else:
                ws.entries[worker.entry_index].iter_count += worker.used_iterations
            worker.improved = False
            worker.entry_index = -1
        ws._assert_pool_min()

        if ws.best_cmax <= ws.floor_cmax:
            ws.stop = True
        if ws.stop or ws.planned >= ws.total_iters:
            return None

        index = ws.cursor % len(ws.entries)
        ws.cursor += 1
        entry = ws.entries[index]
        entry.reads_without_improvement += 1
        needs_diversify = entry.reads_without_improvement > worker.params.phi_max
        grant = max(1, assigned_iterations(entry, worker.params.block_iters,
                                           ws.best_cmax))
        if ws.grant_cap > 0:
            grant = min(grant, ws.grant_cap)
        grant = min(grant, ws.total_iters - ws.planned)
        ws.planned += grant

        worker.entry_index = index
        worker.adopted_cmax = entry.cmax
        worker.granted = grant
        worker.used_iterations = 0
        worker.tabu.load(entry.tabu_entries, entry.tabu_head)
        if ws.mode_controller is not None:
            worker.mode = ws.mode_controller.mode_for(ws.consumed)
        return entry.order.copy(), grant, ws.best_cmax, needs_diversify


def initialize_working_set(instance: ProjectInstance, params: SearchParams,
                           rng: np.random.Generator, mode: EvalMode,
                           floor_cmax: int, counters: dict | None = None,
                           ) -> WorkingSet:
    """Level-shuffled initial orders; every second one gets forward-backward
    improvement; all evaluated under `mode` with empty tabu lists."""
    scratch = EvalScratch(instance)
    entries: list[WorkingSetEntry] = []
    for index in range(params.pool_size):
        order = moves.initial_order(instance, shuffle=True, rng=rng)
        if index % 2 == 0:
            order, _ = forward_backward_improve(instance, order, int(mode), scratch)
        schedule = evaluate(order, instance, int(mode), scratch)
        entries.append(WorkingSetEntry(
            order=np.asarray(order, dtype=np.int32),
            cmax=schedule.cmax,
            tabu_entries=np.zeros((params.tabu_size, 2), dtype=np.int32),
            tabu_head=0,
            mode=mode,
        ))
    if counters is not None:
        counters["evaluations"] = counters.get("evaluations", 0) + scratch.evaluations
    return WorkingSet(entries, params.total_iters, floor_cmax)


class DynamicModeController:
    """Re-times both evaluation modes every `window` consumed iterations."""

    def __init__(self, instance: ProjectInstance, order: np.ndarray,
                 delta: int, window: int):
        self.instance = instance
        self.order = np.asarray(order, dtype=np.int32)
        self.delta = delta
        self.window = max(1, window)
        self.next_measure_at = 0
        self.mode = EvalMode.TIME
        self.lock = threading.Lock()
        self.measurements = 0

    def mode_for(self, consumed: int) -> EvalMode:
        with self.lock:
            if consumed >= self.next_measure_at:
                self.mode = decide_dynamic(self.instance, self.order, self.delta)
                self.next_measure_at = consumed + self.window
                self.measurements += 1
            return self.mode


@dataclass
class RunStats:
    best_cmax: int
    schedule: Schedule
    feasible: bool
    iterations: int
    evaluations: int
    wall_time: float
    exchanges: int
    diversifications: int
    forced_tabu_picks: int
    workers: int
    mode: str
    stop_reason: str
    critical_path: int
    traces: list[np.ndarray] = field(default_factory=list)


def choose_mode(instance: ProjectInstance, params: SearchParams,
                requested: str, rules=DEFAULT_RULES) -> tuple[EvalMode, DynamicModeController | None]:
    """Resolve an --eval request to a concrete mode and optional controller.

    'auto-rule' applies the static decision rules; 'auto-measure' measures
    on this machine and, for single-worker runs, keeps re-measuring every
    `measure_window` iterations.
    """
    if requested == "capacity":
        return EvalMode.CAPACITY, None
    if requested == "time":
        return EvalMode.TIME, None
    if requested == "auto-rule":
        return decide_static(extract_features(instance), rules), None
    if requested == "auto-measure":
        probe = moves.initial_order(instance, shuffle=False)
        if params.workers == 1:
            controller = DynamicModeController(instance, probe, params.delta,
                                               params.measure_window)
            return controller.mode_for(0), controller
        return decide_dynamic(instance, probe, params.delta), None
    raise ValueError(f"unknown evaluator request {requested!r}")


def _warmup_kernels(instance: ProjectInstance, params: SearchParams,
                    mode: EvalMode, moves_all: np.ndarray, floor: int) -> None:
    """Trigger kernel compilation outside the timed region (cached afterwards)."""
    probe = Worker(instance, params, 0, mode, moves_all, floor)
    order = moves.initial_order(instance, shuffle=False)
    probe.adopted_cmax = 1 << 30
    probe.run_adopted(order, 1, 1 << 30)


def orchestrate(instance: ProjectInstance, params: SearchParams,
                mode: EvalMode | None = None,
                mode_controller: DynamicModeController | None = None) -> RunStats:
    """Launch the workers over a shared working set and return the best result.

    Stops when the granted iterations reach the total budget or the global
    best equals the critical path length.
    """
    if mode is None:
        mode = params.mode
    floor = critical_path_length(instance)
    rng = np.random.default_rng(params.seed)
    moves_all = moves.generate_reduced_neighborhood(
        np.arange(instance.n_activities, dtype=np.int32), params.delta)
    _warmup_kernels(instance, params, mode, moves_all, floor)

    counters: dict = {}
    tick = time.perf_counter()
    ws = initialize_working_set(instance, params, rng, mode, floor, counters)
    if mode_controller is not None and params.workers == 1:
        ws.mode_controller = mode_controller
        ws.grant_cap = params.measure_window

    workers = [Worker(instance, params, index, mode, moves_all, floor)
               for index in range(params.workers)]
    if not ws.stop:
        if params.workers == 1:
            run_worker(workers[0], ws)
        else:
            threads = [threading.Thread(target=run_worker, args=(w, ws),
                                        name=f"search-worker-{w.index}")
                       for w in workers]
            for thread in threads:
                thread.start()
            for thread in threads:
                thread.join()
    wall = time.perf_counter() - tick

    schedule = evaluate(ws.best_order, instance, int(ws.best_mode))
    feasible, violations = check_schedule_feasible(instance, schedule)
    assert schedule.cmax == ws.best_cmax, (
        f"stored best {ws.best_cmax} != re-evaluated {schedule.cmax}")
    if violations:
        raise AssertionError(f"best schedule failed the oracle: {violations}")

    traces: list[np.ndarray] = []
    if params.collect_trace:
        for worker in workers:
            traces.extend(worker.stats.trace)
    return RunStats(
        best_cmax=ws.best_cmax,
        schedule=schedule,
        feasible=feasible,
        iterations=ws.consumed,
        evaluations=counters.get("evaluations", 0)
        + sum(w.stats.evaluations for w in workers),
        wall_time=wall,
        exchanges=sum(w.stats.exchanges for w in workers),
        diversifications=sum(w.stats.diversifications for w in workers),
        forced_tabu_picks=sum(w.stats.forced_tabu_picks for w in workers),
        workers=params.workers,
        mode=("dynamic" if ws.mode_controller is not None else EvalMode(mode).name),
        stop_reason=("critical_path" if ws.best_cmax <= floor else "budget"),
        critical_path=floor,
        traces=traces,
    )
