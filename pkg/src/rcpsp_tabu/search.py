"""A single tabu-search worker: neighborhood evaluation, best-move selection
with aspiration, diversification, and the per-worker iteration loop.

Workers own all of their state (order, tabu structures, scratch buffers,
rng); the shared working set is touched only through the cooperation
module's exchange transaction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels, moves
from .evaluator import EvalScratch
from .instance import ProjectInstance
from .selector import EvalMode
from .tabu import TabuState


@dataclass
class SearchParams:
    """Knobs of one run; defaults follow the benchmark protocol per size class."""

    total_iters: int = 10000
    workers: int = 1
    delta: int = 60
    tabu_size: int = 250
    phi_steps: int = 20
    phi_max: int = 3
    pool_size: int = 16
    seed: int = 0
    mode: EvalMode = EvalMode.TIME
    collect_trace: bool = False
    # re-measurement cadence for the dynamic mode controller, in iterations
    measure_window: int = 1000

    @property
    def block_iters(self) -> int:
        """Iterations per worker; total work stays worker-count-independent."""
        return max(1, -(-self.total_iters // self.workers))

    @staticmethod
    def defaults_for(n_activities: int, **overrides) -> "SearchParams":
        """Size-class defaults: delta 30/60 and tabu size 60/250/600/800."""
        if n_activities <= 32:
            delta, tabu = 30, 60
        elif n_activities <= 62:
            delta, tabu = 60, 250
        elif n_activities <= 92:
            delta, tabu = 60, 600
        else:
            delta, tabu = 60, 800
        base = {"delta": delta, "tabu_size": tabu}
        base.update(overrides)
        return SearchParams(**base)


def select_best_move(feasible_moves: np.ndarray, cmaxes: np.ndarray,
                     tabu: TabuState, best_cmax: int,
                     ) -> tuple[tuple[int, int], int] | None:
    """Minimum-makespan move among the non-tabu ones plus any tabu move that
    beats `best_cmax` (aspiration).  Ties go to the smallest (u, v).

    Returns ((u, v), cmax) or None when every move is tabu and none aspirates.
    """
    idx = kernels.select_move(feasible_moves, len(feasible_moves),
                              np.asarray(cmaxes, dtype=np.int32),
                              tabu.counts, best_cmax)
    if idx < 0:
        return None
    u, v = int(feasible_moves[idx, 0]), int(feasible_moves[idx, 1])
    return (u, v), int(cmaxes[idx])


def diversify(order: np.ndarray, phi_steps: int, instance: ProjectInstance,
              rng: np.random.Generator) -> np.ndarray:
    """Apply `phi_steps` uniformly chosen feasible swaps, one after another.

    Steps with an empty feasible set are skipped (a fully serialized chain
    has no feasible swap at all).  The result is always topological.
    """
    work = np.array(order, dtype=np.int32)
    if phi_steps <= 0:
        return work
    all_moves = moves.generate_reduced_neighborhood(work, len(work))
    for _ in range(phi_steps):
        feasible = moves.filter_infeasible(all_moves, work, instance)
        if len(feasible) == 0:
            continue
        u, v = feasible[rng.integers(len(feasible))]
        work[u], work[v] = work[v], work[u]
    return work


@dataclass
class WorkerStats:
    iterations: int = 0
    evaluations: int = 0
    exchanges: int = 0
    diversifications: int = 0
    forced_tabu_picks: int = 0
    trace: list[np.ndarray] = field(default_factory=list)


class Worker:
    """State of one search worker between exchanges with the working set."""

    def __init__(self, instance: ProjectInstance, params: SearchParams,
                 index: int, mode: EvalMode, moves_all: np.ndarray,
                 floor_cmax: int):
        self.instance = instance
        self.params = params
        self.index = index
        self.mode = mode
        self.moves_all = moves_all
        self.floor_cmax = floor_cmax
        self.rng = np.random.default_rng(params.seed ^ index)
        self.tabu = TabuState(instance.n_activities, params.tabu_size)
        self.scratch = EvalScratch(instance)
        self.moves_buf = np.empty_like(moves_all)
        self.cmax_buf = np.empty(max(1, len(moves_all)), dtype=np.int32)
        self.best_order = np.empty(instance.n_activities, dtype=np.int32)
        self.stats = WorkerStats()
        # filled by the exchange transaction
        self.entry_index = -1
        self.adopted_cmax = 0
        self.granted = 0
        self.improved = False
        self.local_best_cmax = 0
        self.used_iterations = 0

    def evaluate_current(self, order: np.ndarray) -> int:
        arrays = self.instance.kernel_arrays
        cmax = kernels.evaluate_order(
            order, arrays.durations, arrays.demands, arrays.capacities,
            arrays.pred_ptr, arrays.pred_dat, int(self.mode), arrays.horizon,
            self.scratch.starts, self.scratch.cap_state, self.scratch.copy_buf,
            self.scratch.tau, arrays.horizon)
        self.stats.evaluations += 1
        return int(cmax)

    def run_adopted(self, order: np.ndarray, budget: int,
                    best_known_cmax: int) -> None:
        """Search from the adopted order until improvement or budget end.

        Leaves `order` mutated to the last accepted solution; the best one
        seen lands in `best_order` / `local_best_cmax`.
        """
        arrays = self.instance.kernel_arrays
        start_cmax = self.evaluate_current(order)
        self.best_order[:] = order
        trace = np.zeros(budget, dtype=np.int32)
        iters, evals, improved, local_best, _cur, head, forced = kernels.run_chunk(
            order, arrays.durations, arrays.demands, arrays.capacities,
            arrays.pred_ptr, arrays.pred_dat, arrays.adjacency,
            self.moves_all, int(self.mode), arrays.horizon,
            self.tabu.entries, self.tabu.counts, self.tabu.head,
            budget, self.adopted_cmax, start_cmax, best_known_cmax,
            self.floor_cmax,
            self.best_order, self.scratch.starts, self.scratch.cap_state,
            self.scratch.copy_buf, self.scratch.tau,
            self.moves_buf, self.cmax_buf, trace)
        self.tabu.head = int(head)
        self.used_iterations = int(iters)
        self.improved = bool(improved)
        self.local_best_cmax = int(local_best)
        self.stats.iterations += int(iters)
        self.stats.evaluations += int(evals)
        self.stats.forced_tabu_picks += int(forced)
        if self.params.collect_trace:
            self.stats.trace.append(trace[:iters].copy())


def run_worker(worker: Worker, working_set) -> None:
    """Worker main loop: exchange with the pool, then search the grant away.

    Terminates when the pool stops granting iterations (total budget spent
    or the global best hit the critical path).
    """
    from .cooperation import exchange  # local import to avoid a module cycle

    while True:
        adoption = exchange(worker, working_set)
        if adoption is None:
            return
        order, grant, best_known, needs_diversify = adoption
        if needs_diversify:
            order = diversify(order, worker.params.phi_steps, worker.instance,
                              worker.rng)
            worker.stats.diversifications += 1
        worker.stats.exchanges += 1
        worker.run_adopted(order, grant, best_known)
