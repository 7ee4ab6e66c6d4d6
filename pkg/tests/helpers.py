"""Shared test utilities: random instance generation and independent oracles.

Everything here is deliberately implemented on plain Python structures,
separate from the package's kernels, so tests compare two routes.
"""

from __future__ import annotations

import numpy as np

from rcpsp_tabu import make_instance
from rcpsp_tabu.instance import ProjectInstance


def random_instance(n_real: int, m: int, seed: int, cap_lo: int = 8,
                    cap_hi: int = 14, max_dur: int = 10,
                    demand_density: float = 1.0) -> ProjectInstance:
    """PSPLIB-shaped random project: dummy source/sink, connected DAG."""
    rng = np.random.default_rng(seed)
    n = n_real + 2
    durations = [0] + [int(d) for d in rng.integers(1, max_dur + 1, n_real)] + [0]
    caps = [int(c) for c in rng.integers(cap_lo, cap_hi + 1, m)]
    demands = np.zeros((n, m), dtype=int)
    for i in range(1, n - 1):
        for k in range(m):
            if rng.random() < demand_density:
                demands[i, k] = int(rng.integers(1, caps[k] + 1))
    successors: list[set[int]] = [set() for _ in range(n)]
    for j in range(2, n - 1):
        n_preds = int(rng.integers(1, 3))
        for p in rng.choice(np.arange(1, j), size=min(j - 1, n_preds), replace=False):
            successors[int(p)].add(j)
    has_pred = {j for s in successors for j in s}
    for i in range(1, n - 1):
        if i not in has_pred:
            successors[0].add(i)
        if not successors[i]:
            successors[i].add(n - 1)
    if not successors[0]:
        successors[0].add(1)
    return make_instance(f"rand{n_real}x{m}s{seed}", durations, caps,
                         demands.tolist(), [sorted(s) for s in successors])


def chain_instance(durations_mid: list[int], cap: int = 3) -> ProjectInstance:
    """Total order 0 -> 1 -> ... -> n-1; no swap is ever feasible."""
    n = len(durations_mid) + 2
    durations = [0] + list(durations_mid) + [0]
    demands = [[0]] + [[1] for _ in durations_mid] + [[0]]
    successors = [[i + 1] for i in range(n - 1)] + [[]]
    return make_instance("chain", durations, [cap], demands, successors)


def random_topological_order(instance: ProjectInstance,
                             rng: np.random.Generator) -> np.ndarray:
    """Uniform-ish random linear extension via Kahn with random picks."""
    n = instance.n_activities
    indeg = [len(instance.predecessors[i]) for i in range(n)]
    ready = [i for i in range(n) if indeg[i] == 0]
    order = np.empty(n, dtype=np.int32)
    for pos in range(n):
        pick = int(rng.integers(len(ready)))
        act = ready.pop(pick)
        order[pos] = act
        for j in instance.successors[act]:
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
    return order


# ---------------------------------------------------------------------------
# Independent oracles

def levels_oracle(instance: ProjectInstance) -> list[list[int]]:
    """Longest unit-weight distance from the source by fixpoint iteration."""
    n = instance.n_activities
    depth = [0] * n
    changed = True
    while changed:
        changed = False
        for i in range(n):
            for j in instance.successors[i]:
                if depth[i] + 1 > depth[j]:
                    depth[j] = depth[i] + 1
                    changed = True
    groups: dict[int, list[int]] = {}
    for i, d in enumerate(depth):
        groups.setdefault(d, []).append(i)
    return [sorted(groups[d]) for d in sorted(groups)]


def swap_feasible_oracle(instance: ProjectInstance, order: np.ndarray,
                         u: int, v: int) -> bool:
    """Apply the swap literally and re-check the topological invariant."""
    swapped = order.copy()
    swapped[u], swapped[v] = order[v], order[u]
    position = {int(act): pos for pos, act in enumerate(swapped)}
    for i, succs in enumerate(instance.successors):
        for j in succs:
            if position[i] >= position[j]:
                return False
    return True


def brute_force_feasible_moves(instance: ProjectInstance, order: np.ndarray,
                               delta: int) -> set[tuple[int, int]]:
    n = len(order)
    return {
        (u, v)
        for u in range(1, n - 2)
        for v in range(u + 1, min(u + delta, n - 2) + 1)
        if swap_feasible_oracle(instance, order, u, v)
    }


def exact_optimum(instance: ProjectInstance, limit: int = 10**9) -> int:
    """Branch-and-bound over all linear extensions, earliest-start placement.

    For makespan some active schedule is optimal and serial generation over
    all precedence-feasible orders reaches every active schedule, so the
    minimum found is the true optimum.  Only for small instances.
    """
    n = instance.n_activities
    durations = [int(d) for d in instance.durations]
    m = instance.n_resources
    caps = [int(c) for c in instance.capacities]
    demands = instance.demands.tolist()
    preds = instance.predecessors
    horizon = sum(durations) + 1
    free = [[caps[k]] * (horizon + 1) for k in range(m)]
    best = [limit]

    def earliest(es: int, dur: int, dem: list[int]) -> int:
        if dur == 0:
            return es
        t, run = es, 0
        while run < dur:
            if all(free[k][t + run] >= dem[k] for k in range(m)):
                run += 1
            else:
                t, run = t + run + 1, 0
        return t

    scheduled: set[int] = set()
    starts = [0] * n

    def dfs(partial_cmax: int) -> None:
        if partial_cmax >= best[0]:
            return
        if len(scheduled) == n:
            best[0] = partial_cmax
            return
        for i in range(n):
            if i in scheduled or any(p not in scheduled for p in preds[i]):
                continue
            es = max((starts[p] + durations[p] for p in preds[i]), default=0)
            s = earliest(es, durations[i], demands[i])
            for k in range(m):
                for t in range(s, s + durations[i]):
                    free[k][t] -= demands[i][k]
            scheduled.add(i)
            starts[i] = s
            dfs(max(partial_cmax, s + durations[i]))
            scheduled.discard(i)
            for k in range(m):
                for t in range(s, s + durations[i]):
                    free[k][t] += demands[i][k]

    dfs(0)
    return best[0]


class ReferenceTabuModel:
    """Naive queue-with-multiset model of the tabu list semantics."""

    def __init__(self, size: int):
        self.size = size
        self.queue: list[tuple[int, int]] = []

    def add(self, u: int, v: int) -> None:
        if len(self.queue) == self.size:
            self.queue.pop(0)
        self.queue.append((u, v))

    def is_tabu(self, u: int, v: int) -> bool:
        return (u, v) in self.queue


def backend_fingerprint() -> dict:
    """Deterministic digest of kernel behavior, for numba/python comparison.

    Runs evaluation (both modes), filtering, improvement and a short seeded
    search on fixed inputs; the result depends only on kernel semantics, so
    both backends must produce identical digests.
    """
    from rcpsp_tabu import (SearchParams, evaluate, filter_infeasible,
                            forward_backward_improve,
                            generate_reduced_neighborhood, orchestrate)
    out: dict = {}
    rng = np.random.default_rng(2024)
    evals = []
    filters = []
    for seed in range(6):
        inst = random_instance(12, 2, seed=seed)
        order = random_topological_order(inst, rng)
        for mode in (0, 1):
            sched = evaluate(order, inst, mode)
            evals.append([sched.cmax] + sched.starts.tolist())
        moves = generate_reduced_neighborhood(order, 8)
        filters.append(filter_infeasible(moves, order, inst).tolist())
        improved, sched = forward_backward_improve(inst, order, 1)
        evals.append([sched.cmax] + improved.tolist())
    out["evals"] = evals
    out["filters"] = filters
    inst = random_instance(14, 3, seed=99)
    params = SearchParams.defaults_for(16, total_iters=200, workers=1,
                                       seed=5, collect_trace=True)
    stats = orchestrate(inst, params)
    out["search_best"] = stats.best_cmax
    out["search_evals"] = stats.evaluations
    out["search_trace"] = [int(x) for chunk in stats.traces for x in chunk]
    return out
