"""Schedule evaluation: both resource bookkeeping schemes, an independent
feasibility oracle, and forward-backward improvement.

The two schemes are speed alternatives, not equivalents: the time-indexed
state can place an activity into an idle gap before already-scheduled work
while the capacity-indexed state cannot, so the same order may evaluate to
different (both feasible) schedules.  Never assert equality across modes.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import kernels
from .instance import ProjectInstance
from .kernels import MODE_CAPACITY, MODE_TIME


@dataclass(frozen=True)
class Schedule:
    """Start time per activity id plus the resulting makespan."""

    starts: np.ndarray
    cmax: int


class CapacityResourceState:
    """Per resource k: R_k earliest-availability times, kept descending.

    Row k of `levels` uses entries 0..R_k-1; entry [k, R_k - l] is the
    earliest time at which l units of resource k are free.
    """

    def __init__(self, instance: ProjectInstance):
        self.capacities = instance.kernel_arrays.capacities
        r_max = int(self.capacities.max())
        self.levels = np.zeros((instance.n_resources, r_max), dtype=np.int32)
        self.copy_buf = np.zeros(r_max, dtype=np.int32)

    def reset(self) -> None:
        self.levels[:, :] = 0

    def rows_descending(self) -> bool:
        for k, cap in enumerate(self.capacities):
            row = self.levels[k, :cap]
            if np.any(row[1:] > row[:-1]):
                return False
        return True


class TimeResourceState:
    """Per resource k: free units at every time step 0..horizon."""

    def __init__(self, instance: ProjectInstance):
        arrays = instance.kernel_arrays
        self.capacities = arrays.capacities
        self.horizon = arrays.horizon
        self.free = np.empty((instance.n_resources, arrays.horizon + 1), dtype=np.int32)
        self.reset()

    def reset(self) -> None:
        for k in range(len(self.capacities)):
            self.free[k, :] = self.capacities[k]


def cap_earliest_start(state: CapacityResourceState, activity: int,
                       instance: ProjectInstance) -> int:
    """Earliest start the capacity-indexed state allows (0 for no demand)."""
    return int(kernels.cap_earliest_start(
        state.levels, state.capacities, instance.kernel_arrays.demands, activity))


def cap_update(state: CapacityResourceState, activity: int, start: int,
               instance: ProjectInstance) -> None:
    """Record the activity's resource usage; keeps rows descending."""
    if start < cap_earliest_start(state, activity, instance):
        raise ValueError(f"start {start} below the earliest resource start")
    kernels.cap_update(state.levels, state.capacities,
                       instance.kernel_arrays.demands, state.copy_buf,
                       activity, start, int(instance.durations[activity]))


def time_earliest_start(state: TimeResourceState, activity: int, es_prec: int,
                        instance: ProjectInstance) -> int:
    """First start >= es_prec with enough free units through the duration."""
    dur = int(instance.durations[activity])
    start = int(kernels.time_earliest_start(
        state.free, instance.kernel_arrays.demands, activity,
        es_prec, dur, state.horizon))
    if start + dur > state.horizon:
        raise RuntimeError(
            f"no window of length {dur} for activity {activity} before {state.horizon}")
    return start


def time_update(state: TimeResourceState, activity: int, start: int,
                instance: ProjectInstance) -> None:
    """Subtract the activity's demand over [start, start + duration)."""
    dur = int(instance.durations[activity])
    demands = instance.kernel_arrays.demands
    interval = state.free[:, start:start + dur]
    if np.any(interval < demands[activity][:, None]):
        raise ValueError(f"activity {activity} overloads a resource at start {start}")
    kernels.time_update(state.free, demands, activity, start, dur)


class EvalScratch:
    """Reusable buffers for evaluate_order; one per worker, never shared.

    Also counts the schedule generations run through it, for throughput
    reporting.
    """

    def __init__(self, instance: ProjectInstance):
        arrays = instance.kernel_arrays
        r_max = int(arrays.capacities.max())
        m = instance.n_resources
        self.starts = np.zeros(instance.n_activities, dtype=np.int32)
        self.cap_state = np.zeros((m, r_max), dtype=np.int32)
        self.copy_buf = np.zeros(r_max, dtype=np.int32)
        self.tau = np.zeros((m, arrays.horizon + 1), dtype=np.int32)
        self.evaluations = 0


def evaluate(order: np.ndarray, instance: ProjectInstance, mode: int,
             scratch: EvalScratch | None = None) -> Schedule:
    """Serial schedule generation over `order` under the given mode.

    Each activity starts at max(earliest precedence start, earliest resource
    start); the state is updated activity by activity.
    """
    arrays = instance.kernel_arrays
    if scratch is None:
        scratch = EvalScratch(instance)
    cmax = kernels.evaluate_order(
        np.asarray(order, dtype=np.int32), arrays.durations, arrays.demands,
        arrays.capacities, arrays.pred_ptr, arrays.pred_dat, mode,
        arrays.horizon, scratch.starts, scratch.cap_state, scratch.copy_buf,
        scratch.tau, arrays.horizon)
    scratch.evaluations += 1
    return Schedule(starts=scratch.starts.copy(), cmax=int(cmax))


def check_schedule_feasible(instance: ProjectInstance,
                            schedule: Schedule) -> tuple[bool, list[str]]:
    """Independent oracle: precedence inequalities plus a time-usage profile.

    Shares no code with the evaluators; accumulates per-resource usage over
    every occupied time step and compares against the capacities.
    """
    starts = np.asarray(schedule.starts, dtype=np.int64)
    durations = instance.durations.astype(np.int64)
    violations: list[str] = []
    if starts.min() < 0:
        violations.append("negative start time")
    for i, succs in enumerate(instance.successors):
        fin = int(starts[i] + durations[i])
        for j in succs:
            if starts[j] < fin:
                violations.append(
                    f"precedence ({i},{j}) violated: {int(starts[j])} < {fin}")
    horizon = int((starts + durations).max()) if len(starts) else 0
    for k in range(instance.n_resources):
        usage = np.zeros(horizon + 1, dtype=np.int64)
        for i in range(instance.n_activities):
            req = int(instance.demands[i, k])
            if req > 0 and durations[i] > 0:
                usage[starts[i]:starts[i] + durations[i]] += req
        over = np.nonzero(usage > int(instance.capacities[k]))[0]
        if len(over):
            t = int(over[0])
            violations.append(
                f"resource {k} overloaded at t={t}: {int(usage[t])} > "
                f"{int(instance.capacities[k])}")
    if int(schedule.cmax) != int((starts + durations).max()):
        violations.append(
            f"makespan {schedule.cmax} != latest finish {int((starts + durations).max())}")
    return (not violations), violations


# ---------------------------------------------------------------------------
# Forward-backward improvement.

def _priority_topo(n: int, succ_of, indeg_of, key) -> np.ndarray:
    """Topological order preferring small `key`; ties broken by activity id."""
    indeg = [indeg_of(i) for i in range(n)]
    heap = [(key(i), i) for i in range(n) if indeg[i] == 0]
    heapq.heapify(heap)
    out = np.empty(n, dtype=np.int32)
    filled = 0
    while heap:
        _, i = heapq.heappop(heap)
        out[filled] = i
        filled += 1
        for j in succ_of(i):
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(heap, (key(j), j))
    if filled != n:
        raise ValueError("precedence graph has a cycle")
    return out


def forward_backward_improve(instance: ProjectInstance, order: np.ndarray,
                             mode: int, scratch: EvalScratch | None = None,
                             ) -> tuple[np.ndarray, Schedule]:
    """Alternate latest/earliest rescheduling passes while the makespan drops.

    The backward pass runs the same evaluator on the time-reversed project
    (edges flipped, durations kept): right-justifying against the current
    makespan is exactly left-justifying on the reversed time axis.  Orders
    for each pass follow the previous pass's finish times, restricted to be
    topological.  The final order lists activities by start time (ties by
    id).
    """
    arrays = instance.kernel_arrays
    if scratch is None:
        scratch = EvalScratch(instance)
    n = instance.n_activities
    durations = arrays.durations

    def eval_forward(ordr):
        cmax = kernels.evaluate_order(
            ordr, durations, arrays.demands, arrays.capacities,
            arrays.pred_ptr, arrays.pred_dat, mode, arrays.horizon,
            scratch.starts, scratch.cap_state, scratch.copy_buf, scratch.tau,
            arrays.horizon)
        scratch.evaluations += 1
        return scratch.starts.copy(), int(cmax)

    def eval_backward(ordr):
        # reversed project: predecessor lists are the forward successor lists
        cmax = kernels.evaluate_order(
            ordr, durations, arrays.demands, arrays.capacities,
            arrays.succ_ptr, arrays.succ_dat, mode, arrays.horizon,
            scratch.starts, scratch.cap_state, scratch.copy_buf, scratch.tau,
            arrays.horizon)
        scratch.evaluations += 1
        return scratch.starts.copy(), int(cmax)

    succ = instance.successors
    pred = instance.predecessors
    starts, cmax = eval_forward(np.asarray(order, dtype=np.int32))
    while True:
        finish = starts + durations
        # latest-first on the reversed graph = decreasing forward finish
        back_order = _priority_topo(
            n, lambda i: pred[i], lambda i: len(succ[i]),
            lambda i: (-int(finish[i]), i))
        back_starts, _ = eval_backward(back_order)
        back_finish = back_starts + durations
        fwd_order = _priority_topo(
            n, lambda i: succ[i], lambda i: len(pred[i]),
            lambda i: (-int(back_finish[i]), i))
        new_starts, new_cmax = eval_forward(fwd_order)
        if new_cmax < cmax:
            starts, cmax = new_starts, new_cmax
        else:
            break
    final_order = _priority_topo(
        n, lambda i: succ[i], lambda i: len(pred[i]),
        lambda i: (int(starts[i]), i))
    return final_order, Schedule(starts=starts, cmax=cmax)
