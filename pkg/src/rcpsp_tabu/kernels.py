"""Hot numeric kernels: schedule evaluation, move filtering, tabu updates.

Each kernel is written once as a plain function over numpy arrays and
compiled with numba's ``@njit(cache=True, nogil=True)`` when the "numba"
backend is active.  Because the compiled kernels release the GIL, search
workers running them in separate threads execute truly in parallel.

Backend selection (``RCPSP_TABU_BACKEND`` environment variable):

* ``numba`` -- require numba, fail loudly if it is missing;
* ``python`` -- force the uncompiled fallback (same code, interpreted);
* unset / ``auto`` -- numba when importable, fallback otherwise.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

MODE_CAPACITY = 0
MODE_TIME = 1

_ENV_VAR = "RCPSP_TABU_BACKEND"


def _pick_backend() -> str:
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"
    if choice in ("python", "numpy"):
        return "python"
    if choice == "numba":
        import numba  # noqa: F401 -- fail loudly when explicitly requested
        return "numba"
    if choice != "auto":
        raise ValueError(f"{_ENV_VAR}={choice!r} not understood; use 'numba' or 'python'")
    try:
        import numba  # noqa: F401
    except ImportError:
        warnings.warn("numba is not importable; using the interpreted kernel fallback",
                      stacklevel=2)
        return "python"
    return "numba"


BACKEND = _pick_backend()

if BACKEND == "numba":
    from numba import njit

    def _jit(func):
        return njit(cache=True, nogil=True)(func)
else:
    def _jit(func):
        return func


def python_version(func):
    """The interpreted body of a kernel (the kernel itself on the fallback)."""
    return getattr(func, "py_func", func)


# ---------------------------------------------------------------------------
# Capacity-indexed resource state: per resource k an array of length R_k whose
# entry c_k[R_k - l] is the earliest time at which l units are free, kept in
# descending order.

@_jit
def cap_earliest_start(cap_state, capacities, demands, act):
    """Earliest start allowed by the capacity-indexed state (0 if no demand)."""
    es = 0
    for k in range(capacities.shape[0]):
        req = demands[act, k]
        if req > 0:
            t = cap_state[k, capacities[k] - req]
            if t > es:
                es = t
    return es


@_jit
def cap_update(cap_state, capacities, demands, copy_buf, act, start, dur):
    """Consume demand*duration effort per resource via the shifted-copy scheme.

    Preserves the descending order of each row; O(M * R_max).
    """
    for k in range(capacities.shape[0]):
        req = demands[act, k]
        effort = req * dur
        if effort > 0:
            res_idx = 0
            copy_idx = 0
            new_time = start + dur
            while effort > 0 and res_idx < capacities[k]:
                if cap_state[k, res_idx] < new_time:
                    if copy_idx >= req:
                        new_time = copy_buf[copy_idx - req]
                    floor = cap_state[k, res_idx]
                    if floor < start:
                        floor = start
                    diff = new_time - floor
                    if effort - diff > 0:
                        effort -= diff
                        copy_buf[copy_idx] = cap_state[k, res_idx]
                        copy_idx += 1
                        cap_state[k, res_idx] = new_time
                    else:
                        cap_state[k, res_idx] = floor + effort
                        effort = 0
                res_idx += 1


# ---------------------------------------------------------------------------
# Time-indexed resource state: per resource k an array tau_k of free units
# indexed by time, 0 <= t <= horizon.

@_jit
def time_earliest_start(tau, demands, act, es_prec, dur, horizon):
    """First t >= es_prec such that [t, t+dur) has enough free units everywhere.

    Returns es_prec for zero-duration activities.  If the scan exhausts the
    horizon the returned window does not fit; callers treat that as an
    internal error (it cannot happen while the horizon is the duration sum).
    """
    load = 0
    t = es_prec
    while t < horizon and load < dur:
        enough = True
        for k in range(tau.shape[0]):
            if tau[k, t] < demands[act, k]:
                load = 0
                enough = False
        if enough:
            load += 1
        t += 1
    return t - load


@_jit
def time_update(tau, demands, act, start, dur):
    """Subtract the activity's demand on [start, start+dur) for every resource."""
    for k in range(tau.shape[0]):
        req = demands[act, k]
        if req > 0:
            for t in range(start, start + dur):
                tau[k, t] -= req


# ---------------------------------------------------------------------------
# Serial schedule generation over an activity order.

@_jit
def evaluate_order(order, durations, demands, capacities, pred_ptr, pred_dat,
                   mode, horizon, starts, cap_state, copy_buf, tau,
                   reset_upto):
    """Schedule activities in `order` at their earliest feasible start.

    Fills `starts` (indexed by activity id) and returns the makespan.
    `mode` selects the resource bookkeeping: MODE_CAPACITY or MODE_TIME.
    The scratch arrays are reset here, so one set per worker suffices.
    `reset_upto` bounds the time-state reset: it must be at least the
    previous evaluation's makespan on this scratch (pass `horizon` when
    unsure); cells above it were never touched and still hold R_k.
    """
    n = order.shape[0]
    m = capacities.shape[0]
    if mode == MODE_CAPACITY:
        cap_state[:, :] = 0
    else:
        top = reset_upto if reset_upto < horizon else horizon
        for k in range(m):
            tau[k, :top + 1] = capacities[k]
    cmax = 0
    for pos in range(n):
        act = order[pos]
        dur = durations[act]
        es_prec = 0
        for e in range(pred_ptr[act], pred_ptr[act + 1]):
            pred = pred_dat[e]
            fin = starts[pred] + durations[pred]
            if fin > es_prec:
                es_prec = fin
        if mode == MODE_CAPACITY:
            es_res = cap_earliest_start(cap_state, capacities, demands, act)
            start = es_prec if es_prec > es_res else es_res
            cap_update(cap_state, capacities, demands, copy_buf, act, start, dur)
        else:
            start = time_earliest_start(tau, demands, act, es_prec, dur, horizon)
            time_update(tau, demands, act, start, dur)
        starts[act] = start
        fin = start + dur
        if fin > cmax:
            cmax = fin
    return cmax


# ---------------------------------------------------------------------------
# Swap moves.

@_jit
def move_feasible(adjacency, order, u, v):
    """True iff swapping positions u < v cannot break a precedence.

    The activity at u must have no successor at positions u+1..v and the
    activity at v no predecessor at positions u..v-1.
    """
    wu = order[u]
    for x in range(u + 1, v + 1):
        if adjacency[wu, order[x]]:
            return False
    wv = order[v]
    for x in range(u, v):
        if adjacency[order[x], wv]:
            return False
    return True


@_jit
def filter_moves(adjacency, order, moves, n_moves, out):
    """Two-phase compaction of infeasible swaps; returns the surviving count.

    Phase one drops moves whose u-activity has a successor inside the swap
    window, phase two drops moves whose v-activity has a predecessor inside
    it.  Both phases keep the input order (stable), so a lexicographically
    sorted input stays sorted.
    """
    kept = 0
    for idx in range(n_moves):
        u = moves[idx, 0]
        v = moves[idx, 1]
        wu = order[u]
        ok = True
        for x in range(u + 1, v + 1):
            if adjacency[wu, order[x]]:
                ok = False
                break
        if ok:
            out[kept, 0] = u
            out[kept, 1] = v
            kept += 1
    final = 0
    for idx in range(kept):
        u = out[idx, 0]
        v = out[idx, 1]
        wv = order[v]
        ok = True
        for x in range(u, v):
            if adjacency[order[x], wv]:
                ok = False
                break
        if ok:
            out[final, 0] = u
            out[final, 1] = v
            final += 1
    return final


# ---------------------------------------------------------------------------
# Tabu structures: fixed-size circular move list plus an N x N counter table
# whose nonzero cells mirror list membership (counters keep the mirror exact
# when the same move occupies several slots).

@_jit
def tabu_add(tabu_list, tabu_count, head, u, v):
    """Overwrite the slot at `head` with (u, v) and return the advanced head.

    The evicted pair's counter is decremented first ((0, 0) marks an empty
    slot and is never a legal move since u >= 1).
    """
    old_u = tabu_list[head, 0]
    old_v = tabu_list[head, 1]
    if old_u != 0 or old_v != 0:
        tabu_count[old_u, old_v] -= 1
    tabu_list[head, 0] = u
    tabu_list[head, 1] = v
    tabu_count[u, v] += 1
    return (head + 1) % tabu_list.shape[0]


@_jit
def select_move(moves, n_moves, cmaxes, tabu_count, aspiration_cmax):
    """Index of the best admissible move, or -1 when none is admissible.

    Admissible means not tabu, or tabu with a makespan beating
    `aspiration_cmax`.  Ties go to the earliest entry, which is the
    lexicographically smallest (u, v) for a sorted move array.
    """
    best_idx = -1
    best_c = 0
    for idx in range(n_moves):
        c = cmaxes[idx]
        if tabu_count[moves[idx, 0], moves[idx, 1]] > 0 and c >= aspiration_cmax:
            continue
        if best_idx < 0 or c < best_c:
            best_idx = idx
            best_c = c
    return best_idx


@_jit
def select_min(n_moves, cmaxes):
    """Index of the smallest makespan regardless of tabu status (-1 if empty)."""
    best_idx = -1
    best_c = 0
    for idx in range(n_moves):
        if best_idx < 0 or cmaxes[idx] < best_c:
            best_idx = idx
            best_c = cmaxes[idx]
    return best_idx


# ---------------------------------------------------------------------------
# Worker inner loop: neighborhood filtering + evaluation, move selection with
# aspiration, tabu bookkeeping, all without touching the GIL.

@_jit
def run_chunk(order, durations, demands, capacities, pred_ptr, pred_dat,
              adjacency, moves_all, mode, horizon,
              tabu_list, tabu_count, tabu_head,
              budget, adopted_cmax, start_cmax, best_known_cmax, floor_cmax,
              best_order, starts, cap_state, copy_buf, tau,
              moves_buf, cmax_buf, trace):
    """Run up to `budget` tabu-search iterations on `order` in place.

    Per iteration: filter the precomputed reduced neighborhood, evaluate the
    full schedule after every surviving swap, pick the best admissible move
    (aspiration beats the tabu status when it improves on the best makespan
    known so far), apply it and record it in the tabu list.  When every move
    is tabu and none aspirates, the cheapest tabu move is applied anyway and
    counted in `forced`.

    Stops early after an iteration whose best-so-far beats `adopted_cmax`
    (the pool entry this order came from) or reaches `floor_cmax` (the
    critical path).  `trace[i]` receives the accepted makespan of iteration
    i.  Returns (iters, evals, improved, local_best, current, head, forced).
    """
    n_all = moves_all.shape[0]
    local_best = start_cmax
    cur = start_cmax
    iters = 0
    evals = 0
    forced = 0
    touched = horizon          # time-state high-water mark across evaluations
    for _ in range(budget):
        n_feas = filter_moves(adjacency, order, moves_all, n_all, moves_buf)
        iters += 1
        if n_feas == 0:
            trace[iters - 1] = cur
            break
        for idx in range(n_feas):
            u = moves_buf[idx, 0]
            v = moves_buf[idx, 1]
            tmp = order[u]
            order[u] = order[v]
            order[v] = tmp
            cmax_buf[idx] = evaluate_order(
                order, durations, demands, capacities, pred_ptr, pred_dat,
                mode, horizon, starts, cap_state, copy_buf, tau, touched)
            touched = cmax_buf[idx]
            tmp = order[u]
            order[u] = order[v]
            order[v] = tmp
        evals += n_feas
        aspiration = best_known_cmax if best_known_cmax < local_best else local_best
        pick = select_move(moves_buf, n_feas, cmax_buf, tabu_count, aspiration)
        if pick < 0:
            pick = select_min(n_feas, cmax_buf)
            forced += 1
        u = moves_buf[pick, 0]
        v = moves_buf[pick, 1]
        tmp = order[u]
        order[u] = order[v]
        order[v] = tmp
        tabu_head = tabu_add(tabu_list, tabu_count, tabu_head, u, v)
        cur = cmax_buf[pick]
        trace[iters - 1] = cur
        if cur < local_best:
            local_best = cur
            best_order[:] = order
        if local_best < adopted_cmax:
            break
        if local_best <= floor_cmax:
            break
    improved = 1 if local_best < adopted_cmax else 0
    return iters, evals, improved, local_best, cur, tabu_head, forced
