"""Activity orders and swap moves: the solution representation of the search.

An order is a numpy int32 permutation of the activity ids with the dummy
source first and the dummy sink last; every precedence edge must point
forward in it.  A swap move is a pair of order positions (u, v) with
1 <= u < v <= N-2, so the dummies never move.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .instance import ProjectInstance, compute_levels

SwapMove = tuple[int, int]


def as_order(values) -> np.ndarray:
    return np.asarray(values, dtype=np.int32)


def is_order_valid(instance: ProjectInstance, order: np.ndarray) -> bool:
    """Permutation check plus the topological invariant over all edges."""
    n = instance.n_activities
    if order.shape != (n,) or order[0] != 0 or order[n - 1] != n - 1:
        return False
    position = np.empty(n, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    for pos, act in enumerate(order):
        if act < 0 or act >= n or seen[act]:
            return False
        seen[act] = True
        position[act] = pos
    for i, succs in enumerate(instance.successors):
        for j in succs:
            if position[i] >= position[j]:
                return False
    return True


def initial_order(instance: ProjectInstance, shuffle: bool,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Concatenate the precedence levels, optionally permuting inside each.

    Levels group activities by their longest unit-weight distance from the
    source, so the concatenation is always precedence-feasible.
    """
    if shuffle and rng is None:
        raise ValueError("shuffle=True needs an rng")
    parts = []
    for level in compute_levels(instance):
        group = np.asarray(level, dtype=np.int32)
        if shuffle and len(group) > 1:
            group = rng.permutation(group).astype(np.int32)
        parts.append(group)
    return np.concatenate(parts)


def generate_reduced_neighborhood(order: np.ndarray, delta: int) -> np.ndarray:
    """All swaps (u, v) with 1 <= u < v <= N-2 and v-u <= delta, lex sorted.

    Feasibility is not checked here.  A delta larger than the order is
    effectively clamped by the position bounds.
    """
    if delta < 1:
        raise ValueError("delta must be >= 1")
    n = len(order)
    pairs = [(u, v)
             for u in range(1, n - 2)
             for v in range(u + 1, min(u + delta, n - 2) + 1)]
    return np.asarray(pairs, dtype=np.int32).reshape(len(pairs), 2)


def neighborhood_size(n_activities: int, delta: int) -> int:
    return sum(min(delta, n_activities - 2 - u) for u in range(1, n_activities - 2))


def is_swap_feasible(order: np.ndarray, move: SwapMove,
                     instance: ProjectInstance) -> bool:
    """True iff applying the swap keeps the order precedence-feasible."""
    u, v = move
    if not 1 <= u < v <= len(order) - 2:
        raise ValueError(f"illegal move ({u}, {v})")
    return bool(kernels.move_feasible(instance.kernel_arrays.adjacency, order, u, v))


def filter_infeasible(moves: np.ndarray, order: np.ndarray,
                      instance: ProjectInstance) -> np.ndarray:
    """Compact `moves` down to the feasible ones (two-phase, stable)."""
    out = np.empty_like(moves)
    kept = kernels.filter_moves(instance.kernel_arrays.adjacency, order,
                                moves, len(moves), out)
    return out[:kept].copy()


def apply_swap(order: np.ndarray, move: SwapMove) -> np.ndarray:
    """Order with positions u and v exchanged (the input is not modified)."""
    u, v = move
    swapped = order.copy()
    swapped[u], swapped[v] = order[v], order[u]
    return swapped
