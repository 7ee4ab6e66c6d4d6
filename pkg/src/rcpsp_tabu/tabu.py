"""Fixed-size circular list of recent swap moves with an O(1) membership table.

The membership table is an N x N counter array whose nonzero cells mirror
the list contents exactly.  Counters (rather than booleans) keep the mirror
intact when the same move occupies several slots: evicting one copy must not
hide the remaining one.  (0, 0) marks an empty slot; it can never be a legal
move because movable positions start at 1.

Moves are stored as order positions, not activity ids, so their meaning
drifts as the order mutates.  That is accepted behavior of the search, not
a defect.
"""

from __future__ import annotations

import numpy as np

from . import kernels


class TabuState:
    """Circular move list plus counter mirror for one search worker."""

    def __init__(self, n_activities: int, size: int):
        if size < 1:
            raise ValueError("tabu list size must be >= 1")
        self.entries = np.zeros((size, 2), dtype=np.int32)
        self.counts = np.zeros((n_activities, n_activities), dtype=np.int32)
        self.head = 0

    @property
    def size(self) -> int:
        return len(self.entries)

    def is_tabu(self, u: int, v: int) -> bool:
        """Single table read."""
        return bool(self.counts[u, v] > 0)

    def add(self, u: int, v: int) -> None:
        """Insert (u, v), evicting the oldest entry when the list is full."""
        self.head = int(kernels.tabu_add(self.entries, self.counts, self.head, u, v))

    def reset(self) -> None:
        self.entries[:, :] = 0
        self.counts[:, :] = 0
        self.head = 0

    def snapshot(self) -> tuple[np.ndarray, int]:
        """Copy of (entries, head) for storing in a working-set entry."""
        return self.entries.copy(), self.head

    def load(self, entries: np.ndarray, head: int) -> None:
        """Adopt a snapshot verbatim, rebuilding the counter mirror."""
        if entries.shape != self.entries.shape:
            raise ValueError("snapshot size does not match this tabu list")
        self.entries[:, :] = entries
        self.counts[:, :] = 0
        occupied = (entries[:, 0] != 0) | (entries[:, 1] != 0)
        np.add.at(self.counts, (entries[occupied, 0], entries[occupied, 1]), 1)
        self.head = int(head) % self.size

    def __len__(self) -> int:
        return int(np.count_nonzero(self.entries.any(axis=1)))
