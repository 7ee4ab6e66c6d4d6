"""Choosing the probable faster resource-evaluation mode for an instance.

Static selection walks an ordered list of threshold rules over instance
features (first match wins); dynamic selection times a fixed batch of
neighborhood evaluations under both modes and keeps the faster one.  The
choice affects speed, never feasibility.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from . import kernels, moves
from .evaluator import EvalScratch
from .instance import InstanceFeatures, ProjectInstance


class EvalMode(IntEnum):
    CAPACITY = kernels.MODE_CAPACITY
    TIME = kernels.MODE_TIME


_FEATURES = (
    "min_capacity", "avg_capacity", "max_capacity",
    "avg_duration", "avg_branch_factor", "critical_path_length",
)
_OPS = {
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "==": lambda a, b: a == b,
}


@dataclass(frozen=True)
class RulePredicate:
    feature: str
    op: str
    threshold: float
    mode: EvalMode

    def matches(self, features: InstanceFeatures) -> bool:
        return _OPS[self.op](getattr(features, self.feature), self.threshold)


@dataclass(frozen=True)
class SelectionRule:
    """Ordered predicates with a mandatory default mode."""

    predicates: tuple[RulePredicate, ...]
    default: EvalMode


def parse_rules(text: str) -> SelectionRule:
    """Parse the line-oriented rule format.

    Each rule line reads ``<feature> <op> <value> -> <CAPACITY|TIME>``; the
    final non-comment line must be ``default <mode>``.  '#' starts a comment.
    """
    predicates: list[RulePredicate] = []
    default: EvalMode | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if default is not None:
            raise ValueError(f"line {lineno}: rule after the default line")
        tokens = line.split()
        if tokens[0].lower() == "default":
            if len(tokens) != 2:
                raise ValueError(f"line {lineno}: default takes exactly one mode")
            default = _parse_mode(tokens[1], lineno)
            continue
        if len(tokens) != 5 or tokens[3] != "->":
            raise ValueError(
                f"line {lineno}: expected '<feature> <op> <value> -> <mode>'")
        feature, op, value, _, mode = tokens
        if feature not in _FEATURES:
            raise ValueError(f"line {lineno}: unknown feature {feature!r}")
        if op not in _OPS:
            raise ValueError(f"line {lineno}: unknown comparator {op!r}")
        try:
            threshold = float(value)
        except ValueError:
            raise ValueError(f"line {lineno}: bad threshold {value!r}") from None
        predicates.append(RulePredicate(feature, op, threshold, _parse_mode(mode, lineno)))
    if default is None:
        raise ValueError("rule file has no 'default <mode>' line")
    return SelectionRule(predicates=tuple(predicates), default=default)


def _parse_mode(token: str, lineno: int) -> EvalMode:
    try:
        return EvalMode[token.upper()]
    except KeyError:
        raise ValueError(f"line {lineno}: unknown mode {token!r}") from None


def load_rules(path: str | Path) -> SelectionRule:
    return parse_rules(Path(path).read_text())


# Hand-tuned stand-in for a trained rule set: the capacity-indexed state is
# small and cheap when capacities are low, while long schedules make the
# time-indexed scans expensive.
DEFAULT_RULES = parse_rules("""
max_capacity <= 6 -> CAPACITY
avg_duration >= 15 -> CAPACITY
default TIME
""")


def decide_static(features: InstanceFeatures,
                  rules: SelectionRule = DEFAULT_RULES) -> EvalMode:
    """First matching predicate wins; the default applies otherwise."""
    for predicate in rules.predicates:
        if predicate.matches(features):
            return predicate.mode
    return rules.default


def measure_modes(instance: ProjectInstance, order: np.ndarray,
                  delta: int, repeats: int = 3) -> dict[EvalMode, float]:
    """Wall time per mode for evaluating one filtered neighborhood batch.

    Both modes run the identical move set; each mode is warmed up once
    before timing so compilation never skews the comparison.
    """
    arrays = instance.kernel_arrays
    order = np.asarray(order, dtype=np.int32)
    batch = moves.filter_infeasible(
        moves.generate_reduced_neighborhood(order, delta), order, instance)
    scratch = EvalScratch(instance)
    timings: dict[EvalMode, float] = {}
    for mode in (EvalMode.CAPACITY, EvalMode.TIME):
        _evaluate_batch(order, batch, arrays, int(mode), scratch)  # warm-up
        tick = time.perf_counter()
        for _ in range(repeats):
            _evaluate_batch(order, batch, arrays, int(mode), scratch)
        timings[mode] = time.perf_counter() - tick
    return timings


def _evaluate_batch(order, batch, arrays, mode, scratch):
    work = order.copy()
    for u, v in batch:
        work[u], work[v] = work[v], work[u]
        kernels.evaluate_order(
            work, arrays.durations, arrays.demands, arrays.capacities,
            arrays.pred_ptr, arrays.pred_dat, mode, arrays.horizon,
            scratch.starts, scratch.cap_state, scratch.copy_buf, scratch.tau,
            arrays.horizon)
        work[u], work[v] = work[v], work[u]


def decide_dynamic(instance: ProjectInstance, order: np.ndarray, delta: int,
                   repeats: int = 3) -> EvalMode:
    """The mode with the smaller measured batch time on this machine."""
    timings = measure_modes(instance, order, delta, repeats)
    return min(timings, key=timings.get)
