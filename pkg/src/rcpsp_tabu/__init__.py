"""Cooperative parallel tabu search for resource-constrained project scheduling."""

from .cooperation import (RunStats, WorkingSet, WorkingSetEntry,
                          assigned_iterations, choose_mode,
                          initialize_working_set, orchestrate)
from .evaluator import (CapacityResourceState, Schedule, TimeResourceState,
                        check_schedule_feasible, evaluate,
                        forward_backward_improve)
from .instance import (InstanceFeatures, ProjectInstance, PsplibParseError,
                       compute_levels, critical_path_length, extract_features,
                       load_psplib, make_instance, makespan_upper_bound,
                       parse_psplib, validate, write_psplib)
from .kernels import BACKEND
from .moves import (apply_swap, filter_infeasible, generate_reduced_neighborhood,
                    initial_order, is_order_valid, is_swap_feasible)
from .search import SearchParams, Worker, diversify, select_best_move
from .selector import (DEFAULT_RULES, EvalMode, SelectionRule, decide_dynamic,
                       decide_static, load_rules, parse_rules)
from .tabu import TabuState

__all__ = [
    "BACKEND", "CapacityResourceState", "DEFAULT_RULES", "EvalMode",
    "InstanceFeatures", "ProjectInstance", "PsplibParseError", "RunStats",
    "Schedule", "SearchParams", "SelectionRule", "TabuState",
    "TimeResourceState", "Worker", "WorkingSet", "WorkingSetEntry",
    "apply_swap", "assigned_iterations", "check_schedule_feasible",
    "choose_mode", "compute_levels", "critical_path_length", "decide_dynamic",
    "decide_static", "diversify", "evaluate", "extract_features",
    "filter_infeasible", "forward_backward_improve",
    "generate_reduced_neighborhood", "initial_order", "initialize_working_set",
    "is_order_valid", "is_swap_feasible", "load_psplib", "load_rules",
    "make_instance", "makespan_upper_bound", "orchestrate", "parse_psplib",
    "parse_rules", "select_best_move", "validate", "write_psplib",
]
