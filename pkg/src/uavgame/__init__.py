"""Stackelberg interdiction games between a UAV operator and an interdictor on a security graph."""
from .cpt import (DivergentProspectError, Prospect, PTParams, Role, TruncationConfig, TruncationError,
                  build_mixed_prospect, prospect_value, valuation_mixed, valuation_pure_I, valuation_pure_U,
                  value_fn, weight_fn)
from .graph import (GraphValidationError, Instance, Path, PathCountError, SecurityGraph, count_policies,
                    enumerate_paths, load_instance, make_path, path_by_label, reference_instance, shortest_path,
                    shortest_path_excluding, validate)
from .mdp import (MixedInterdiction, Policy, all_paths_best_response, origin_value_closed_form, policy_evaluate,
                  policy_iteration)
from .montecarlo import SimulationReport, simulate_delivery
from .pure import best_response, brute_force_SE, expected_delivery_time, solve_SE
from .ptgame import (PTGameSpec, brute_force_SE_PT, rational_response, rho_PT, rho_PT_mixed, solve_MSE_PT,
                     solve_SE_PT)
from .search import SearchConfig, SearchResult, pattern_search_max, solve_MSE

__version__ = "0.1.0"

__all__ = [
    "all_paths_best_response", "best_response", "brute_force_SE", "brute_force_SE_PT", "build_mixed_prospect",
    "count_policies", "DivergentProspectError", "enumerate_paths", "expected_delivery_time",
    "GraphValidationError", "Instance", "load_instance", "make_path", "MixedInterdiction",
    "origin_value_closed_form", "Path", "path_by_label", "PathCountError", "pattern_search_max", "Policy",
    "policy_evaluate", "policy_iteration", "Prospect", "prospect_value", "PTGameSpec", "PTParams",
    "rational_response", "reference_instance", "rho_PT", "rho_PT_mixed", "Role", "SearchConfig",
    "SearchResult", "SecurityGraph", "shortest_path", "shortest_path_excluding", "simulate_delivery",
    "SimulationReport", "solve_MSE", "solve_MSE_PT", "solve_SE", "solve_SE_PT", "TruncationConfig",
    "TruncationError", "validate", "valuation_mixed", "valuation_pure_I", "valuation_pure_U", "value_fn",
    "weight_fn", "__version__",
]
