"""Rare-event Monte Carlo for SINR connectivity in Poisson wireless networks."""
from .analytic import (
    connect_prob, connections_per_area, expected_connect_count, interference_cdf,
    isolation_objective, poisson_entropy, stationarity_residual,
)
from .estimate import (
    EstimatorReport, TiltTooAggressive, estimate_event, estimate_isolation, pair_log_weight,
    radial_log_weight, summarize,
)
from .ppp import ParameterError, PointPattern, RadialIntensity, SeedSpec, Window, derive_replicate_seed
from .sinr import (
    EventSpec, ModelParams, NetworkFunctional, connectable_receivers, evaluate_functional,
    good_region_area, total_field,
)
from .tilt import (
    NoHitsError, SolverError, TiltSpec, cross_entropy_pilot, optimal_pair, solve_lambda_opt,
    tabulate_lambda_profile,
)

__all__ = [
    "EstimatorReport", "EventSpec", "ModelParams", "NetworkFunctional", "NoHitsError",
    "ParameterError", "PointPattern", "RadialIntensity", "SeedSpec", "SolverError", "TiltSpec",
    "TiltTooAggressive", "Window", "connect_prob", "connectable_receivers", "connections_per_area",
    "cross_entropy_pilot", "derive_replicate_seed", "estimate_event", "estimate_isolation",
    "evaluate_functional", "expected_connect_count", "good_region_area", "interference_cdf",
    "isolation_objective", "optimal_pair", "pair_log_weight", "poisson_entropy",
    "radial_log_weight", "solve_lambda_opt", "stationarity_residual", "summarize",
    "tabulate_lambda_profile", "total_field",
]
