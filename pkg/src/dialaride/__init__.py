"""Exact-arithmetic simulation of LAZY(alpha) for open online dial-a-ride."""
from .engine import CheckConfig, InvariantViolation, SimTrace, SimulationFault, position_at, run
from .instance import (
    Instance,
    LowerBoundFamily,
    Request,
    generate_lower_bound,
    load_instance,
    lower_bound_formula,
    predicted_outcome,
    validate,
)
from .metric import EdgeInterior, FiniteMetric, LineCoord, RealLine, Vertex, advance, distance
from .offline import (
    PrefixOpt,
    Schedule,
    deliver_and_return,
    enumerate_opt,
    opt_offline,
    opt_prefix,
    oracle_opt,
    shortest_schedule,
)
from .policy import LazyPolicy, make_policy

__all__ = [
    "CheckConfig", "EdgeInterior", "FiniteMetric", "Instance", "InvariantViolation", "LazyPolicy",
    "LineCoord", "LowerBoundFamily", "PrefixOpt", "RealLine", "Request", "Schedule", "SimTrace",
    "SimulationFault", "Vertex", "advance", "deliver_and_return", "distance", "enumerate_opt",
    "generate_lower_bound", "load_instance", "lower_bound_formula", "make_policy", "opt_offline",
    "opt_prefix", "oracle_opt", "position_at", "predicted_outcome", "run", "shortest_schedule", "validate",
]
