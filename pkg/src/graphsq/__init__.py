"""Power-of-d load balancing on graphs: simulation, mean-field limits and couplings."""

__version__ = "0.1.0"

from graphsq.graph import Graph, RegularityReport, generate, regularity_report
from graphsq.meanfield import (
    OccupancyVector,
    OdeSolution,
    arrival_intensity_limit,
    fixed_point,
    integrate,
    l1_distance,
    ode_rhs,
    simulate_mkv_path,
)
from graphsq.routing import (
    FallbackPolicy,
    RoutingSample,
    arrival_intensity_bruteforce,
    arrival_intensity_exact,
    route_arrival,
    tie_break_b,
)
from graphsq.ctmc import SimConfig, SystemState, Trajectory, neighborhood_occupancy, occupancy, run_sim, sample_initial
from graphsq.coupling import CouplingResult, chaos_covariance, rate_sweep, run_coupled

__all__ = [
    "CouplingResult",
    "FallbackPolicy",
    "Graph",
    "OccupancyVector",
    "OdeSolution",
    "RegularityReport",
    "RoutingSample",
    "SimConfig",
    "SystemState",
    "Trajectory",
    "arrival_intensity_bruteforce",
    "arrival_intensity_exact",
    "arrival_intensity_limit",
    "chaos_covariance",
    "fixed_point",
    "generate",
    "integrate",
    "l1_distance",
    "neighborhood_occupancy",
    "occupancy",
    "ode_rhs",
    "rate_sweep",
    "regularity_report",
    "route_arrival",
    "run_coupled",
    "run_sim",
    "sample_initial",
    "simulate_mkv_path",
    "tie_break_b",
]
