"""Slow beam steering for multi-user indoor visible light communications.

A ceiling LED access point serves several receivers over TDMA through one
or more mechanically steerable Lambertian beams.  This package computes
the steering parameters (elevation, azimuth, directivity index) that
maximize the log-fair sum rate, clusters users onto multiple beams, and
reproduces the standard scheme comparisons (no steering, slow steering,
steering + focus, genie-aided fast steering) with a Monte-Carlo harness.
"""

from .channel import BeamConfig, PhyParams, UserPose, los_gain, los_gain_components, user_rate
from .clustering import ClusterState, reassign_users, vuc_cluster
from .geometry import (
    DegenerateGeometryError,
    cos_incidence,
    cos_irradiance,
    orientation_from_angles,
    pointing_angles,
)
from .optimizer import (
    GainGrid,
    GridSpec,
    InfeasibleError,
    MMParams,
    build_gain_grid,
    equal_time_allocation,
    grid_log_objective,
    project_to_simplex,
    solve_exhaustive,
    solve_mm,
    solve_single_beam,
)
from .simulation import (
    AggregateResult,
    ScenarioConfig,
    SchemeResult,
    evaluate_multibeam,
    generate_users,
    monte_carlo,
    rates_to_db,
    run_ga_fbs,
    run_no_steering,
    run_sbs,
    run_sbsf,
    run_scheme,
    trial_rng,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateResult",
    "BeamConfig",
    "ClusterState",
    "DegenerateGeometryError",
    "GainGrid",
    "GridSpec",
    "InfeasibleError",
    "MMParams",
    "PhyParams",
    "ScenarioConfig",
    "SchemeResult",
    "UserPose",
    "build_gain_grid",
    "cos_incidence",
    "cos_irradiance",
    "equal_time_allocation",
    "evaluate_multibeam",
    "generate_users",
    "grid_log_objective",
    "los_gain",
    "los_gain_components",
    "monte_carlo",
    "orientation_from_angles",
    "pointing_angles",
    "project_to_simplex",
    "rates_to_db",
    "reassign_users",
    "run_ga_fbs",
    "run_no_steering",
    "run_sbs",
    "run_sbsf",
    "run_scheme",
    "solve_exhaustive",
    "solve_mm",
    "solve_single_beam",
    "trial_rng",
    "user_rate",
    "vuc_cluster",
]
