"""Lattice walk laboratory: excited and simple random walks on Z^2/Z^3,
stopping-time analysis, range statistics, exact planar oracles, and a
reproducible Monte Carlo harness."""

from .rng import RngStream, derive_stream, word_scalar
from .lattice import BallSpec, inner_boundary, in_ball, neighbors, dist2
from .walks import (
    ErwParams,
    ExternalConfiguration,
    VisitedSet,
    WalkPath,
    CoupledResult,
    run_walk,
    run_coupled_pair,
    srw_step,
    erw_step,
    coupled_step,
)
from .excursions import (
    VisitRecord,
    ExcursionSample,
    count_visits,
    total_visits,
    exit_time,
    hit_before_exit,
    sample_conditioned_excursion,
    unvisited_in_ball,
)
from .holes import HoleExperimentConfig, HoleCount, count_holes, run_hole_experiment, distinct_sites
from .oracles import (
    potential_kernel_exact,
    potential_kernel_asymptotic,
    potential_kernel_constant,
    exact_hit_probability,
    exit_position_masses,
    annulus_escape,
    block_size,
    alpha_step,
    alpha_schedule,
    AlphaSchedule,
    hitting_reference,
)
from .harness import Estimate, ExperimentSpec, bernoulli_ci, run_replications

__version__ = "0.1.0"

__all__ = [
    "RngStream",
    "derive_stream",
    "word_scalar",
    "BallSpec",
    "inner_boundary",
    "in_ball",
    "neighbors",
    "dist2",
    "ErwParams",
    "ExternalConfiguration",
    "VisitedSet",
    "WalkPath",
    "CoupledResult",
    "run_walk",
    "run_coupled_pair",
    "srw_step",
    "erw_step",
    "coupled_step",
    "VisitRecord",
    "ExcursionSample",
    "count_visits",
    "total_visits",
    "exit_time",
    "hit_before_exit",
    "sample_conditioned_excursion",
    "unvisited_in_ball",
    "HoleExperimentConfig",
    "HoleCount",
    "count_holes",
    "run_hole_experiment",
    "distinct_sites",
    "potential_kernel_exact",
    "potential_kernel_asymptotic",
    "potential_kernel_constant",
    "exact_hit_probability",
    "exit_position_masses",
    "annulus_escape",
    "block_size",
    "alpha_step",
    "alpha_schedule",
    "AlphaSchedule",
    "hitting_reference",
    "Estimate",
    "ExperimentSpec",
    "bernoulli_ci",
    "run_replications",
    "__version__",
]
