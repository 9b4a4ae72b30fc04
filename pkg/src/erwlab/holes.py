"""Two-walk range statistics on Z^2.

A hole is a vertex occupied by the short walk R2 but never by the long walk
R1, both started at the origin.  The experiment estimates the probability
that the hole count stays below floor(m^(3/4)).
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .rng import RngStream
from .walks import WalkPath, run_walk


@dataclass(frozen=True)
class HoleExperimentConfig:
    """Parameters for the paired-walk hole experiment.

    mu = log log m / log log n is derived, never stored; values outside
    [1/2, 1] only warn, since the statistic is defined for any lengths.
    """

    n: int
    m: int
    reps: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"n must be at least 3, got {self.n}")
        if self.m < 0:
            raise ValueError(f"m must be nonnegative, got {self.m}")
        if self.reps < 1:
            raise ValueError(f"reps must be at least 1, got {self.reps}")
        if self.m < 3:
            warnings.warn(
                f"m = {self.m} < 3 leaves the scale exponent mu undefined",
                stacklevel=2,
            )
        else:
            mu = self.mu
            if not 0.5 <= mu <= 1.0:
                warnings.warn(
                    f"mu = {mu:.4f} outside [1/2, 1]; the short walk is not on "
                    "the intended scale",
                    stacklevel=2,
                )

    @property
    def mu(self) -> float:
        if self.m < 3:
            return float("nan")
        return math.log(math.log(self.m)) / math.log(math.log(self.n))

    @property
    def threshold(self) -> int:
        return int(math.floor(self.m ** 0.75))


@dataclass(frozen=True)
class HoleCount:
    """Range comparison of one walk pair."""

    holes: int
    distinct_r2: int
    distinct_r1: int

    def __post_init__(self):
        if not 0 <= self.holes <= self.distinct_r2:
            raise ValueError("holes must lie in [0, distinct_r2]")


def _packed_range(path: WalkPath) -> np.ndarray:
    if path.visited_packed is not None:
        return path.visited_packed
    if path.positions is None:
        raise ValueError("path carries neither positions nor a packed range")
    from .lattice import pack2

    return np.unique(pack2(path.positions[:, 0], path.positions[:, 1]))


def count_holes(path1: WalkPath, path2: WalkPath) -> HoleCount:
    """Vertices in range(path2) missing from range(path1); timing ignored."""
    if len(path1.start) != 2 or len(path2.start) != 2:
        raise ValueError("hole counting is defined for planar walks")
    if tuple(path1.start) != (0, 0) or tuple(path2.start) != (0, 0):
        raise ValueError("both walks must start at the origin")
    r1 = _packed_range(path1)
    r2 = _packed_range(path2)
    holes = int(np.setdiff1d(r2, r1, assume_unique=True).size)
    return HoleCount(holes=holes, distinct_r2=int(r2.size), distinct_r1=int(r1.size))


def distinct_sites(path: WalkPath) -> int:
    """Number of distinct vertices the walk occupied."""
    return path.distinct_count


def _holes_replication(seed: int, rep: int, params: dict) -> dict:
    n = params["n"]
    m = params["m"]
    path1 = run_walk("srw2", n, stream=RngStream.for_rep(seed, rep, substream=0))
    path2 = run_walk("srw2", m, stream=RngStream.for_rep(seed, rep, substream=1))
    hc = count_holes(path1, path2)
    return {
        "rep": rep,
        "seed": seed,
        "n": n,
        "m": m,
        "holes": hc.holes,
        "distinct_r1": hc.distinct_r1,
        "distinct_r2": hc.distinct_r2,
    }


def _holes_aggregate(rows, spec) -> dict:
    from .harness import bernoulli_estimate

    threshold = int(math.floor(spec.params["m"] ** 0.75))
    successes = sum(1 for row in rows if row["holes"] <= threshold)
    est = bernoulli_estimate(successes, len(rows), spec.level)
    return {"p_holes_below_threshold": est}


def run_hole_experiment(config: HoleExperimentConfig, workers: int = 1, level: float = 0.99):
    """Estimate P(holes <= floor(m^(3/4))) over config.reps seeded pairs.

    Returns (estimate, rows); rows carry one record per replication in the
    emission schema rep, seed, n, m, holes, distinct_r1, distinct_r2.
    """
    from .harness import ExperimentSpec, run_replications

    spec = ExperimentSpec(
        kind="holes",
        params={"n": config.n, "m": config.m},
        reps=config.reps,
        seed=config.seed,
        workers=workers,
        level=level,
    )
    estimates, rows = run_replications(spec)
    return estimates["p_holes_below_threshold"], rows


from .harness import register_kind as _register_kind

_register_kind(
    "holes",
    _holes_replication,
    _holes_aggregate,
    columns=("rep", "seed", "n", "m", "holes", "distinct_r1", "distinct_r2"),
)
