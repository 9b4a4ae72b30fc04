"""Reproducible Monte Carlo replication with worker-count-independent output.

Each replication is a pure function of (seed, rep index, params), so rows can
be computed in contiguous chunks on any number of workers and merged in rep
order with bit-identical results.  Experiment kinds register themselves in a
module-level table; batch-capable kinds may supply a range function that
simulates many replications per call.
"""

import importlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, Dict, List, Optional, Sequence, Tuple

_REGISTRY: Dict[str, "KindEntry"] = {}
_REGISTRAR_MODULES = ("erwlab.holes", "erwlab.experiments")


@dataclass(frozen=True)
class KindEntry:
    name: str
    rep_fn: Optional[Callable]
    aggregate_fn: Callable
    columns: Tuple[str, ...]
    batch_fn: Optional[Callable] = None


def register_kind(name: str, rep_fn, aggregate_fn, columns, batch_fn=None) -> None:
    _REGISTRY[name] = KindEntry(
        name=name,
        rep_fn=rep_fn,
        aggregate_fn=aggregate_fn,
        columns=tuple(columns),
        batch_fn=batch_fn,
    )


def _ensure_registered() -> None:
    for module in _REGISTRAR_MODULES:
        importlib.import_module(module)


def registered_kinds() -> Tuple[str, ...]:
    _ensure_registered()
    return tuple(sorted(_REGISTRY))


def kind_columns(kind: str) -> Tuple[str, ...]:
    _ensure_registered()
    if kind not in _REGISTRY:
        raise ValueError(f"unknown experiment kind {kind!r}")
    return _REGISTRY[kind].columns


@dataclass
class Estimate:
    """Point estimate with a confidence interval."""

    mean: float
    stderr: float
    count: int
    ci_low: float
    ci_high: float
    ci_level: float = 0.99
    degenerate: bool = False

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")
        if self.count >= 1 and not (self.ci_low - 1e-12 <= self.mean <= self.ci_high + 1e-12):
            raise ValueError("confidence interval must contain the mean")


def _z_quantile(level: float) -> float:
    if not 0 < level < 1:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    return NormalDist().inv_cdf(0.5 + level / 2.0)


def bernoulli_ci(successes: int, trials: int, level: float) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    z = _z_quantile(level)
    p_hat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p_hat + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / trials + z2 / (4.0 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def bernoulli_estimate(successes: int, trials: int, level: float = 0.99) -> Estimate:
    lo, hi = bernoulli_ci(successes, trials, level)
    p_hat = successes / trials
    return Estimate(
        mean=p_hat,
        stderr=math.sqrt(p_hat * (1.0 - p_hat) / trials),
        count=trials,
        ci_low=lo,
        ci_high=hi,
        ci_level=level,
        degenerate=trials < 2,
    )


def mean_estimate(values: Sequence[float], level: float = 0.99) -> Estimate:
    vals = [float(v) for v in values]
    n = len(vals)
    if n < 1:
        raise ValueError("mean_estimate needs at least one value")
    mean = math.fsum(vals) / n
    if n == 1:
        return Estimate(mean=mean, stderr=0.0, count=1, ci_low=mean, ci_high=mean,
                        ci_level=level, degenerate=True)
    var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
    stderr = math.sqrt(var / n)
    z = _z_quantile(level)
    return Estimate(
        mean=mean,
        stderr=stderr,
        count=n,
        ci_low=mean - z * stderr,
        ci_high=mean + z * stderr,
        ci_level=level,
        degenerate=stderr == 0.0,
    )


@dataclass(frozen=True)
class ExperimentSpec:
    """Replication request: kind-specific params plus seeding and parallelism."""

    kind: str
    params: dict
    reps: int
    seed: int = 0
    workers: int = 1
    level: float = 0.99

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError(f"reps must be at least 1, got {self.reps}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        if not 0 < self.level < 1:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")


def _run_range(entry: KindEntry, seed: int, lo: int, hi: int, params: dict) -> List[dict]:
    if entry.batch_fn is not None:
        return entry.batch_fn(seed, lo, hi, params)
    return [entry.rep_fn(seed, rep, params) for rep in range(lo, hi)]


def _chunk_worker(kind: str, seed: int, lo: int, hi: int, params: dict) -> List[dict]:
    _ensure_registered()
    return _run_range(_REGISTRY[kind], seed, lo, hi, params)


def _chunk_bounds(reps: int, chunks: int) -> List[Tuple[int, int]]:
    chunks = max(1, min(chunks, reps))
    base, extra = divmod(reps, chunks)
    bounds = []
    lo = 0
    for i in range(chunks):
        hi = lo + base + (1 if i < extra else 0)
        bounds.append((lo, hi))
        lo = hi
    return bounds


def run_replications(spec: ExperimentSpec):
    """Run spec.reps seeded replications and aggregate.

    Returns (estimates, rows): a dict of named Estimate values and the ordered
    per-replication rows.  Output is identical for every workers value.
    """
    _ensure_registered()
    if spec.kind not in _REGISTRY:
        raise ValueError(f"unknown experiment kind {spec.kind!r}")
    entry = _REGISTRY[spec.kind]
    if spec.workers == 1 or spec.reps == 1:
        rows = _run_range(entry, spec.seed, 0, spec.reps, spec.params)
    else:
        bounds = _chunk_bounds(spec.reps, spec.workers)
        rows = []
        with ProcessPoolExecutor(max_workers=len(bounds)) as pool:
            futures = [
                pool.submit(_chunk_worker, spec.kind, spec.seed, lo, hi, spec.params)
                for lo, hi in bounds
            ]
            for future in futures:
                rows.extend(future.result())
    estimates = entry.aggregate_fn(rows, spec)
    return estimates, rows


def default_workers() -> int:
    """Worker default: ERWLAB_WORKERS env override, else available cores."""
    env = os.environ.get("ERWLAB_WORKERS", "").strip()
    if env:
        value = int(env)
        if value < 1:
            raise ValueError("ERWLAB_WORKERS must be a positive integer")
        return value
    return os.cpu_count() or 1
