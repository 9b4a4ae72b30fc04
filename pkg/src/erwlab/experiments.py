"""Named Monte Carlo experiments over the walk engines.

Each experiment registers a replication kind with the harness: speed and
drift of the excited walk, block-decomposition diagnostics, hitting and
avoid-origin probabilities, visit-count tails, and the coupling audit.
Planar first-passage kinds run on the batched engine; excited-walk kinds
replay the sequential stepper one replication at a time.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .batchwalk import absorb_batch, ring_start_positions, visit_count_batch
from .harness import (
    ExperimentSpec,
    bernoulli_estimate,
    mean_estimate,
    register_kind,
    run_replications,
)
from .lattice import BallSpec, inner_boundary
from .oracles import annulus_escape, block_size
from .rng import RngStream, derive_stream
from .walks import ExternalConfiguration, WalkPath, run_coupled_pair, run_walk


def _config_from_params(params: dict) -> Optional[ExternalConfiguration]:
    threshold = params.get("halfspace")
    if threshold is None:
        return None
    return ExternalConfiguration.half_space(int(threshold))


# speed ---------------------------------------------------------------------

def _speed_replication(seed: int, rep: int, params: dict) -> dict:
    epsilon = params["epsilon"]
    n = params["n"]
    stream = RngStream.for_rep(seed, rep)
    path = run_walk("erw", 2 * n, epsilon=epsilon, config=_config_from_params(params),
                    stream=stream, record="trace_only")
    r_n = int(path.first_coord_trace[n])
    r_2n = int(path.first_coord_trace[2 * n])
    return {
        "rep": rep,
        "seed": seed,
        "epsilon": epsilon,
        "n": n,
        "r_n_1": r_n,
        "r_2n_1": r_2n,
        "no_progress": int(r_2n <= r_n),
    }


def _speed_aggregate(rows, spec) -> dict:
    n = spec.params["n"]
    speeds = [row["r_n_1"] / n for row in rows]
    successes = sum(row["no_progress"] for row in rows)
    return {
        "mean_speed": mean_estimate(speeds, spec.level),
        "p_no_progress": bernoulli_estimate(successes, len(rows), spec.level),
    }


register_kind(
    "speed",
    _speed_replication,
    _speed_aggregate,
    columns=("rep", "seed", "epsilon", "n", "r_n_1", "r_2n_1", "no_progress"),
)


def speed_experiment(epsilon: float, n: int, reps: int, *, seed: int = 0,
                     workers: int = 1, level: float = 0.99,
                     config: Optional[ExternalConfiguration] = None):
    """Mean first-coordinate speed R(n)_1/n and P(R(2n)_1 <= R(n)_1)."""
    params = {"epsilon": epsilon, "n": n}
    if config is not None:
        if config.kind == "half_space":
            params["halfspace"] = config.threshold
        elif config.kind != "none":
            raise ValueError("speed experiment supports none or half_space configurations")
    spec = ExperimentSpec(kind="speed", params=params, reps=reps, seed=seed,
                          workers=workers, level=level)
    return run_replications(spec)


# block diagnostics ---------------------------------------------------------

@dataclass(frozen=True)
class BlockRecord:
    """One time block ]start, end] of the doubling window."""

    index: int
    start: int
    end: int
    v_count: int
    drift: int
    a_threshold: int
    v_pass: bool
    progress_pass: bool
    drift_ratio: float
    drift_pass: Optional[bool]


@dataclass
class BlockDiagnostics:
    """Per-block accounting of one excited walk run to time 2n."""

    n: int
    k: int
    records: List[BlockRecord]
    sum_v: int
    first_visits_in_window: int
    distinct_count: int
    v_small_frac: float
    progress_frac: float


def block_intervals(n: int, k: int) -> List[Tuple[int, int]]:
    """Blocks ]n+ik, n+(i+1)k] clipped at 2n; exactly ceil(n/k) of them."""
    count = -(-n // k)
    out = []
    for i in range(count):
        start = n + i * k
        end = min(n + (i + 1) * k, 2 * n)
        out.append((start, end))
    return out


def block_diagnostics_path(path: WalkPath, n: int, *, epsilon: float,
                           drift_ref: Optional[float] = None) -> BlockDiagnostics:
    """Compute block records from a recorded excited walk of length 2n."""
    if path.length < 2 * n:
        raise ValueError("path must cover the doubling window ]n, 2n]")
    if path.new_flags is None:
        raise ValueError("path must carry new-vertex flags")
    k = block_size(n)
    if k < 4:
        raise ValueError(f"block size {k} too small; use a larger n")
    trace = path.first_coord_trace
    flags = path.new_flags
    running_max = np.maximum.accumulate(trace)
    v_ref = 0.5 * k ** 0.75
    bump = int(math.floor(k ** 0.625))
    records = []
    for i, (start, end) in enumerate(block_intervals(n, k)):
        v_count = int(np.count_nonzero(flags[start + 1 : end + 1]))
        drift = int(trace[end] - trace[start])
        a_threshold = int(running_max[start]) + bump
        ratio = drift / (epsilon * k ** 0.75)
        records.append(
            BlockRecord(
                index=i,
                start=start,
                end=end,
                v_count=v_count,
                drift=drift,
                a_threshold=a_threshold,
                v_pass=v_count > v_ref,
                progress_pass=int(trace[end]) > a_threshold,
                drift_ratio=ratio,
                drift_pass=None if drift_ref is None else ratio >= drift_ref,
            )
        )
    sum_v = sum(rec.v_count for rec in records)
    first_visits = int(np.count_nonzero(flags[n + 1 : 2 * n + 1]))
    return BlockDiagnostics(
        n=n,
        k=k,
        records=records,
        sum_v=sum_v,
        first_visits_in_window=first_visits,
        distinct_count=path.distinct_count,
        v_small_frac=sum(not rec.v_pass for rec in records) / len(records),
        progress_frac=sum(rec.progress_pass for rec in records) / len(records),
    )


def _blocks_replication(seed: int, rep: int, params: dict) -> dict:
    epsilon = params["epsilon"]
    n = params["n"]
    stream = RngStream.for_rep(seed, rep)
    path = run_walk("erw", 2 * n, epsilon=epsilon, config=_config_from_params(params),
                    stream=stream, record="trace_only")
    diag = block_diagnostics_path(path, n, epsilon=epsilon,
                                  drift_ref=params.get("drift_ref"))
    return {
        "rep": rep,
        "seed": seed,
        "epsilon": epsilon,
        "n": n,
        "k": diag.k,
        "blocks": len(diag.records),
        "sum_v": diag.sum_v,
        "first_visits": diag.first_visits_in_window,
        "v_small_frac": diag.v_small_frac,
        "progress_frac": diag.progress_frac,
        "min_drift_ratio": min(rec.drift_ratio for rec in diag.records),
    }


def _blocks_aggregate(rows, spec) -> dict:
    return {
        "v_small_frac": mean_estimate([row["v_small_frac"] for row in rows], spec.level),
        "progress_frac": mean_estimate([row["progress_frac"] for row in rows], spec.level),
    }


register_kind(
    "blocks",
    _blocks_replication,
    _blocks_aggregate,
    columns=("rep", "seed", "epsilon", "n", "k", "blocks", "sum_v", "first_visits",
             "v_small_frac", "progress_frac", "min_drift_ratio"),
)


def block_diagnostics(epsilon: float, n: int, reps: int, *, seed: int = 0,
                      workers: int = 1, level: float = 0.99,
                      drift_ref: Optional[float] = None):
    """Run reps excited walks to 2n and summarize their block records."""
    params = {"epsilon": epsilon, "n": n}
    if drift_ref is not None:
        params["drift_ref"] = drift_ref
    spec = ExperimentSpec(kind="blocks", params=params, reps=reps, seed=seed,
                          workers=workers, level=level)
    return run_replications(spec)


# hitting -------------------------------------------------------------------

def _hitting_batch(seed: int, lo: int, hi: int, params: dict) -> List[dict]:
    r = params["r"]
    start_x = params.get("start_x", r)
    start_y = params.get("start_y", 0)
    ids = np.arange(lo, hi, dtype=np.uint64)
    res = absorb_batch(seed, ids, np.full(ids.size, start_x, dtype=np.int64),
                       np.full(ids.size, start_y, dtype=np.int64), 2.0 * r,
                       hit_origin=True)
    return [
        {
            "rep": int(lo + i),
            "seed": seed,
            "r": r,
            "hit": int(res.hit[i]),
            "exit_time": int(res.exit_time[i]),
        }
        for i in range(ids.size)
    ]


def _hitting_aggregate(rows, spec) -> dict:
    successes = sum(row["hit"] for row in rows)
    return {"p_hit": bernoulli_estimate(successes, len(rows), spec.level)}


register_kind(
    "hitting",
    None,
    _hitting_aggregate,
    columns=("rep", "seed", "r", "hit", "exit_time"),
    batch_fn=_hitting_batch,
)


def hitting_experiment(r: int, reps: int, *, seed: int = 0, workers: int = 1,
                       level: float = 0.99, start: Optional[Tuple[int, int]] = None):
    """Monte Carlo probability of hitting the origin before leaving B(0,2r)."""
    params = {"r": r}
    if start is not None:
        params["start_x"], params["start_y"] = int(start[0]), int(start[1])
    spec = ExperimentSpec(kind="hitting", params=params, reps=reps, seed=seed,
                          workers=workers, level=level)
    return run_replications(spec)


# avoid origin --------------------------------------------------------------

_SUBSTREAM_SHIFT = 40


def _avoid_origin_batch(seed: int, lo: int, hi: int, params: dict) -> List[dict]:
    k = params["k"]
    r = params["r"]
    reps = np.arange(lo, hi, dtype=np.uint64)
    ids = (
        (np.arange(k, dtype=np.uint64) << np.uint64(_SUBSTREAM_SHIFT))[None, :]
        | reps[:, None]
    ).ravel()
    ring = np.asarray(inner_boundary(BallSpec((0, 0), r)), dtype=np.int64)
    sx, sy = ring_start_positions(ring, seed, ids)
    res = absorb_batch(seed, ids, sx, sy, 2.0 * r, hit_origin=True, counter_start=1)
    hit = res.hit.reshape(reps.size, k)
    return [
        {
            "rep": int(lo + i),
            "seed": seed,
            "k": k,
            "r": r,
            "all_avoid": int(not hit[i].any()),
        }
        for i in range(reps.size)
    ]


def _avoid_origin_aggregate(rows, spec) -> dict:
    successes = sum(row["all_avoid"] for row in rows)
    return {"p_avoid": bernoulli_estimate(successes, len(rows), spec.level)}


register_kind(
    "avoid_origin",
    None,
    _avoid_origin_aggregate,
    columns=("rep", "seed", "k", "r", "all_avoid"),
    batch_fn=_avoid_origin_batch,
)


def avoid_origin_experiment(k_list: Sequence[int], reps: int, *, seed: int = 0,
                            workers: int = 1, level: float = 0.99,
                            multiplier: float = 1.0):
    """P(k ring-started walks all avoid the origin), per k, with r = mult*e^sqrt(k)."""
    results = {}
    for k in k_list:
        if k < 1:
            raise ValueError("k values must be positive")
        r = multiplier * math.exp(math.sqrt(k))
        spec = ExperimentSpec(kind="avoid_origin", params={"k": int(k), "r": float(r)},
                              reps=reps, seed=seed, workers=workers, level=level)
        estimates, rows = run_replications(spec)
        results[int(k)] = (estimates["p_avoid"], rows)
    return results


def select_decay_exponent(ks: Sequence[int], p_values: Sequence[float],
                          betas: Sequence[float] = (0.25, 0.5, 1.0)):
    """Regress -ln p on k^beta for each beta; return (best beta, R^2 table)."""
    ks = np.asarray(ks, dtype=np.float64)
    y = -np.log(np.asarray(p_values, dtype=np.float64))
    table = {}
    for beta in betas:
        x = ks ** beta
        design = np.column_stack([x, np.ones_like(x)])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        resid = y - design @ coef
        ss_res = float(resid @ resid)
        ss_tot = float(((y - y.mean()) ** 2).sum())
        table[beta] = 1.0 - ss_res / ss_tot
    best = max(table, key=table.get)
    return best, table


# visit tail ----------------------------------------------------------------

def _visit_tail_batch(seed: int, lo: int, hi: int, params: dict) -> List[dict]:
    r = params["r"]
    n_domain = params["n_domain"]
    ids = np.arange(lo, hi, dtype=np.uint64)
    ring = np.asarray(inner_boundary(BallSpec((0, 0), 2 * r)), dtype=np.int64)
    sx, sy = ring_start_positions(ring, seed, ids)
    res = visit_count_batch(seed, ids, sx, sy, r, 2.0 * n_domain, counter_start=1)
    return [
        {
            "rep": int(lo + i),
            "seed": seed,
            "r": r,
            "n_domain": n_domain,
            "visits": int(res.J[i]),
        }
        for i in range(ids.size)
    ]


def _visit_tail_aggregate(rows, spec) -> dict:
    counts = [row["visits"] for row in rows]
    zeros = sum(1 for c in counts if c == 0)
    return {
        "mean_visits": mean_estimate(counts, spec.level),
        "p_zero": bernoulli_estimate(zeros, len(rows), spec.level),
    }


register_kind(
    "visit_tail",
    None,
    _visit_tail_aggregate,
    columns=("rep", "seed", "r", "n_domain", "visits"),
    batch_fn=_visit_tail_batch,
)


def visit_tail_experiment(r: int, n_domain: int, reps: int, *, seed: int = 0,
                          workers: int = 1, level: float = 0.99):
    """Visit counts J of B(0,r)/B(0,2r) for walks stopped on leaving B(0, 2*n_domain)."""
    if r < 4:
        raise ValueError("r must be at least 4")
    if n_domain <= 4 * r:
        raise ValueError("n_domain must exceed 4r")
    spec = ExperimentSpec(kind="visit_tail", params={"r": int(r), "n_domain": int(n_domain)},
                          reps=reps, seed=seed, workers=workers, level=level)
    return run_replications(spec)


def visit_tail_table(visit_counts: Sequence[int], r: int, n_domain: int,
                     min_count: int = 500):
    """Successive continuation ratios P(J>j+1)/P(J>j) with the annulus reference.

    Returns (reference, list of (j, count_above_j, ratio)) for all j whose
    count clears min_count.
    """
    counts = np.asarray(visit_counts, dtype=np.int64)
    reference = 1.0 - annulus_escape(r, 2 * n_domain)
    table = []
    j = 0
    while True:
        above = int(np.count_nonzero(counts > j))
        if above < min_count:
            break
        above_next = int(np.count_nonzero(counts > j + 1))
        table.append((j, above, above_next / above))
        j += 1
    return reference, table


# coupling audit ------------------------------------------------------------

def _coupling_replication(seed: int, rep: int, params: dict) -> dict:
    epsilon = params["epsilon"]
    n = params["n"]
    result = run_coupled_pair(n, epsilon, RngStream.for_rep(seed, rep))
    threshold = -int(math.floor(n ** 0.625))
    return {
        "rep": rep,
        "seed": seed,
        "epsilon": epsilon,
        "n": n,
        "violations": result.violations,
        "min_srw_x1": result.min_srw_x1,
        "below_threshold": int(result.min_srw_x1 < threshold),
    }


def _coupling_aggregate(rows, spec) -> dict:
    with_violation = sum(1 for row in rows if row["violations"] > 0)
    below = sum(row["below_threshold"] for row in rows)
    return {
        "p_pair_with_violation": bernoulli_estimate(with_violation, len(rows), spec.level),
        "p_below_threshold": bernoulli_estimate(below, len(rows), spec.level),
    }


register_kind(
    "coupling_audit",
    _coupling_replication,
    _coupling_aggregate,
    columns=("rep", "seed", "epsilon", "n", "violations", "min_srw_x1", "below_threshold"),
)


def coupling_audit(epsilon: float, n: int, reps: int, *, seed: int = 0,
                   workers: int = 1, level: float = 0.99):
    """Audit the excited/simple coupling: per-step domination and deep minima."""
    spec = ExperimentSpec(kind="coupling_audit", params={"epsilon": epsilon, "n": n},
                          reps=reps, seed=seed, workers=workers, level=level)
    return run_replications(spec)


# exit-time tail (library-only, no CLI subcommand) --------------------------

def exit_time_tail(r: int, reps: int, *, seed: int = 0) -> np.ndarray:
    """Exit times of B(0,2r) for walks started uniformly on the ring of B(0,r)."""
    ids = np.arange(reps, dtype=np.uint64)
    ring = np.asarray(inner_boundary(BallSpec((0, 0), r)), dtype=np.int64)
    sx, sy = ring_start_positions(ring, seed, ids)
    res = absorb_batch(seed, ids, sx, sy, 2.0 * r, counter_start=1)
    return res.exit_time


def exit_tail_regression(sigmas: np.ndarray, r: int, lam_lo: float = 1.0,
                         lam_hi: float = 6.0, points: int = 11):
    """Fit ln P(sigma > lambda r^2) against lambda; returns slope, R^2, table."""
    sigmas = np.asarray(sigmas, dtype=np.float64)
    lambdas = np.linspace(lam_lo, lam_hi, points)
    probs = np.array([np.mean(sigmas > lam * r * r) for lam in lambdas])
    keep = probs > 0
    lambdas, probs = lambdas[keep], probs[keep]
    if lambdas.size < 3:
        raise ValueError("too few nonzero tail points for a regression")
    logp = np.log(probs)
    design = np.column_stack([lambdas, np.ones_like(lambdas)])
    coef, *_ = np.linalg.lstsq(design, logp, rcond=None)
    resid = logp - design @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((logp - logp.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot
    return {
        "slope": float(coef[0]),
        "intercept": float(coef[1]),
        "r_squared": r2,
        "lambdas": lambdas,
        "log_tail": logp,
    }


# projection law ------------------------------------------------------------

_LATERAL_DIRS = ((0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


def lateral_step_counts(path: WalkPath, limit: Optional[int] = None) -> np.ndarray:
    """Counts of the four lateral directions among a 3-D path's lateral steps."""
    if path.positions is None:
        raise ValueError("lateral classification needs a fully recorded path")
    if path.positions.shape[1] != 3:
        raise ValueError("lateral classification is for 3-D walks")
    steps = np.diff(path.positions, axis=0)
    lateral = steps[steps[:, 0] == 0]
    if limit is not None:
        if lateral.shape[0] < limit:
            raise ValueError(f"path has only {lateral.shape[0]} lateral steps, need {limit}")
        lateral = lateral[:limit]
    counts = np.zeros(4, dtype=np.int64)
    for i, d in enumerate(_LATERAL_DIRS):
        counts[i] = int(np.count_nonzero(np.all(lateral == np.asarray(d), axis=1)))
    return counts


def chi_square_uniform(counts: np.ndarray) -> float:
    """Chi-square statistic of observed counts against the uniform law."""
    counts = np.asarray(counts, dtype=np.float64)
    expected = counts.sum() / counts.size
    return float(((counts - expected) ** 2 / expected).sum())
