"""Replication harness: intervals, registry, worker-count invariance."""

import numpy as np
import pytest

from erwlab.harness import (
    Estimate,
    ExperimentSpec,
    bernoulli_ci,
    bernoulli_estimate,
    default_workers,
    kind_columns,
    mean_estimate,
    register_kind,
    registered_kinds,
    run_replications,
)


def test_wilson_interval_pins():
    lo, hi = bernoulli_ci(50, 100, 0.95)
    assert lo == pytest.approx(0.40383, abs=1e-4)
    assert hi == pytest.approx(0.59617, abs=1e-4)
    # never leaves [0, 1], even at the extremes
    lo0, hi0 = bernoulli_ci(0, 20, 0.99)
    assert lo0 == 0.0 and 0.0 < hi0 < 0.4
    loN, hiN = bernoulli_ci(20, 20, 0.99)
    assert hiN == 1.0 and 0.6 < loN < 1.0


def test_wilson_interval_validation():
    with pytest.raises(ValueError):
        bernoulli_ci(1, 0, 0.95)
    with pytest.raises(ValueError):
        bernoulli_ci(5, 4, 0.95)
    with pytest.raises(ValueError):
        bernoulli_ci(1, 4, 1.5)


def test_bernoulli_estimate_fields():
    est = bernoulli_estimate(30, 100, 0.99)
    assert est.mean == 0.3
    assert est.stderr == pytest.approx(np.sqrt(0.3 * 0.7 / 100))
    assert est.count == 100
    assert est.ci_low < 0.3 < est.ci_high
    assert est.ci_level == 0.99
    assert not est.degenerate
    assert bernoulli_estimate(1, 1, 0.99).degenerate


def test_mean_estimate_fields():
    est = mean_estimate([1.0, 2.0, 3.0, 4.0], 0.95)
    assert est.mean == 2.5
    sd = np.std([1, 2, 3, 4], ddof=1)
    assert est.stderr == pytest.approx(sd / 2.0)
    assert est.ci_low < 2.5 < est.ci_high
    single = mean_estimate([7.0])
    assert single.degenerate and single.stderr == 0.0
    constant = mean_estimate([2.0, 2.0, 2.0])
    assert constant.degenerate and constant.ci_low == constant.ci_high == 2.0
    with pytest.raises(ValueError):
        mean_estimate([])


def test_stderr_scaling_with_reps():
    """Quadrupling the simple-walk sample roughly halves the standard error."""
    rng = np.random.default_rng(2)
    small = mean_estimate(rng.normal(size=400))
    large = mean_estimate(rng.normal(size=1600))
    ratio = large.stderr / small.stderr
    assert 0.38 <= ratio <= 0.65


def test_estimate_validation():
    with pytest.raises(ValueError):
        Estimate(mean=0.5, stderr=-1.0, count=3, ci_low=0.4, ci_high=0.6)
    with pytest.raises(ValueError):
        Estimate(mean=0.9, stderr=0.1, count=3, ci_low=0.1, ci_high=0.5)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(kind="holes", params={}, reps=0)
    with pytest.raises(ValueError):
        ExperimentSpec(kind="holes", params={}, reps=1, workers=0)
    with pytest.raises(ValueError):
        ExperimentSpec(kind="holes", params={}, reps=1, level=1.0)


def test_registry_contents():
    kinds = registered_kinds()
    for kind in ("speed", "holes", "hitting", "avoid_origin", "visit_tail",
                 "blocks", "coupling_audit"):
        assert kind in kinds
    assert kind_columns("holes") == (
        "rep", "seed", "n", "m", "holes", "distinct_r1", "distinct_r2",
    )
    with pytest.raises(ValueError):
        kind_columns("nope")


def test_unknown_kind_rejected():
    spec = ExperimentSpec(kind="not_registered", params={}, reps=2)
    with pytest.raises(ValueError, match="unknown experiment kind"):
        run_replications(spec)


def _probe_rep(seed, rep, params):
    return {"rep": rep, "seed": seed, "value": (seed * 1000 + rep) % 7}


def _probe_aggregate(rows, spec):
    return {"mean_value": mean_estimate([row["value"] for row in rows], spec.level)}


def test_custom_kind_round_trip():
    register_kind("probe_kind", _probe_rep, _probe_aggregate,
                  columns=("rep", "seed", "value"))
    spec = ExperimentSpec(kind="probe_kind", params={}, reps=14, seed=3)
    estimates, rows = run_replications(spec)
    assert [row["rep"] for row in rows] == list(range(14))
    assert estimates["mean_value"].count == 14
    expect = np.mean([(3 * 1000 + r) % 7 for r in range(14)])
    assert estimates["mean_value"].mean == pytest.approx(expect)


def test_worker_count_invariance_per_rep_kind():
    base = ExperimentSpec(kind="holes", params={"n": 300, "m": 60}, reps=13, seed=5)
    est1, rows1 = run_replications(base)
    est3, rows3 = run_replications(
        ExperimentSpec(kind="holes", params={"n": 300, "m": 60}, reps=13, seed=5,
                       workers=3)
    )
    assert rows1 == rows3
    assert est1["p_holes_below_threshold"].mean == est3["p_holes_below_threshold"].mean


def test_worker_count_invariance_batch_kind():
    params = {"r": 6}
    est1, rows1 = run_replications(
        ExperimentSpec(kind="hitting", params=params, reps=40, seed=2)
    )
    est2, rows2 = run_replications(
        ExperimentSpec(kind="hitting", params=params, reps=40, seed=2, workers=2)
    )
    assert rows1 == rows2
    assert est1["p_hit"].mean == est2["p_hit"].mean


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("ERWLAB_WORKERS", "5")
    assert default_workers() == 5
    monkeypatch.setenv("ERWLAB_WORKERS", "0")
    with pytest.raises(ValueError):
        default_workers()
    monkeypatch.delenv("ERWLAB_WORKERS")
    assert default_workers() >= 1
