"""Excursion counting, conditioned sampling, and coverage of small balls."""

import numpy as np
import pytest

from erwlab.batchwalk import visit_count_batch
from erwlab.excursions import (
    count_visits,
    exit_time,
    hit_before_exit,
    sample_conditioned_excursion,
    total_visits,
    unvisited_in_ball,
)
from erwlab.lattice import BallSpec, pack2
from erwlab.oracles import annulus_escape, exact_hit_probability, exit_position_masses
from erwlab.rng import RngStream
from erwlab.walks import WalkPath, run_walk


def _path2(points):
    pos = np.asarray(points, dtype=np.int64)
    return WalkPath(
        kind="srw2",
        start=tuple(pos[0]),
        length=pos.shape[0] - 1,
        positions=pos,
        first_coord_trace=pos[:, 0],
        distinct_count=int(np.unique(pos, axis=0).shape[0]),
        end=tuple(pos[-1]),
        visited_packed=np.unique(pack2(pos[:, 0], pos[:, 1])),
    )


# hand-traced fixture: B((0,0), 1), outer radius 2; enters twice, second
# excursion cut off before the exit
_ZIGZAG = _path2([
    (3, 0),   # outside outer
    (2, 0),   # on outer ring
    (1, 0),   # 0: inside inner -> tau_in = 2? indices count positions
    (2, 0),
    (3, 0),   # strictly outside: tau_out
    (2, 0),
    (1, 0),   # second entry
    (1, 1),
])


def test_count_visits_hand_trace():
    rec = count_visits(_ZIGZAG, BallSpec((0, 0), 1.0))
    assert rec.J == 2
    assert rec.tau_pairs == [(2, 4), (6, None)]
    assert rec.truncated is True


def test_count_visits_start_inside():
    path = _path2([(0, 0), (1, 0), (2, 0), (2, 1)])
    rec = count_visits(path, BallSpec((0, 0), 1.0))
    assert rec.tau_pairs[0][0] == 0
    assert rec.J == 1
    # (2,1) has squared distance 5 > 4: the excursion closes at index 3
    assert rec.tau_pairs == [(0, 3)]
    assert rec.truncated is False


def test_count_visits_never_enters():
    path = _path2([(5, 0), (5, 1), (5, 2)])
    rec = count_visits(path, BallSpec((0, 0), 1.0))
    assert rec.J == 0
    assert rec.tau_pairs == []
    assert rec.truncated is False


def test_count_visits_stop_prefix_invariance():
    """Steps after the stop index never alter the record."""
    ball = BallSpec((0, 0), 1.0)
    full = count_visits(_ZIGZAG, ball, stop=5)
    shorter = _path2(_ZIGZAG.positions[:6])
    assert count_visits(shorter, ball).tau_pairs == full.tau_pairs
    assert count_visits(shorter, ball).J == full.J


def test_total_visits_mixed_balls_rejected():
    ball_a = BallSpec((0, 0), 1.0)
    ball_b = BallSpec((0, 0), 2.0)
    rec_a = count_visits(_ZIGZAG, ball_a)
    rec_b = count_visits(_ZIGZAG, ball_b)
    assert total_visits([]) == 0
    assert total_visits([rec_a, rec_a]) == 4
    with pytest.raises(ValueError):
        total_visits([rec_a, rec_b])


def test_exit_time_cases():
    ball = BallSpec((0, 0), 1.0)
    path = _path2([(0, 0), (1, 0), (2, 0), (3, 0), (2, 0)])
    assert exit_time(path, ball) == 3
    stays = _path2([(0, 0), (1, 0), (0, 0), (1, 0)])
    assert exit_time(stays, ball) is None
    outside = _path2([(5, 5), (5, 6)])
    with pytest.raises(ValueError):
        exit_time(outside, ball)


def test_exit_time_consistent_with_count_visits():
    stream = RngStream.for_rep(0, 3)
    ball = BallSpec((0, 0), 3.0)
    path = run_walk("srw2", 2000, stream=stream, record="full")
    t = exit_time(path, ball)
    rec = count_visits(path, ball)
    assert t is not None
    assert rec.tau_pairs[0] == (0, t)


def test_hit_before_exit_matches_exact_solve():
    """Monte Carlo hit frequency against the sparse linear-system probability."""
    r = 6.0
    ball = BallSpec((0, 0), r)
    start = (6, 0)
    exact = exact_hit_probability(start, r)
    reps = 1500
    hits = sum(
        hit_before_exit(start, (0, 0), ball, RngStream.for_rep(rep, 7))
        for rep in range(reps)
    )
    phat = hits / reps
    se = np.sqrt(exact * (1 - exact) / reps)
    assert abs(phat - exact) < 4 * se
    assert hit_before_exit((2, 1), (2, 1), ball, RngStream.for_rep(0, 0)) is True


def test_conditioned_excursion_reaches_requested_exit():
    ball = BallSpec((0, 0), 4.0)
    masses = exit_position_masses((4, 0), ball)
    x_out = max(masses, key=masses.get)
    sample = sample_conditioned_excursion((4, 0), x_out, ball, RngStream.for_rep(0, 9),
                                          max_attempts=10_000)
    assert tuple(sample.path.positions[0]) == (4, 0)
    assert tuple(sample.path.positions[-1]) == x_out
    assert sample.x_out == x_out
    # every earlier position stays inside the closed outer ball
    interior = sample.path.positions[:-1]
    assert np.all(np.sum(interior * interior, axis=1) <= ball.outer_radius**2)


def test_conditioned_excursion_acceptance_rate():
    """Attempt counts are geometric with success mass = the exact exit mass."""
    ball = BallSpec((0, 0), 4.0)
    start = (4, 0)
    masses = exit_position_masses(start, ball)
    x_out = max(masses, key=masses.get)
    p = masses[x_out]
    attempts = []
    for rep in range(400):
        s = sample_conditioned_excursion(start, x_out, ball, RngStream.for_rep(rep, 11),
                                         max_attempts=20_000)
        attempts.append(s.attempts)
    mean_attempts = float(np.mean(attempts))
    # geometric mean 1/p, sd ~ 1/p per draw
    assert abs(mean_attempts - 1.0 / p) < 5 * (1.0 / p) / np.sqrt(len(attempts))


def test_conditioned_excursion_validation():
    ball = BallSpec((0, 0), 2.0)
    with pytest.raises(ValueError):
        sample_conditioned_excursion((9, 0), (5, 0), ball, RngStream.for_rep(0, 0), 10)
    with pytest.raises(ValueError):
        sample_conditioned_excursion((1, 0), (2, 0), ball, RngStream.for_rep(0, 0), 10)
    with pytest.raises(RuntimeError):
        sample_conditioned_excursion((1, 0), (5, 0), ball, RngStream.for_rep(0, 0),
                                     max_attempts=1)


def test_unvisited_in_ball_counts():
    ball = BallSpec((0, 0), 2.0)  # 13 sites
    path = _path2([(0, 0), (1, 0)])
    assert unvisited_in_ball([path], ball) == 11
    assert unvisited_in_ball([], ball) == 13
    both = [_path2([(0, 0), (1, 0)]), _path2([(0, 1), (1, 0)])]
    assert unvisited_in_ball(both, ball) == 10


def test_unvisited_decreases_with_coverage():
    ball = BallSpec((0, 0), 4.0)
    paths = []
    remaining = []
    for rep in range(6):
        paths.append(run_walk("srw2", 400, stream=RngStream.for_rep(rep, 13),
                              record="full"))
        remaining.append(unvisited_in_ball(paths, ball))
    assert all(a >= b for a, b in zip(remaining, remaining[1:]))


def test_visit_counts_track_annulus_reference():
    """P(no return to B(0, r) before leaving B(0, 2n)) near the exact annulus
    escape, for walks launched on the ring of B(0, 2r)."""
    r, n_dom = 16, 512
    reps = 4000
    ids = np.arange(reps, dtype=np.uint64)
    from erwlab.experiments import _visit_tail_batch

    rows = _visit_tail_batch(313, 0, reps, {"r": r, "n_domain": n_dom})
    counts = np.array([row["visits"] for row in rows])
    p0 = float(np.mean(counts == 0))
    ref = annulus_escape(r, 2 * n_dom)
    se = np.sqrt(ref * (1 - ref) / reps)
    assert abs(p0 - ref) < 0.25 * ref + 3 * se
    assert ids.size == reps
