"""Geometry: balls, boundary rings, packing round trips."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from erwlab.lattice import (
    BallSpec,
    check_point,
    dist2,
    in_ball,
    inner_boundary,
    neighbors,
    pack2,
    pack3,
    project_lateral,
    unpack2,
    unpack3,
)

coord2 = st.integers(min_value=-(2**30) + 1, max_value=2**30 - 1)
coord3 = st.integers(min_value=-(2**20) + 1, max_value=2**20 - 1)


def test_check_point_coerces_and_validates():
    assert check_point((1.0, 2.0, -3.0)) == (1, 2, -3)
    with pytest.raises(ValueError):
        check_point((1,))
    with pytest.raises(ValueError):
        check_point((1, 2, 3, 4))
    with pytest.raises(ValueError):
        check_point((2**62, 0))


def test_ball_spec_basics():
    ball = BallSpec((0, 0), 5.0)
    assert ball.dim == 2
    assert ball.outer_radius == 10.0
    assert BallSpec((1, 2, 3), 2).dim == 3
    with pytest.raises(ValueError):
        BallSpec((0, 0), 0.0)
    with pytest.raises(ValueError):
        BallSpec((0, 0), -1.0)
    with pytest.raises(ValueError):
        BallSpec((0, 0), 1.0, outer_factor=3.0)


def test_neighbor_order_fixed():
    assert neighbors((0, 0, 0)) == (
        (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1),
    )
    assert neighbors((2, -1)) == ((3, -1), (1, -1), (2, 0), (2, -2))


def test_in_ball_closed_euclidean():
    ball = BallSpec((0, 0), 2.0)
    assert in_ball((2, 0), ball)
    assert in_ball((1, 1), ball)
    assert not in_ball((2, 1), ball)
    assert in_ball((2, 1), ball, which="outer")
    assert in_ball((4, 0), ball, which="outer")
    assert not in_ball((4, 1), ball, which="outer")
    with pytest.raises(ValueError):
        in_ball((0, 0), ball, which="middle")


def test_boundary_ring_small_balls():
    assert inner_boundary(BallSpec((0, 0), 1.0)) == [(-1, 0), (0, -1), (0, 1), (1, 0)]
    ring2 = inner_boundary(BallSpec((0, 0), 2.0))
    # B(0,2) holds 13 sites; (0,0) and the unit cross have every neighbor
    # inside, leaving the 4 axial extremes plus the 4 diagonals
    assert len(ring2) == 8
    assert (2, 0) in ring2 and (1, 1) in ring2
    assert (0, 0) not in ring2 and (1, 0) not in ring2


def test_boundary_ring_matches_bruteforce():
    for center in ((0, 0), (3, -2)):
        for r in (1.0, 2.0, 4.5, 7.0, 10.3):
            ball = BallSpec(center, r)
            ring = inner_boundary(ball)
            span = int(r) + 2
            brute = []
            for dx in range(-span, span + 1):
                for dy in range(-span, span + 1):
                    p = (center[0] + dx, center[1] + dy)
                    if not in_ball(p, ball):
                        continue
                    if any(not in_ball(q, ball) for q in neighbors(p)):
                        brute.append(p)
            assert ring == sorted(brute), (center, r)


def test_boundary_ring_budget_and_dim():
    with pytest.raises(ValueError):
        inner_boundary(BallSpec((0, 0), 100.0), site_budget=10)
    with pytest.raises(ValueError):
        inner_boundary(BallSpec((0, 0, 0), 2.0))


def test_outer_ring_radius():
    ring = inner_boundary(BallSpec((0, 0), 1.0), which="outer")
    assert (2, 0) in ring and (1, 1) in ring
    assert max(dist2(p, (0, 0)) for p in ring) <= 4


def test_project_lateral():
    assert project_lateral((5, -2, 7)) == (-2, 7)
    with pytest.raises(ValueError):
        project_lateral((1, 2))


@settings(max_examples=200, deadline=None)
@given(x=coord2, y=coord2)
def test_pack2_roundtrip(x, y):
    assert unpack2(pack2(x, y)) == (x, y)


@settings(max_examples=200, deadline=None)
@given(x=coord3, y=coord3, z=coord3)
def test_pack3_roundtrip(x, y, z):
    assert unpack3(pack3(x, y, z)) == (x, y, z)


def test_pack2_array_roundtrip():
    rng = np.random.default_rng(0)
    x = rng.integers(-(2**30) + 1, 2**30, size=1000)
    y = rng.integers(-(2**30) + 1, 2**30, size=1000)
    keys = pack2(x, y)
    ux, uy = unpack2(keys)
    assert np.array_equal(ux, x) and np.array_equal(uy, y)
    # distinct points, distinct keys
    assert np.unique(keys).size == np.unique(np.stack([x, y], axis=1), axis=0).shape[0]


def test_pack_range_rejected():
    with pytest.raises(ValueError):
        pack2(2**30, 0)
    with pytest.raises(ValueError):
        pack3(0, -(2**20), 0)
    with pytest.raises(ValueError):
        pack2(np.array([2**30]), np.array([0]))


@settings(max_examples=100, deadline=None)
@given(x=st.integers(-50, 50), y=st.integers(-50, 50))
def test_ring_separates_inside_from_outside(x, y):
    """Any inside site is either on the ring or all its neighbors are inside."""
    ball = BallSpec((0, 0), 6.5)
    ring = set(inner_boundary(ball))
    p = (x, y)
    if in_ball(p, ball) and p not in ring:
        assert all(in_ball(q, ball) for q in neighbors(p))
