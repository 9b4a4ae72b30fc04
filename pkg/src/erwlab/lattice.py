"""Lattice geometry helpers for Z^2 and Z^3.

Points are plain integer tuples; balls are Euclidean and closed.  Neighbor
order is fixed (+e1, -e1, +e2, -e2, then +e3, -e3) and relied on by tests.

Packing: a 2-D point with |coords| < 2^30 packs into one int64 (31-bit
fields), a 3-D point with |coords| < 2^20 packs into 63 bits (21-bit fields).
Out-of-range points fall back to tuple keys in VisitedSet; the packed forms
here raise instead, since the array users (hole counting, batch walks) stay
well inside range by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PACK2_OFF = 1 << 30
PACK2_LIM = 1 << 30
PACK3_OFF = 1 << 20
PACK3_LIM = 1 << 20
COORD_GUARD = 1 << 62

_UNIT3 = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))
_UNIT2 = ((1, 0), (-1, 0), (0, 1), (0, -1))


def check_point(p) -> tuple:
    p = tuple(int(c) for c in p)
    if len(p) not in (2, 3):
        raise ValueError(f"point dimension must be 2 or 3, got {len(p)}")
    if any(abs(c) >= COORD_GUARD for c in p):
        raise ValueError("coordinate magnitude exceeds the int64 guard")
    return p


@dataclass(frozen=True)
class BallSpec:
    """Closed Euclidean ball with a fixed outer companion of twice the radius."""

    center: tuple
    radius: float
    outer_factor: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "center", check_point(self.center))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive and finite, got {self.radius}")
        if self.outer_factor != 2.0:
            raise ValueError("outer_factor is fixed at 2")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def outer_radius(self) -> float:
        return self.outer_factor * self.radius


def neighbors(p) -> tuple:
    """Lattice neighbors of p in the fixed axis order."""
    if len(p) == 3:
        x, y, z = p
        return (
            (x + 1, y, z),
            (x - 1, y, z),
            (x, y + 1, z),
            (x, y - 1, z),
            (x, y, z + 1),
            (x, y, z - 1),
        )
    if len(p) == 2:
        x, y = p
        return ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))
    raise ValueError(f"point dimension must be 2 or 3, got {len(p)}")


def dist2(p, center) -> int:
    if len(p) != len(center):
        raise ValueError("dimension mismatch")
    return sum((a - b) * (a - b) for a, b in zip(p, center))


def in_ball(p, ball: BallSpec, which: str = "inner") -> bool:
    """Membership in the closed inner (radius r) or outer (radius 2r) ball."""
    if which == "inner":
        r = ball.radius
    elif which == "outer":
        r = ball.outer_radius
    else:
        raise ValueError(f"which must be 'inner' or 'outer', got {which!r}")
    return dist2(p, ball.center) <= r * r


def inner_boundary(ball: BallSpec, which: str = "inner", site_budget: int = 10_000) -> list:
    """Sites inside the closed ball having at least one neighbor outside.

    Enumerates ring sites column by column (never the full ball), so the
    budget applies to the ring itself.  2-D only.
    """
    if ball.dim != 2:
        raise ValueError("boundary enumeration is 2-D only")
    r = ball.radius if which == "inner" else ball.outer_radius
    if which not in ("inner", "outer"):
        raise ValueError(f"which must be 'inner' or 'outer', got {which!r}")
    r2 = r * r
    rmax = int(math.floor(r))

    def col_top(ax: int) -> int:
        # greatest |y| with ax^2 + y^2 <= r^2, or -1 for an empty column
        if ax > rmax:
            return -1
        rem = r2 - ax * ax
        if rem < 0:
            return -1
        m = int(math.floor(math.sqrt(rem)))
        while m * m > rem:
            m -= 1
        while (m + 1) * (m + 1) <= rem:
            m += 1
        return m

    cx, cy = ball.center
    sites = set()
    for dx in range(-rmax, rmax + 1):
        m = col_top(abs(dx))
        if m < 0:
            continue
        # right/left neighbor column (whichever is shorter) decides side exits;
        # the column top always exits vertically
        m_next = col_top(abs(dx) + 1)
        lo = min(m, m_next + 1)
        for dy in range(lo, m + 1):
            sites.add((cx + dx, cy + dy))
            sites.add((cx + dx, cy - dy))
            if len(sites) > site_budget:
                raise ValueError(f"boundary ring exceeds site budget {site_budget}")
    return sorted(sites)


def project_lateral(p) -> tuple:
    """Drop the first coordinate of a 3-D point."""
    if len(p) != 3:
        raise ValueError("lateral projection is defined for 3-D points")
    return (p[1], p[2])


def pack2(x, y):
    """Pack 2-D coords into int64 keys; scalar or ndarray."""
    if isinstance(x, np.ndarray):
        if (np.abs(x) >= PACK2_LIM).any() or (np.abs(y) >= PACK2_LIM).any():
            raise ValueError("2-D coordinates out of packing range")
        return ((x.astype(np.int64) + PACK2_OFF) << 31) | (y.astype(np.int64) + PACK2_OFF)
    if abs(x) >= PACK2_LIM or abs(y) >= PACK2_LIM:
        raise ValueError("2-D coordinates out of packing range")
    return ((x + PACK2_OFF) << 31) | (y + PACK2_OFF)


def unpack2(key):
    if isinstance(key, np.ndarray):
        return (key >> 31) - PACK2_OFF, (key & np.int64((1 << 31) - 1)) - PACK2_OFF
    return (int(key) >> 31) - PACK2_OFF, (int(key) & ((1 << 31) - 1)) - PACK2_OFF


def pack3(x: int, y: int, z: int) -> int:
    if abs(x) >= PACK3_LIM or abs(y) >= PACK3_LIM or abs(z) >= PACK3_LIM:
        raise ValueError("3-D coordinates out of packing range")
    return ((x + PACK3_OFF) << 42) | ((y + PACK3_OFF) << 21) | (z + PACK3_OFF)


def unpack3(key: int) -> tuple:
    key = int(key)
    return (
        (key >> 42) - PACK3_OFF,
        ((key >> 21) & ((1 << 21) - 1)) - PACK3_OFF,
        (key & ((1 << 21) - 1)) - PACK3_OFF,
    )
