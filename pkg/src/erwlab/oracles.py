"""Closed-form and exactly-solved references the simulations are tested against.

Nothing here draws random numbers.  The planar potential kernel is evaluated
through its spectral integral

    a(m, n) = (2/pi) * integral_0^pi (1 - e^{-|n| xi} cos(m theta)) / sinh(xi)
    with cosh(xi) = 2 - cos(theta),

which the test suite verifies to be the kernel directly: a(0) = 0, value 1 at
the four unit vectors, discrete-harmonic off the origin to 1e-10, and mean
neighbor increment exactly 1 at the origin.  The additive constant kappa of
the large-distance expansion (2/pi) log|x| + kappa is computed from that
integral at |x| = 1e4 (truncation error O(|x|^-2)), never copied from tables.

Hitting probabilities inside a finite ball are solved exactly as sparse linear
systems; they are the oracle side of the Monte Carlo comparisons and never
share code with the walk engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import BallSpec

_HIT_SITE_BUDGET = 1_000_000


# ---------------------------------------------------------------------------
# planar potential kernel


@lru_cache(maxsize=128)
def _composite_gauss(panels: int, split_first: int, order: int = 16):
    """Gauss-Legendre nodes on [0, pi]: uniform panels, the first one split
    geometrically ``split_first`` times to resolve boundary layers at 0."""
    x, w = np.polynomial.legendre.leggauss(order)
    width = math.pi / panels
    edges = [0.0]
    edges.extend(width * 2.0 ** -j for j in range(split_first, 0, -1))
    edges.extend(width * (j + 1) for j in range(panels))
    nodes, weights = [], []
    for a, b in zip(edges, edges[1:]):
        half = (b - a) / 2.0
        nodes.append(a + (x + 1.0) * half)
        weights.append(w * half)
    return np.concatenate(nodes), np.concatenate(weights)


def potential_kernel_exact(x) -> float:
    """Potential kernel a(x) of the planar simple walk, spectral integral."""
    if len(x) != 2:
        raise ValueError("the potential kernel is planar")
    m, n = sorted((abs(int(x[0])), abs(int(x[1]))))
    if n == 0:
        return 0.0
    # small coordinate oscillates, large coordinate damps; panel grading must
    # resolve both the cos(m theta) period and the e^{-n theta} layer
    panels = max(16, 4 * m)
    first_width = math.pi / panels
    layer = 1.0 / (8.0 * n)
    split = max(0, math.ceil(math.log2(first_width / layer))) if layer < first_width else 0
    theta, w = _composite_gauss(panels, split)
    s = 2.0 * np.sin(theta / 2.0) ** 2          # cosh(xi) - 1, stable near 0
    sinh_xi = np.sqrt(s * (s + 2.0))
    xi = np.log1p(s + sinh_xi)
    damp = np.exp(-n * xi)
    # 1 - damp*cos(m t) without cancellation
    numer = -np.expm1(-n * xi) + damp * 2.0 * np.sin(m * theta / 2.0) ** 2
    return float(np.dot(w, numer / sinh_xi) * 2.0 / math.pi)


@lru_cache(maxsize=1)
def potential_kernel_constant() -> float:
    """kappa = a(x) - (2/pi) log|x| evaluated at |x| = 1e4."""
    far = 10_000
    return potential_kernel_exact((far, 0)) - (2.0 / math.pi) * math.log(far)


def potential_kernel_asymptotic(x) -> float:
    """(2/pi) log|x| + kappa for x != 0; exactly 0 at the origin."""
    if len(x) != 2:
        raise ValueError("the potential kernel is planar")
    if x[0] == 0 and x[1] == 0:
        return 0.0
    r = math.hypot(x[0], x[1])
    return (2.0 / math.pi) * math.log(r) + potential_kernel_constant()


# ---------------------------------------------------------------------------
# exact hitting probabilities in B(0, 2r)


def _enumerate_ball(radius: float):
    """Sites of the closed ball around 0 with an index grid for O(1) lookup."""
    R = int(math.floor(radius))
    r2 = radius * radius
    coords = []
    grid = -np.ones((2 * R + 1, 2 * R + 1), dtype=np.int64)
    for vx in range(-R, R + 1):
        for vy in range(-R, R + 1):
            if vx * vx + vy * vy <= r2:
                grid[vx + R, vy + R] = len(coords)
                coords.append((vx, vy))
    return coords, grid, R


@lru_cache(maxsize=16)
def _hit_solution(radius_key: float):
    """h on B(0, 2r): h(0) = 1, absorbed to 0 outside, harmonic between."""
    outer = 2.0 * radius_key
    if math.pi * outer * outer > _HIT_SITE_BUDGET:
        raise ValueError(f"ball B(0, {outer:g}) exceeds the exact-solve site budget")
    coords, grid, R = _enumerate_ball(outer)
    ncoords = len(coords)
    origin = grid[R, R]
    rows, cols, vals = [], [], []
    rhs = np.zeros(ncoords)
    for i, (vx, vy) in enumerate(coords):
        rows.append(i)
        cols.append(i)
        vals.append(1.0)
        if i == origin:
            rhs[i] = 1.0
            continue
        for nx, ny in ((vx + 1, vy), (vx - 1, vy), (vx, vy + 1), (vx, vy - 1)):
            if -R <= nx <= R and -R <= ny <= R:
                j = grid[nx + R, ny + R]
                if j >= 0:
                    rows.append(i)
                    cols.append(j)
                    vals.append(-0.25)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(ncoords, ncoords))
    h = spla.spsolve(mat, rhs)
    return coords, grid, R, h


def exact_hit_probability(start, r: float) -> float:
    """P(reach 0 strictly before first exit of closed B(0, 2r)) from start."""
    if len(start) != 2:
        raise ValueError("hitting solve is planar")
    if r <= 0:
        raise ValueError("radius must be positive")
    sx, sy = int(start[0]), int(start[1])
    if sx == 0 and sy == 0:
        return 1.0
    outer = 2.0 * r
    if sx * sx + sy * sy > outer * outer:
        return 0.0
    coords, grid, R, h = _hit_solution(float(r))
    return float(h[grid[sx + R, sy + R]])


def hit_solution_residual(r: float) -> float:
    """Max |h - neighbor mean| over interior non-origin sites, for tests."""
    coords, grid, R, h = _hit_solution(float(r))
    worst = 0.0
    for i, (vx, vy) in enumerate(coords):
        if vx == 0 and vy == 0:
            continue
        acc = 0.0
        for nx, ny in ((vx + 1, vy), (vx - 1, vy), (vx, vy + 1), (vx, vy - 1)):
            if -R <= nx <= R and -R <= ny <= R:
                j = grid[nx + R, ny + R]
                if j >= 0:
                    acc += h[j]
        worst = max(worst, abs(h[i] - 0.25 * acc))
    return worst


def exit_position_masses(start, ball: BallSpec) -> dict:
    """Exact exit-site distribution of a simple walk leaving the closed outer ball.

    One sparse solve for the expected-visit vector of the absorbing chain;
    returns {exit site: probability} over the outside layer.
    """
    if ball.dim != 2:
        raise ValueError("exit distribution solve is planar")
    outer = ball.outer_radius
    if math.pi * outer * outer > _HIT_SITE_BUDGET:
        raise ValueError("ball exceeds the exact-solve site budget")
    cx, cy = ball.center
    sx, sy = int(start[0]) - cx, int(start[1]) - cy
    if sx * sx + sy * sy > outer * outer:
        raise ValueError("start lies outside the closed outer ball")
    coords, grid, R = _enumerate_ball(outer)
    ncoords = len(coords)
    rows, cols, vals = [], [], []
    for i, (vx, vy) in enumerate(coords):
        rows.append(i)
        cols.append(i)
        vals.append(1.0)
        for nx, ny in ((vx + 1, vy), (vx - 1, vy), (vx, vy + 1), (vx, vy - 1)):
            if -R <= nx <= R and -R <= ny <= R:
                j = grid[nx + R, ny + R]
                if j >= 0:
                    rows.append(i)
                    cols.append(j)
                    vals.append(-0.25)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(ncoords, ncoords))
    e = np.zeros(ncoords)
    e[grid[sx + R, sy + R]] = 1.0
    visits = spla.spsolve(mat.T.tocsr(), e)
    masses: dict = {}
    for i, (vx, vy) in enumerate(coords):
        for nx, ny in ((vx + 1, vy), (vx - 1, vy), (vx, vy + 1), (vx, vy - 1)):
            inside = (
                -R <= nx <= R and -R <= ny <= R and grid[nx + R, ny + R] >= 0
            )
            if not inside:
                site = (nx + cx, ny + cy)
                masses[site] = masses.get(site, 0.0) + 0.25 * visits[i]
    return masses


# ---------------------------------------------------------------------------
# annulus escape reference


def annulus_escape(r: float, big_r: float) -> float:
    """log 2 / log(R/r): escape to distance R from the 2r ring before B(0, r)."""
    if r <= 0:
        raise ValueError("inner radius must be positive")
    if big_r <= 2.0 * r:
        raise ValueError("outer radius must exceed 2r")
    return math.log(2.0) / math.log(big_r / r)


# ---------------------------------------------------------------------------
# block sizes and the drift recursion


def block_size(n: int) -> int:
    """ceil(n / exp((ln n)^{1/4})), decided exactly near integer boundaries."""
    if not isinstance(n, int) or n < 2:
        raise ValueError(f"block size needs an integer n >= 2, got {n!r}")
    value = n / math.exp(math.log(n) ** 0.25)
    if abs(value - round(value)) < 1e-9:
        import mpmath

        with mpmath.workdps(60):
            value_hp = mpmath.mpf(n) / mpmath.exp(mpmath.log(n) ** mpmath.mpf("0.25"))
            return int(mpmath.ceil(value_hp))
    return math.ceil(value)


def alpha_step(alpha_k: float, ratio: float, lam: int) -> float:
    """One recursion level: alpha_n = alpha_k * (1 - (2 lam + 2) / ratio)."""
    return alpha_k * (1.0 - (2.0 * lam + 2.0) / ratio)


@dataclass
class AlphaSchedule:
    """Drift-fraction recursion down a block-size chain.

    Levels are stored top-down: level i has scale ns[i] and block size
    ks[i] = ns[i+1]; the bottom scale (first chain member <= base_n) holds
    base_alpha.  alphas aligns with ns.
    """

    base_n: int
    base_alpha: float
    lam: int
    top_n: int
    ns: list = field(default_factory=list)
    ks: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    alphas: list = field(default_factory=list)

    @property
    def inf_alpha(self) -> float:
        return min(self.alphas)

    @property
    def levels(self) -> int:
        return len(self.ns)


def alpha_schedule(base_n: int, base_alpha: float, lam: int, top_n: int) -> AlphaSchedule:
    """Chain top_n -> block_size(top_n) -> ... -> (<= base_n), alphas bottom-up.

    Every level must satisfy n/k > 2 lam + 2 (real ratio), otherwise the
    recursion factor is not positive and the schedule is rejected.
    """
    if not (isinstance(base_n, int) and isinstance(top_n, int)):
        raise ValueError("scales must be integers")
    if base_n < 2 or top_n <= base_n:
        raise ValueError("need 2 <= base_n < top_n")
    if not (0.0 < base_alpha <= 1.0):
        raise ValueError(f"base alpha must lie in (0, 1], got {base_alpha}")
    if not (isinstance(lam, int) and lam >= 1):
        raise ValueError(f"lambda must be a positive integer, got {lam!r}")

    chain = [top_n]
    while chain[-1] > base_n:
        nxt = block_size(chain[-1])
        if nxt >= chain[-1]:
            raise ValueError(f"block-size chain stalls at {chain[-1]}")
        chain.append(nxt)

    floor = 2.0 * lam + 2.0
    ratios = []
    for n_i, k_i in zip(chain, chain[1:]):
        ratio = n_i / k_i
        if ratio <= floor:
            raise ValueError(
                f"level n={n_i}, k={k_i}: ratio {ratio:.4f} <= 2*lam+2 = {floor:g}; "
                "the recursion factor would not be positive"
            )
        ratios.append(ratio)

    alphas = [0.0] * len(chain)
    alphas[-1] = base_alpha
    for i in range(len(chain) - 2, -1, -1):
        alphas[i] = alpha_step(alphas[i + 1], ratios[i], lam)

    return AlphaSchedule(
        base_n=base_n,
        base_alpha=base_alpha,
        lam=lam,
        top_n=top_n,
        ns=chain,
        ks=chain[1:] + [None],
        ratios=ratios + [None],
        alphas=alphas,
    )


# ---------------------------------------------------------------------------
# hitting summary record and fixture export


@dataclass
class HittingEstimate:
    """Exact and reference hitting values for one radius, with MC companions."""

    r: float
    start: tuple
    exact: float
    ref_log2r: float                 # log 2 / log 2r
    ref_logr: float                  # log 2 / log r
    mc_mean: Optional[float] = None
    mc_stderr: Optional[float] = None
    mc_count: Optional[int] = None


def hitting_reference(r: float, start) -> HittingEstimate:
    return HittingEstimate(
        r=float(r),
        start=tuple(start),
        exact=exact_hit_probability(start, r),
        ref_log2r=math.log(2.0) / math.log(2.0 * r),
        ref_logr=math.log(2.0) / math.log(r),
    )


def oracle_fixture() -> dict:
    """Pinned oracle values, exportable as JSON fixtures."""
    kernel_samples = {
        "0,0": potential_kernel_exact((0, 0)),
        "1,0": potential_kernel_exact((1, 0)),
        "1,1": potential_kernel_exact((1, 1)),
        "2,0": potential_kernel_exact((2, 0)),
        "5,3": potential_kernel_exact((5, 3)),
        "100,0": potential_kernel_exact((100, 0)),
    }
    hits = {
        str(r): exact_hit_probability((r, 0), float(r)) for r in (8, 16, 32)
    }
    return {
        "kappa": potential_kernel_constant(),
        "potential_kernel": kernel_samples,
        "hit_probability_from_r_0": hits,
        "annulus_escape_16_8192": annulus_escape(16.0, 8192.0),
        "block_size": {"2": block_size(2), "1000": block_size(1000), "1000000": block_size(10**6)},
    }
