"""Vectorized batched planar first-passage walks with exact event detection.

Walkers advance either by single quarter-partition steps (one uniform each)
or by T-step jump windows (two uniforms each).  The T-step displacement is
drawn exactly: rotating to diagonal coordinates turns the quarter-step walk
into two independent one-dimensional +-1 walks, so the window displacement is
a pair of shifted binomials, sampled by alias tables over a fixed menu of
window sizes.  A window of size T is only taken when no decision boundary is
reachable within T steps, so every entry, exit, and hit event is detected at
its exact step index.  Each walker draws from its own counter-based stream,
making results independent of batching and of worker scheduling.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.stats import binom

from .rng import stream_state, uniforms_at
from .walks import MOVES2

_MENU = np.array(
    [16, 23, 32, 45, 64, 91, 128, 181, 256, 362, 512, 724,
     1024, 1448, 2048, 2896, 4096],
    dtype=np.int64,
)
_MIN_JUMP = int(_MENU[0])
_SIZES = _MENU + 1
_GUARD = 1e-9

_DX2 = np.array([m[0] for m in MOVES2], dtype=np.int64)
_DY2 = np.array([m[1] for m in MOVES2], dtype=np.int64)


def _vose_alias(p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n = p.size
    prob = np.ones(n, dtype=np.float64)
    alias = np.arange(n, dtype=np.int64)
    scaled = (p * n).copy()
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        l = large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        (small if scaled[l] < 1.0 else large).append(l)
    return prob, alias


@lru_cache(maxsize=1)
def _alias_tables() -> Tuple[np.ndarray, np.ndarray]:
    width = int(_MENU[-1]) + 1
    prob = np.zeros((len(_MENU), width), dtype=np.float64)
    alias = np.zeros((len(_MENU), width), dtype=np.int64)
    for i, t in enumerate(_MENU.tolist()):
        pmf = binom.pmf(np.arange(t + 1), t, 0.5)
        pmf = pmf / pmf.sum()
        pr, al = _vose_alias(pmf)
        prob[i, : t + 1] = pr
        alias[i, : t + 1] = al
    return prob, alias


def _binomial_counts(rows: np.ndarray, u: np.ndarray,
                     prob: np.ndarray, alias: np.ndarray) -> np.ndarray:
    """Binomial(T_row, 1/2) counts, one uniform each (index + reused fraction)."""
    size = _SIZES[rows]
    z = u * size
    j = np.minimum(z.astype(np.int64), size - 1)
    frac = z - j
    take_j = frac < prob[rows, j]
    return np.where(take_j, j, alias[rows, j])


def _advance(x, y, t, ctr, s0, gamma, t_max, use_jumps) -> None:
    """Advance every walker once, in place: jump where t_max allows, else step."""
    u = uniforms_at(s0, gamma, ctr)
    if use_jumps:
        jmask = t_max >= _MIN_JUMP
    else:
        jmask = np.zeros(t_max.shape, dtype=bool)
    sidx = np.flatnonzero(~jmask)
    if sidx.size:
        k = (u[sidx] * 4.0).astype(np.int64)
        x[sidx] += _DX2[k]
        y[sidx] += _DY2[k]
        ctr[sidx] += np.uint64(1)
        t[sidx] += 1
    jidx = np.flatnonzero(jmask)
    if jidx.size:
        prob, alias = _alias_tables()
        rows = np.searchsorted(_MENU, t_max[jidx], side="right") - 1
        T = _MENU[rows]
        u2 = uniforms_at(s0[jidx], gamma[jidx], ctr[jidx] + np.uint64(1))
        k1 = _binomial_counts(rows, u[jidx], prob, alias)
        k2 = _binomial_counts(rows, u2, prob, alias)
        x[jidx] += k1 + k2 - T
        y[jidx] += k1 - k2
        ctr[jidx] += np.uint64(2)
        t[jidx] += T


def _as_walker_arrays(seed, stream_ids, start_x, start_y, counter_start):
    stream_ids = np.asarray(stream_ids, dtype=np.uint64)
    n = stream_ids.size
    x = np.broadcast_to(np.asarray(start_x, dtype=np.int64), (n,)).copy()
    y = np.broadcast_to(np.asarray(start_y, dtype=np.int64), (n,)).copy()
    s0, gamma = stream_state(seed, stream_ids)
    ctr = np.full(n, counter_start, dtype=np.uint64)
    t = np.zeros(n, dtype=np.int64)
    return n, x, y, s0, gamma, ctr, t


def _default_cap(outer_radius: float) -> int:
    return int(400 * outer_radius * outer_radius) + 1_000_000


@dataclass
class AbsorbResult:
    """Per-walker first-passage outcome for one concentric absorbing pair."""

    hit: np.ndarray
    exit_time: np.ndarray
    exit_x: np.ndarray
    exit_y: np.ndarray
    marked: Optional[np.ndarray]


def absorb_batch(seed, stream_ids, start_x, start_y, outer_radius, *,
                 hit_origin: bool = False, inner_radius: Optional[float] = None,
                 mark_radius: Optional[float] = None, use_jumps: bool = True,
                 counter_start: int = 0, max_steps: Optional[int] = None) -> AbsorbResult:
    """Run walkers until they hit the inner target or leave the outer ball.

    The inner target is the origin itself (hit_origin) or the closed ball of
    inner_radius; omit both to record plain exits.  mark_radius, if given,
    flags walkers that touch the closed ball of that radius before absorbing.
    Events are evaluated at every step index starting at 0.
    """
    if hit_origin and inner_radius is not None:
        raise ValueError("choose hit_origin or inner_radius, not both")
    if inner_radius is not None and inner_radius >= outer_radius:
        raise ValueError("inner_radius must be smaller than outer_radius")
    if outer_radius <= 0:
        raise ValueError("outer_radius must be positive")
    cap = max_steps if max_steps is not None else _default_cap(outer_radius)
    n, x, y, s0, gamma, ctr, t = _as_walker_arrays(
        seed, stream_ids, start_x, start_y, counter_start
    )
    idx = np.arange(n)
    hit = np.zeros(n, dtype=bool)
    exit_time = np.zeros(n, dtype=np.int64)
    exit_x = np.zeros(n, dtype=np.int64)
    exit_y = np.zeros(n, dtype=np.int64)
    marked = np.zeros(n, dtype=bool) if mark_radius is not None else None

    r2_out = outer_radius * outer_radius
    r2_in = inner_radius * inner_radius if inner_radius is not None else None
    r2_mark = mark_radius * mark_radius if mark_radius is not None else None

    while idx.size:
        d2 = x * x + y * y
        if marked is not None:
            newly = d2 <= r2_mark
            if newly.any():
                marked[idx[newly]] = True
        if hit_origin:
            hit_now = d2 == 0
        elif inner_radius is not None:
            hit_now = d2 <= r2_in
        else:
            hit_now = np.zeros(idx.shape, dtype=bool)
        exit_now = d2 > r2_out
        done = hit_now | exit_now
        if done.any():
            dsel = np.flatnonzero(done)
            orig = idx[dsel]
            hit[orig] = hit_now[dsel]
            exit_time[orig] = t[dsel]
            exit_x[orig] = x[dsel]
            exit_y[orig] = y[dsel]
            keep = np.flatnonzero(~done)
            idx = idx[keep]
            x = x[keep]
            y = y[keep]
            s0 = s0[keep]
            gamma = gamma[keep]
            ctr = ctr[keep]
            t = t[keep]
            d2 = d2[keep]
            if not idx.size:
                break
        dist = np.sqrt(d2.astype(np.float64))
        t_max = np.floor(outer_radius - dist - _GUARD).astype(np.int64)
        if hit_origin:
            l1 = np.abs(x) + np.abs(y)
            t_max = np.minimum(t_max, l1 - 1)
        elif inner_radius is not None:
            t_max = np.minimum(
                t_max, np.floor(dist - inner_radius - _GUARD).astype(np.int64)
            )
        if marked is not None:
            unmarked = ~marked[idx]
            t_mark = np.floor(dist - mark_radius - _GUARD).astype(np.int64)
            t_max = np.where(unmarked, np.minimum(t_max, t_mark), t_max)
        _advance(x, y, t, ctr, s0, gamma, t_max, use_jumps)
        if t.size and int(t.max()) > cap:
            raise RuntimeError(f"walker exceeded the step budget of {cap}")
    return AbsorbResult(hit=hit, exit_time=exit_time, exit_x=exit_x,
                        exit_y=exit_y, marked=marked)


@dataclass
class VisitBatchResult:
    """Per-walker visit counts against B(0,r)/B(0,2r) inside a larger domain."""

    J: np.ndarray
    steps: np.ndarray


def visit_count_batch(seed, stream_ids, start_x, start_y, r, domain_radius, *,
                      use_jumps: bool = True, counter_start: int = 0,
                      max_steps: Optional[int] = None) -> VisitBatchResult:
    """Count entry/exit cycles of B(0,r)/B(0,2r) until the domain exit.

    A cycle opens on entering the closed inner ball and closes on first
    leaving the closed outer ball; J counts openings before the walk first
    leaves the closed domain ball.  Starting inside the inner ball counts.
    """
    if r < 1:
        raise ValueError("inner radius must be at least 1")
    if domain_radius <= 2 * r:
        raise ValueError("domain radius must exceed the outer radius 2r")
    cap = max_steps if max_steps is not None else _default_cap(domain_radius)
    n, x, y, s0, gamma, ctr, t = _as_walker_arrays(
        seed, stream_ids, start_x, start_y, counter_start
    )
    idx = np.arange(n)
    visits = np.zeros(n, dtype=np.int64)
    steps = np.zeros(n, dtype=np.int64)
    # phase False: seeking the inner ball; True: riding the excursion out
    phase = np.zeros(n, dtype=bool)

    r2_in = float(r) * float(r)
    r2_out = 4.0 * float(r) * float(r)
    r2_dom = float(domain_radius) * float(domain_radius)
    out_radius = 2.0 * float(r)

    while idx.size:
        d2 = (x * x + y * y).astype(np.float64)
        leave_outer = phase & (d2 > r2_out)
        if leave_outer.any():
            phase[leave_outer] = False
        seeking = ~phase
        enter_inner = seeking & (d2 <= r2_in)
        if enter_inner.any():
            visits[idx[enter_inner]] += 1
            phase[enter_inner] = True
        domain_exit = ~phase & (d2 > r2_dom)
        if domain_exit.any():
            dsel = np.flatnonzero(domain_exit)
            steps[idx[dsel]] = t[dsel]
            keep = np.flatnonzero(~domain_exit)
            idx = idx[keep]
            x = x[keep]
            y = y[keep]
            s0 = s0[keep]
            gamma = gamma[keep]
            ctr = ctr[keep]
            t = t[keep]
            phase = phase[keep]
            d2 = d2[keep]
            if not idx.size:
                break
        dist = np.sqrt(d2)
        t_out_phase = np.floor(out_radius - dist - _GUARD).astype(np.int64)
        t_in_phase = np.minimum(
            np.floor(dist - r - _GUARD).astype(np.int64),
            np.floor(domain_radius - dist - _GUARD).astype(np.int64),
        )
        t_max = np.where(phase, t_out_phase, t_in_phase)
        _advance(x, y, t, ctr, s0, gamma, t_max, use_jumps)
        if t.size and int(t.max()) > cap:
            raise RuntimeError(f"walker exceeded the step budget of {cap}")
    return VisitBatchResult(J=visits, steps=steps)


def ring_start_positions(ring: np.ndarray, seed, stream_ids) -> Tuple[np.ndarray, np.ndarray]:
    """Pick each walker's start uniformly from a ring, using its draw 0.

    Callers should then run the walk with counter_start=1.
    """
    ring = np.asarray(ring, dtype=np.int64)
    if ring.ndim != 2 or ring.shape[1] != 2 or ring.shape[0] == 0:
        raise ValueError("ring must be a nonempty (k, 2) array of sites")
    stream_ids = np.asarray(stream_ids, dtype=np.uint64)
    s0, gamma = stream_state(seed, stream_ids)
    u0 = uniforms_at(s0, gamma, np.zeros(stream_ids.size, dtype=np.uint64))
    pick = np.minimum((u0 * ring.shape[0]).astype(np.int64), ring.shape[0] - 1)
    return ring[pick, 0].copy(), ring[pick, 1].copy()
