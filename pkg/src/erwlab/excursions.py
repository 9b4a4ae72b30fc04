"""Stopping-time machinery over recorded walks.

Visit counts J for concentric ball pairs B(x,r)/B(x,2r), exit times,
hit-before-exit events, rejection-sampled conditioned excursions, and
unvisited-site counts inside a ball.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .lattice import BallSpec, check_point, in_ball, pack2, pack3
from .rng import RngStream
from .walks import (
    WalkPath,
    srw2_positions_from_uniforms,
    srw3_positions_from_uniforms,
)

_ATTEMPT_STEP_CAP = 50_000_000   # per-attempt step budget for rejection sampling
_BALL_SITE_BUDGET = 10_000_000


@dataclass
class VisitRecord:
    """Entry/exit bookkeeping for one walk against one ball pair.

    tau_pairs holds (tau_in, tau_out) step indices per visit; tau_out is None
    when the walk was stopped before completing the final excursion, in which
    case truncated is set.
    """

    ball: BallSpec
    tau_pairs: List[Tuple[int, Optional[int]]]
    J: int
    truncated: bool


@dataclass
class ExcursionSample:
    """One accepted excursion from x_in to its first outer-ball exit at x_out."""

    x_in: tuple
    x_out: tuple
    path: WalkPath
    attempts: int


def _positions(path: WalkPath) -> np.ndarray:
    if path.positions is None:
        raise ValueError("operation needs a fully recorded path (record='full')")
    return path.positions


def _dist2_to(positions: np.ndarray, center) -> np.ndarray:
    diff = positions - np.asarray(center, dtype=np.int64)
    return np.sum(diff * diff, axis=1)


def count_visits(path: WalkPath, ball: BallSpec, stop: Optional[int] = None) -> VisitRecord:
    """Count excursion cycles: entry into the inner ball, then first exit from
    the outer ball.  A path starting inside the inner ball scores tau_in = 0.

    Only indices in [0, stop] are inspected, so appending post-stop steps to
    the path never changes the result.  J counts tau_in values < stop.
    """
    if ball.dim != len(path.start):
        raise ValueError(f"ball dimension {ball.dim} != path dimension {len(path.start)}")
    if stop is None:
        stop = path.length
    if not 0 <= stop <= path.length:
        raise ValueError(f"stop must lie in [0, path length], got {stop}")
    pos = _positions(path)[: stop + 1]
    d2 = _dist2_to(pos, ball.center)
    r2_in = ball.radius * ball.radius
    r2_out = ball.outer_radius * ball.outer_radius
    inner_times = np.flatnonzero(d2[:stop] <= r2_in)
    outside_times = np.flatnonzero(d2 > r2_out)

    pairs: List[Tuple[int, Optional[int]]] = []
    truncated = False
    t = 0
    while True:
        i = np.searchsorted(inner_times, t)
        if i == len(inner_times):
            break
        tau_in = int(inner_times[i])
        o = np.searchsorted(outside_times, tau_in + 1)
        if o == len(outside_times):
            pairs.append((tau_in, None))
            truncated = True
            break
        tau_out = int(outside_times[o])
        pairs.append((tau_in, tau_out))
        t = tau_out
    return VisitRecord(ball=ball, tau_pairs=pairs, J=len(pairs), truncated=truncated)


def total_visits(records) -> int:
    """Sum of J over records sharing one ball pair."""
    records = list(records)
    if not records:
        return 0
    ball = records[0].ball
    if any(rec.ball != ball for rec in records):
        raise ValueError("records mix different ball pairs")
    return sum(rec.J for rec in records)


def exit_time(path: WalkPath, ball: BallSpec) -> Optional[int]:
    """First index strictly outside the closed outer ball, None if never."""
    pos = _positions(path)
    if ball.dim != len(path.start):
        raise ValueError(f"ball dimension {ball.dim} != path dimension {len(path.start)}")
    if not in_ball(path.start, ball, which="outer"):
        raise ValueError("path must start inside the closed outer ball")
    d2 = _dist2_to(pos, ball.center)
    out = np.flatnonzero(d2 > ball.outer_radius * ball.outer_radius)
    if out.size == 0:
        return None
    return int(out[0])


def _stepper_for(dim: int):
    if dim == 2:
        return srw2_positions_from_uniforms
    if dim == 3:
        return srw3_positions_from_uniforms
    raise ValueError(f"unsupported dimension {dim}")


def hit_before_exit(start, target, outer: BallSpec, rng: RngStream,
                    chunk: int = 1024) -> bool:
    """Simulate a simple walk from start; True iff it reaches target strictly
    before its first exit from the closed outer ball."""
    dim = outer.dim
    if len(start) != dim or len(target) != dim:
        raise ValueError("start/target dimension mismatch with the ball")
    check_point(start)
    check_point(target)
    if not in_ball(start, outer, which="outer"):
        raise ValueError("start must lie inside the closed outer ball")
    if tuple(start) == tuple(target):
        return True
    stepper = _stepper_for(dim)
    r2_out = outer.outer_radius * outer.outer_radius
    tgt = np.asarray(target, dtype=np.int64)
    pos = tuple(start)
    steps = 0
    while True:
        block = stepper(rng.uniforms(chunk), start=pos)[1:]
        d2 = _dist2_to(block, outer.center)
        exits = np.flatnonzero(d2 > r2_out)
        exit_idx = int(exits[0]) if exits.size else chunk
        hits = np.flatnonzero(np.all(block[:exit_idx] == tgt, axis=1))
        if hits.size:
            return True
        if exits.size:
            return False
        pos = tuple(int(c) for c in block[-1])
        steps += chunk
        if steps > _ATTEMPT_STEP_CAP:
            raise RuntimeError("hit_before_exit exceeded its step budget")


def _walk_until_exit(start, ball: BallSpec, rng: RngStream, chunk: int = 1024) -> np.ndarray:
    """Positions of a simple walk from start through its first exit from the
    closed outer ball (inclusive)."""
    dim = ball.dim
    stepper = _stepper_for(dim)
    r2_out = ball.outer_radius * ball.outer_radius
    blocks = [np.asarray([start], dtype=np.int64)]
    pos = tuple(start)
    steps = 0
    while True:
        block = stepper(rng.uniforms(chunk), start=pos)[1:]
        d2 = _dist2_to(block, ball.center)
        exits = np.flatnonzero(d2 > r2_out)
        if exits.size:
            blocks.append(block[: int(exits[0]) + 1])
            return np.concatenate(blocks, axis=0)
        blocks.append(block)
        pos = tuple(int(c) for c in block[-1])
        steps += chunk
        if steps > _ATTEMPT_STEP_CAP:
            raise RuntimeError("excursion exceeded its step budget")


def _path_from_positions(positions: np.ndarray, kind: str) -> WalkPath:
    length = positions.shape[0] - 1
    if positions.shape[1] == 2:
        packed = np.unique(pack2(positions[:, 0], positions[:, 1]))
    else:
        packed = np.unique(pack3(positions[:, 0], positions[:, 1], positions[:, 2]))
    return WalkPath(
        kind=kind,
        start=tuple(int(c) for c in positions[0]),
        length=length,
        positions=positions,
        first_coord_trace=positions[:, 0].copy(),
        distinct_count=int(packed.size),
        end=tuple(int(c) for c in positions[-1]),
        visited_packed=packed if positions.shape[1] == 2 else None,
    )


def sample_conditioned_excursion(x_in, x_out, ball: BallSpec, rng: RngStream,
                                 max_attempts: int) -> ExcursionSample:
    """Rejection-sample a walk from x_in whose first outer-ball exit lands on
    x_out.  Raises when max_attempts simulations all exit elsewhere."""
    if not in_ball(x_in, ball, which="outer"):
        raise ValueError("x_in must lie inside the closed outer ball")
    if in_ball(x_out, ball, which="outer"):
        raise ValueError("x_out must lie strictly outside the closed outer ball")
    x_out = tuple(int(c) for c in x_out)
    attempts = 0
    while attempts < max_attempts:
        attempts += 1
        positions = _walk_until_exit(x_in, ball, rng)
        end = tuple(int(c) for c in positions[-1])
        if end == x_out:
            kind = "srw2" if ball.dim == 2 else "srw3"
            return ExcursionSample(
                x_in=tuple(int(c) for c in x_in),
                x_out=x_out,
                path=_path_from_positions(positions, kind),
                attempts=attempts,
            )
    raise RuntimeError(
        f"no excursion reaching {x_out} accepted within {max_attempts} attempts"
    )


def _ball_sites_packed(ball: BallSpec) -> np.ndarray:
    dim = ball.dim
    r = ball.radius
    ir = int(np.floor(r))
    center = ball.center
    r2 = r * r
    if dim == 2:
        cx, cy = center
        xs = np.arange(cx - ir, cx + ir + 1, dtype=np.int64)
        ys = np.arange(cy - ir, cy + ir + 1, dtype=np.int64)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        mask = (gx - cx) ** 2 + (gy - cy) ** 2 <= r2
        return pack2(gx[mask], gy[mask])
    cx, cy, cz = center
    xs = np.arange(cx - ir, cx + ir + 1, dtype=np.int64)
    ys = np.arange(cy - ir, cy + ir + 1, dtype=np.int64)
    zs = np.arange(cz - ir, cz + ir + 1, dtype=np.int64)
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    mask = (gx - cx) ** 2 + (gy - cy) ** 2 + (gz - cz) ** 2 <= r2
    return pack3(gx[mask], gy[mask], gz[mask])


def unvisited_in_ball(paths, ball: BallSpec) -> int:
    """Number of inner-ball lattice sites occupied by none of the paths."""
    dim = ball.dim
    side = 2 * int(np.floor(ball.radius)) + 1
    if side ** dim > 4 * _BALL_SITE_BUDGET:
        raise ValueError(f"ball with ~{side ** dim} candidate sites exceeds the enumeration budget")
    sites = _ball_sites_packed(ball)
    if sites.size > _BALL_SITE_BUDGET:
        raise ValueError(f"ball with {sites.size} sites exceeds the enumeration budget")
    visited = []
    for path in paths:
        if len(path.start) != dim:
            raise ValueError("path dimension mismatch with the ball")
        if path.visited_packed is not None and dim == 2:
            visited.append(path.visited_packed)
            continue
        pos = _positions(path)
        if dim == 2:
            visited.append(np.unique(pack2(pos[:, 0], pos[:, 1])))
        else:
            visited.append(np.unique(pack3(pos[:, 0], pos[:, 1], pos[:, 2])))
    if not visited:
        return int(sites.size)
    allv = np.unique(np.concatenate(visited))
    return int(sites.size - np.count_nonzero(np.isin(sites, allv, assume_unique=True)))
