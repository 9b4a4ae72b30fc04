"""Sequential walk engine: excited and simple random walks.

One uniform drives one step everywhere, through a fixed partition of [0,1):
in 3-D the sixths map to -e1, +e1, +e2, -e2, +e3, -e3 in that order, in 2-D
the quarters map to -e1, +e1, +e2, -e2.  An excited step at a never-visited
vertex moves the -e1/+e1 cut from 1/6 down to 1/6 - eps and leaves the rest
alone, so under a shared stream the excited first coordinate can never fall
behind the simple one at any step.  ``run_coupled_pair`` exploits the same
fact in reverse: it replays the excited walk's uniforms to reconstruct the
simple-walk half without stepping it.

A vertex becomes visited the moment the walk occupies it; the step taken from
a vertex consults the status the walk found on arrival there.  External
configurations pre-mark vertices as visited without the walk having occupied
them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lattice import PACK3_LIM, PACK3_OFF, check_point, pack2
from .rng import RngStream

_SIXTH = 1.0 / 6.0
_THIRD = 1.0 / 3.0

# index i of the partition cell [i/6, (i+1)/6) -> move, 3-D
MOVES3 = ((-1, 0, 0), (1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))
# quarter-cell partition, 2-D
MOVES2 = ((-1, 0), (1, 0), (0, 1), (0, -1))

_DX3 = np.array([m[0] for m in MOVES3], dtype=np.int64)
_DY3 = np.array([m[1] for m in MOVES3], dtype=np.int64)
_DZ3 = np.array([m[2] for m in MOVES3], dtype=np.int64)
_DX2 = np.array([m[0] for m in MOVES2], dtype=np.int64)
_DY2 = np.array([m[1] for m in MOVES2], dtype=np.int64)

_FULL_RECORD_BUDGET = 200_000_000  # coordinates held in memory
_CHUNK = 4096


@dataclass(frozen=True)
class ErwParams:
    """Excitation strength for the 3-D walk; 0 < epsilon <= 1/6, stored exactly."""

    epsilon: float

    def __post_init__(self):
        if not (0.0 < self.epsilon <= _SIXTH):
            raise ValueError(f"epsilon must satisfy 0 < epsilon <= 1/6, got {self.epsilon}")


@dataclass(frozen=True)
class ExternalConfiguration:
    """Vertices pre-marked visited: none, a half-space x1 <= threshold, or a set."""

    kind: str = "none"
    threshold: Optional[int] = None
    sites: Optional[frozenset] = None

    def __post_init__(self):
        if self.kind == "none":
            if self.threshold is not None or self.sites is not None:
                raise ValueError("empty configuration carries no data")
        elif self.kind == "half_space":
            if not isinstance(self.threshold, int):
                raise ValueError("half-space threshold must be an integer")
            if self.sites is not None:
                raise ValueError("half-space configuration carries no site set")
        elif self.kind == "explicit":
            if self.sites is None or self.threshold is not None:
                raise ValueError("explicit configuration needs exactly a site set")
            object.__setattr__(
                self, "sites", frozenset(check_point(p) for p in self.sites)
            )
        else:
            raise ValueError(f"unknown configuration kind {self.kind!r}")

    @classmethod
    def none_marked(cls) -> "ExternalConfiguration":
        return cls()

    @classmethod
    def half_space(cls, threshold: int) -> "ExternalConfiguration":
        return cls(kind="half_space", threshold=threshold)

    @classmethod
    def explicit(cls, sites) -> "ExternalConfiguration":
        return cls(kind="explicit", sites=frozenset(sites))

    def covers(self, p) -> bool:
        if self.kind == "none":
            return False
        if self.kind == "half_space":
            return p[0] <= self.threshold
        return tuple(p) in self.sites


class VisitedSet:
    """Occupied-vertex set with packed int64 keys and tuple fallback.

    Points with every |coordinate| < 2^20 use a packed integer key; others use
    the tuple itself.  Key types cannot collide, and a point always maps to
    the same key, so mixed membership stays consistent.
    """

    __slots__ = ("config", "_seen")

    def __init__(self, config: Optional[ExternalConfiguration] = None):
        self.config = config if config is not None else ExternalConfiguration()
        self._seen = set()

    @staticmethod
    def _key(p):
        if len(p) == 3:
            x, y, z = p
            if -PACK3_LIM < x < PACK3_LIM and -PACK3_LIM < y < PACK3_LIM and -PACK3_LIM < z < PACK3_LIM:
                return ((x + PACK3_OFF) << 42) | ((y + PACK3_OFF) << 21) | (z + PACK3_OFF)
        return tuple(p)

    def contains(self, p) -> bool:
        return self._key(p) in self._seen or self.config.covers(p)

    def add(self, p) -> None:
        self._seen.add(self._key(p))

    def check_and_occupy(self, p) -> bool:
        """Insert p; report whether it was new (never occupied, not pre-marked)."""
        key = self._key(p)
        if key in self._seen:
            return False
        self._seen.add(key)
        return not self.config.covers(p)

    def __len__(self) -> int:
        return len(self._seen)

    def __contains__(self, p) -> bool:
        return self.contains(p)


@dataclass
class WalkPath:
    """Recorded walk: full positions or trace-level summaries.

    positions is an int64 array of shape (length+1, d) in full mode, None in
    trace mode.  first_coord_trace always holds the first-coordinate series
    (length+1).  new_flags[t] says whether the vertex occupied at time t was
    new on arrival (excited walks only).  visited_packed is the sorted array
    of distinct packed sites for 2-D walks.
    """

    kind: str
    start: tuple
    length: int
    positions: Optional[np.ndarray]
    first_coord_trace: np.ndarray
    distinct_count: int
    end: tuple
    new_flags: Optional[np.ndarray] = None
    visited_packed: Optional[np.ndarray] = None
    epsilon: Optional[float] = None


def srw_step(position, stream: RngStream):
    """One simple step from position, dimension taken from the point."""
    u = stream.uniform()
    if len(position) == 3:
        m = MOVES3[int(u * 6.0)]
        return (position[0] + m[0], position[1] + m[1], position[2] + m[2])
    if len(position) == 2:
        m = MOVES2[int(u * 4.0)]
        return (position[0] + m[0], position[1] + m[1])
    raise ValueError("srw_step needs a 2-D or 3-D point")


def _erw_index(u: float, was_new: bool, new_cut: float) -> int:
    if was_new:
        if u < new_cut:
            return 0
        if u < _THIRD:
            return 1
    return int(u * 6.0)


def erw_step(position, visited: VisitedSet, params: ErwParams, stream: RngStream):
    """One excited step; occupies position first and reports its arrival status."""
    if len(position) != 3:
        raise ValueError("excited steps are 3-D")
    was_new = visited.check_and_occupy(position)
    u = stream.uniform()
    m = MOVES3[_erw_index(u, was_new, _SIXTH - params.epsilon)]
    return (position[0] + m[0], position[1] + m[1], position[2] + m[2]), was_new


def coupled_step(position_erw, position_srw, visited: VisitedSet, params: ErwParams,
                 stream: RngStream):
    """One shared-uniform step of the (excited, simple) pair; returns both moves."""
    was_new = visited.check_and_occupy(position_erw)
    u = stream.uniform()
    return (
        MOVES3[_erw_index(u, was_new, _SIXTH - params.epsilon)],
        MOVES3[int(u * 6.0)],
    )


def _record_guard(length: int, dim: int, record: str) -> None:
    if record not in ("full", "trace_only"):
        raise ValueError(f"record must be 'full' or 'trace_only', got {record!r}")
    if record == "full" and (length + 1) * dim > _FULL_RECORD_BUDGET:
        raise ValueError("full record would exceed the memory budget; use trace_only")


def _run_erw(length, start, epsilon, config, stream, record, kind="erw"):
    px, py, pz = start
    cfg = config if config is not None else ExternalConfiguration()
    half = cfg.kind == "half_space"
    thr = cfg.threshold if half else 0
    explicit = None
    if cfg.kind == "explicit":
        explicit = {VisitedSet._key(p) for p in cfg.sites}
    fast = max(abs(px), abs(py), abs(pz)) + length < PACK3_LIM

    new_cut = _SIXTH - epsilon
    full = record == "full"
    seen = set()
    x1 = [px]
    nf_list = []
    pos_list = [(px, py, pz)] if full else None

    if fast:
        key = ((px + PACK3_OFF) << 42) | ((py + PACK3_OFF) << 21) | (pz + PACK3_OFF)
    else:
        key = (px, py, pz)
    seen.add(key)
    was_new = not (half and px <= thr) and not (explicit is not None and key in explicit)
    nf_list.append(was_new)

    dx = _DX3.tolist()
    dy = _DY3.tolist()
    dz = _DZ3.tolist()
    remaining = length
    while remaining:
        take = _CHUNK if remaining > _CHUNK else remaining
        remaining -= take
        for u in stream.uniforms(take).tolist():
            if was_new:
                if u < new_cut:
                    i = 0
                elif u < _THIRD:
                    i = 1
                else:
                    i = int(u * 6.0)
            else:
                i = int(u * 6.0)
            px += dx[i]
            py += dy[i]
            pz += dz[i]
            if fast:
                key = ((px + PACK3_OFF) << 42) | ((py + PACK3_OFF) << 21) | (pz + PACK3_OFF)
            else:
                key = (px, py, pz)
            if key in seen:
                was_new = False
            else:
                seen.add(key)
                was_new = not (half and px <= thr) and not (
                    explicit is not None and key in explicit
                )
            x1.append(px)
            nf_list.append(was_new)
            if full:
                pos_list.append((px, py, pz))

    return WalkPath(
        kind=kind,
        start=tuple(start),
        length=length,
        positions=np.array(pos_list, dtype=np.int64) if full else None,
        first_coord_trace=np.array(x1, dtype=np.int64),
        distinct_count=len(seen),
        end=(px, py, pz),
        new_flags=np.array(nf_list, dtype=np.bool_),
        epsilon=epsilon,
    )


def srw3_positions_from_uniforms(u: np.ndarray, start=(0, 0, 0)) -> np.ndarray:
    """3-D simple-walk positions driven by the fixed partition; (n+1, 3) int64."""
    idx = (u * 6.0).astype(np.int64)
    pos = np.empty((len(u) + 1, 3), dtype=np.int64)
    pos[0] = start
    np.cumsum(_DX3[idx], out=pos[1:, 0])
    np.cumsum(_DY3[idx], out=pos[1:, 1])
    np.cumsum(_DZ3[idx], out=pos[1:, 2])
    pos[1:] += np.asarray(start, dtype=np.int64)
    return pos


def srw2_positions_from_uniforms(u: np.ndarray, start=(0, 0)) -> np.ndarray:
    """2-D simple-walk positions driven by the fixed partition; (n+1, 2) int64."""
    idx = (u * 4.0).astype(np.int64)
    pos = np.empty((len(u) + 1, 2), dtype=np.int64)
    pos[0] = start
    np.cumsum(_DX2[idx], out=pos[1:, 0])
    np.cumsum(_DY2[idx], out=pos[1:, 1])
    pos[1:] += np.asarray(start, dtype=np.int64)
    return pos


def _run_srw2(length, start, stream, record):
    u = stream.uniforms(length)
    pos = srw2_positions_from_uniforms(u, start)
    packed = np.unique(pack2(pos[:, 0], pos[:, 1]))
    trace = pos[:, 0].copy()
    end = (int(pos[-1, 0]), int(pos[-1, 1]))
    return WalkPath(
        kind="srw2",
        start=tuple(start),
        length=length,
        positions=pos if record == "full" else None,
        first_coord_trace=trace,
        distinct_count=int(packed.size),
        end=end,
        visited_packed=packed,
    )


def _run_srw3(length, start, stream, record):
    u = stream.uniforms(length)
    pos = srw3_positions_from_uniforms(u, start)
    keys = ((pos[:, 0] + PACK3_OFF).astype(np.int64) << 42) \
        | ((pos[:, 1] + PACK3_OFF).astype(np.int64) << 21) \
        | (pos[:, 2] + PACK3_OFF).astype(np.int64)
    distinct = int(np.unique(keys).size)
    end = tuple(int(c) for c in pos[-1])
    return WalkPath(
        kind="srw3",
        start=tuple(start),
        length=length,
        positions=pos if record == "full" else None,
        first_coord_trace=pos[:, 0].copy(),
        distinct_count=distinct,
        end=end,
    )


def run_walk(kind: str, length: int, *, start=None, epsilon: Optional[float] = None,
             config: Optional[ExternalConfiguration] = None, stream: RngStream,
             record: str = "trace_only") -> WalkPath:
    """Simulate a walk of exactly ``length`` steps from ``start``.

    kind is one of srw2, srw3, erw.  The excited kind requires epsilon and
    accepts an external configuration; the simple kinds accept neither.
    """
    if length < 0:
        raise ValueError("length must be nonnegative")
    if kind == "erw":
        start = (0, 0, 0) if start is None else check_point(start)
        if len(start) != 3:
            raise ValueError("excited walks are 3-D")
        _record_guard(length, 3, record)
        params = ErwParams(epsilon if epsilon is not None else -1.0)
        return _run_erw(length, start, params.epsilon, config, stream, record)
    if epsilon is not None or config is not None:
        raise ValueError("epsilon and external configuration apply to excited walks only")
    if kind == "srw3":
        start = (0, 0, 0) if start is None else check_point(start)
        if len(start) != 3:
            raise ValueError("srw3 needs a 3-D start")
        if max(abs(c) for c in start) + length >= PACK3_LIM:
            raise ValueError("srw3 walk would leave the packed coordinate range")
        _record_guard(length, 3, record)
        return _run_srw3(length, start, stream, record)
    if kind == "srw2":
        start = (0, 0) if start is None else check_point(start)
        if len(start) != 2:
            raise ValueError("srw2 needs a 2-D start")
        _record_guard(length, 2, record)
        return _run_srw2(length, start, stream, record)
    raise ValueError(f"unknown walk kind {kind!r}")


@dataclass
class CoupledResult:
    """Audit record for one excited/simple pair driven by one stream."""

    length: int
    epsilon: float
    erw_x1: np.ndarray
    srw_x1: np.ndarray
    violations: int            # steps with excited x1 below simple x1, must be 0
    min_srw_x1: int
    erw_path: WalkPath


def run_coupled_pair(length: int, epsilon: float, stream: RngStream,
                     config: Optional[ExternalConfiguration] = None) -> CoupledResult:
    """Run the coupled pair, reconstructing the simple half from the same draws.

    epsilon = 0 is legal here (and only here): the excited walk then equals
    the simple walk step for step.
    """
    if not (0.0 <= epsilon <= _SIXTH):
        raise ValueError(f"audit epsilon must satisfy 0 <= epsilon <= 1/6, got {epsilon}")
    replay = stream.clone()
    path = _run_erw(length, (0, 0, 0), epsilon, config, stream, "trace_only")
    u = replay.uniforms(length)
    d1 = np.where(u < _SIXTH, -1, np.where(u < _THIRD, 1, 0)).astype(np.int64)
    srw_x1 = np.concatenate([np.zeros(1, dtype=np.int64), np.cumsum(d1)])
    violations = int(np.count_nonzero(path.first_coord_trace < srw_x1))
    return CoupledResult(
        length=length,
        epsilon=epsilon,
        erw_x1=path.first_coord_trace,
        srw_x1=srw_x1,
        violations=violations,
        min_srw_x1=int(srw_x1.min()),
        erw_path=path,
    )


def step_is_unit(a, b) -> bool:
    """Consecutive positions differ by exactly one axis step."""
    return sum(abs(x - y) for x, y in zip(a, b)) == 1
