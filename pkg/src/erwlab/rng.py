"""Counter-based splittable random number generation.

Every simulation draw in this package comes from a pure function

    word(seed, stream_id, counter) -> uniform 64-bit integer

so a replication is reproducible from (seed, stream_id) alone, regardless of
scheduling, chunking, or worker count.  The map is a SplitMix64-style hash in
the SplittableRandom lineage: a per-stream state origin and odd gamma are
derived from (seed, stream_id), and the output word for counter c is the
murmur-style finalizer applied to state_origin + (c + 1) * gamma, all mod 2^64.
Distinct streams use distinct gammas, so they are different sequences rather
than shifted copies of one sequence.

The production path operates on numpy uint64 arrays (scalar numpy integers
warn on wraparound, arrays wrap silently).  ``word_scalar`` is an independent
pure-Python big-int oracle used to pin behavior; tests/data/rng_vectors.json
holds frozen (seed, stream, counter, word) samples generated from it.

Stream ids are partitioned as stream_id = (substream << 40) | replication
index, giving room for 2^40 replications and 2^24 auxiliary substreams per
replication.  Experiments document which substreams they use.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1

# Finalizer multipliers (murmur3 avalanche variant) and additive constants
# (golden ratio, frac(sqrt 2), frac(sqrt 3) in 64-bit fixed point).
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_GOLDEN = 0x9E3779B97F4A7C15
_KEY_SALT = 0x6A09E667F3BCC909
_GAMMA_SALT = 0xBB67AE8584CAA73B

SUBSTREAM_SHIFT = 40
MAX_REPLICATIONS = 1 << SUBSTREAM_SHIFT

_U64 = np.uint64
_S30 = _U64(30)
_S27 = _U64(27)
_S31 = _U64(31)
_S11 = _U64(11)
_VMIX_A = _U64(_MIX_A)
_VMIX_B = _U64(_MIX_B)
_TO_UNIT = 2.0 ** -53


def _mix64_int(z: int) -> int:
    """Scalar finalizer on Python ints, the reference implementation."""
    z &= _MASK64
    z ^= z >> 30
    z = (z * _MIX_A) & _MASK64
    z ^= z >> 27
    z = (z * _MIX_B) & _MASK64
    z ^= z >> 31
    return z


def _mix64(z: np.ndarray) -> np.ndarray:
    """Vectorized finalizer on uint64 arrays."""
    z = z ^ (z >> _S30)
    z = z * _VMIX_A
    z = z ^ (z >> _S27)
    z = z * _VMIX_B
    return z ^ (z >> _S31)


def _stream_origin_int(seed: int, stream_id: int) -> tuple[int, int]:
    base = _mix64_int((seed & _MASK64) ^ _KEY_SALT)
    s0 = _mix64_int(base ^ ((stream_id * _GOLDEN) & _MASK64))
    gamma = _mix64_int(s0 ^ _GAMMA_SALT) | 1
    return s0, gamma


def word_scalar(seed: int, stream_id: int, counter: int) -> int:
    """Pure-Python oracle for the (seed, stream, counter) -> word map."""
    s0, gamma = _stream_origin_int(seed, stream_id)
    return _mix64_int((s0 + ((counter + 1) * gamma)) & _MASK64)


def stream_state(seed: int, stream_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (state origin, gamma) for an array of stream ids.

    Batch drivers call this once and then evaluate words_at per draw, which
    costs one finalizer instead of three.
    """
    sid = np.asarray(stream_ids, dtype=np.uint64)
    base = _mix64(np.array([(seed & _MASK64) ^ _KEY_SALT], dtype=np.uint64))[0]
    s0 = _mix64(base ^ (sid * _U64(_GOLDEN)))
    gamma = _mix64(s0 ^ _U64(_GAMMA_SALT)) | _U64(1)
    return s0, gamma


def words_at(s0: np.ndarray, gamma: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Output words at the given counters (elementwise over walkers)."""
    c = np.asarray(counters, dtype=np.uint64) + _U64(1)
    return _mix64(s0 + c * gamma)


def uniforms_at(s0: np.ndarray, gamma: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Uniform [0,1) doubles at the given counters."""
    return (words_at(s0, gamma, counters) >> _S11).astype(np.float64) * _TO_UNIT


def derive_stream(rep: int, substream: int = 0) -> int:
    """Stream id for replication ``rep``, auxiliary draw family ``substream``."""
    if not 0 <= rep < MAX_REPLICATIONS:
        raise ValueError(f"replication index out of range: {rep}")
    if substream < 0 or substream >= (1 << 24):
        raise ValueError(f"substream out of range: {substream}")
    return (substream << SUBSTREAM_SHIFT) | rep


@dataclass
class RngStream:
    """Sequential view of one stream: draws advance an explicit counter.

    The counter is the draw index, so replaying a stream, splitting a draw
    into chunks, or jumping ahead all land on the same words.
    """

    seed: int
    stream_id: int
    counter: int = 0
    _s0: np.ndarray = field(init=False, repr=False)
    _gamma: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s0, gamma = _stream_origin_int(self.seed, self.stream_id)
        self._s0 = np.array([s0], dtype=np.uint64)
        self._gamma = np.array([gamma], dtype=np.uint64)

    @classmethod
    def for_rep(cls, seed: int, rep: int, substream: int = 0) -> "RngStream":
        return cls(seed, derive_stream(rep, substream))

    def words(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("draw count must be nonnegative")
        counters = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        return words_at(self._s0, self._gamma, counters)

    def uniforms(self, n: int) -> np.ndarray:
        return (self.words(n) >> _S11).astype(np.float64) * _TO_UNIT

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def jump(self, n: int) -> None:
        """Skip n draws without generating them."""
        if n < 0:
            raise ValueError("jump must be nonnegative")
        self.counter += n

    def clone(self) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.counter)
