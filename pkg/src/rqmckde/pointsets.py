"""Point sets over the unit cube: Monte Carlo, stratified, and randomized Sobol' nets.

Every generator is a pure function of its arguments. Randomized point sets
take a 64-bit ``seed``; the same seed always yields bit-identical output.

Sobol' nets are stored as integer generating matrices with ``bit_depth``
binary digits (31 by default). Column ``k`` of dimension ``j`` is an
integer whose most significant bit is the first base-2 digit, so point ``i``
of the net is the XOR of the columns selected by the binary digits of ``i``.

Two randomizations are provided:

* ``randomize_lms``: a random nonsingular lower-triangular binary matrix
  multiplies the generating matrices from the left, followed by a random
  digital shift.
* ``randomize_nus``: nested uniform (Owen) scrambling. Each node of the
  binary digit tree flips the next digit with probability 1/2; the flips
  are drawn from a keyed counter-based hash of the node, so no permutation
  tree is ever stored.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numba
import numpy as np

from .errors import InvalidArgument, UnsupportedDimension

__all__ = [
    "SamplerKind",
    "SamplerSpec",
    "PointSet",
    "DigitalNet",
    "derive_seed",
    "max_sobol_dimension",
    "sample_mc",
    "sample_stratified",
    "stratified_q",
    "sobol_net",
    "randomize_lms",
    "randomize_nus",
    "generate",
    "write_csv",
]

DEFAULT_BIT_DEPTH = 31
_NUS_TOTAL_BITS = 52
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


class SamplerKind(str, enum.Enum):
    MC = "mc"
    STRATIFIED = "strat"
    SOBOL_LMS = "lms"
    SOBOL_NUS = "nus"

    @classmethod
    def parse(cls, name: "str | SamplerKind") -> "SamplerKind":
        if isinstance(name, SamplerKind):
            return name
        key = str(name).strip().lower()
        aliases = {
            "mc": cls.MC,
            "strat": cls.STRATIFIED,
            "stratified": cls.STRATIFIED,
            "lms": cls.SOBOL_LMS,
            "sobollms": cls.SOBOL_LMS,
            "sobol+lms": cls.SOBOL_LMS,
            "nus": cls.SOBOL_NUS,
            "sobolnus": cls.SOBOL_NUS,
            "sobol+nus": cls.SOBOL_NUS,
        }
        try:
            return aliases[key]
        except KeyError:
            raise InvalidArgument(f"unknown sampler {name!r}") from None

    @property
    def is_sobol(self) -> bool:
        return self in (SamplerKind.SOBOL_LMS, SamplerKind.SOBOL_NUS)


@dataclass(frozen=True)
class SamplerSpec:
    """How to produce a point set: sampler kind, dimension, seed and digit count."""

    kind: SamplerKind
    s: int
    seed: int = 0
    bit_depth: int = DEFAULT_BIT_DEPTH

    def __post_init__(self):
        object.__setattr__(self, "kind", SamplerKind.parse(self.kind))
        if self.s < 1:
            raise InvalidArgument(f"dimension must be >= 1, got {self.s}")
        if not 1 <= self.bit_depth <= DEFAULT_BIT_DEPTH:
            raise InvalidArgument(f"bit_depth must lie in [1, 31], got {self.bit_depth}")
        if self.kind.is_sobol and self.s > max_sobol_dimension():
            raise UnsupportedDimension(
                f"dimension {self.s} exceeds the direction-number table ({max_sobol_dimension()})"
            )

    def with_seed(self, seed: int) -> "SamplerSpec":
        return SamplerSpec(self.kind, self.s, seed, self.bit_depth)


@dataclass(frozen=True)
class PointSet:
    """An immutable ``n x s`` matrix of points in ``[0, 1)``.

    For stratified sets ``q`` records the number of strata per axis, so
    ``n == q**s``.
    """

    points: np.ndarray
    spec: SamplerSpec
    q: Optional[int] = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def s(self) -> int:
        return self.points.shape[1]


def derive_seed(seed: int, *stream: int) -> int:
    """Child seed for stream index ``stream`` of ``seed``.

    Children are independent of the order in which they are requested.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in stream))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & (2**64 - 1))))


def sample_mc(s: int, n: int, seed: int) -> PointSet:
    """``n`` independent uniform points in ``[0,1)^s``."""
    if n < 1 or s < 1:
        raise InvalidArgument(f"need n >= 1 and s >= 1, got n={n}, s={s}")
    pts = _rng(seed).random((n, s))
    return PointSet(pts, SamplerSpec(SamplerKind.MC, s, seed))


def stratified_q(s: int, target_n: int) -> int:
    """Strata per axis used for a requested sample size: the integer nearest ``target_n**(1/s)``."""
    if s < 1:
        raise InvalidArgument(f"dimension must be >= 1, got {s}")
    if target_n < 2**s:
        raise InvalidArgument(f"stratified sampling needs target_n >= 2^s = {2**s}, got {target_n}")
    q = int(round(target_n ** (1.0 / s)))
    # guard against floating error in the root
    best = min((c for c in (q - 1, q, q + 1) if c >= 2), key=lambda c: abs(c - target_n ** (1.0 / s)))
    return best


def sample_stratified(s: int, target_n: int, seed: int) -> PointSet:
    """One uniform point in each of the ``q**s`` congruent subcubes.

    Cells are enumerated in lexicographic order of their integer index
    (last coordinate varying fastest), and row ``i`` of the result lies in
    cell ``i``.
    """
    q = stratified_q(s, target_n)
    n = q**s
    idx = np.indices((q,) * s, dtype=np.float64).reshape(s, n).T
    pts = (idx + _rng(seed).random((n, s))) / q
    # (idx + u)/q can round up to the right cell boundary when u is near 1
    np.minimum(pts, np.nextafter((idx + 1.0) / q, 0.0), out=pts)
    return PointSet(pts, SamplerSpec(SamplerKind.STRATIFIED, s, seed), q=q)


# --------------------------------------------------------------------------
# Sobol' generating matrices
# --------------------------------------------------------------------------


@functools.lru_cache(maxsize=1)
def _direction_table() -> tuple:
    text = resources.files("rqmckde").joinpath("data/joe_kuo_1024.txt").read_text()
    rows = []
    for line in text.splitlines()[1:]:
        parts = line.split()
        if not parts:
            continue
        deg, a = int(parts[1]), int(parts[2])
        rows.append((deg, a, tuple(int(v) for v in parts[3:])))
    return tuple(rows)


def max_sobol_dimension() -> int:
    return len(_direction_table()) + 1


@functools.lru_cache(maxsize=64)
def _generating_columns(s: int, bit_depth: int) -> np.ndarray:
    """Integer generating-matrix columns, shape ``(s, bit_depth)``."""
    if s > max_sobol_dimension():
        raise UnsupportedDimension(
            f"dimension {s} exceeds the direction-number table ({max_sobol_dimension()})"
        )
    cols = np.zeros((s, bit_depth), dtype=np.uint64)
    # first coordinate: identity matrix, i.e. the van der Corput sequence
    for k in range(bit_depth):
        cols[0, k] = 1 << (bit_depth - 1 - k)
    table = _direction_table()
    for j in range(1, s):
        deg, a, m_init = table[j - 1]
        m = list(m_init[:bit_depth])
        for k in range(deg, bit_depth):
            new = m[k - deg] ^ (m[k - deg] << deg)
            for i in range(1, deg):
                if (a >> (deg - 1 - i)) & 1:
                    new ^= m[k - i] << i
            m.append(new)
        for k in range(bit_depth):
            cols[j, k] = m[k] << (bit_depth - 1 - k)
    cols.setflags(write=False)
    return cols


@numba.njit(cache=True)
def _net_ints(cols, m):
    s = cols.shape[0]
    n = 1 << m
    out = np.zeros((n, s), dtype=np.uint64)
    for i in range(n):
        for j in range(s):
            v = np.uint64(0)
            for k in range(m):
                if (i >> k) & 1:
                    v ^= cols[j, k]
            out[i, j] = v
    return out


@dataclass(frozen=True)
class DigitalNet:
    """The first ``2**m`` points of a Sobol' sequence, kept as integer digits."""

    columns: np.ndarray
    m: int
    bit_depth: int = DEFAULT_BIT_DEPTH

    @property
    def s(self) -> int:
        return self.columns.shape[0]

    @property
    def n(self) -> int:
        return 1 << self.m

    @functools.cached_property
    def ints(self) -> np.ndarray:
        out = _net_ints(self.columns, self.m)
        out.setflags(write=False)
        return out

    @property
    def points(self) -> np.ndarray:
        return self.ints.astype(np.float64) / float(1 << self.bit_depth)


def sobol_net(s: int, m: int, bit_depth: int = DEFAULT_BIT_DEPTH) -> DigitalNet:
    """Unrandomized Sobol' net of ``2**m`` points in dimension ``s``.

    Points are in natural (not Gray-code) order, so the first coordinate is
    the base-2 radical inverse of the point index and point 0 is the origin.
    """
    if s < 1:
        raise InvalidArgument(f"dimension must be >= 1, got {s}")
    if not 0 <= m <= bit_depth:
        raise InvalidArgument(f"need 0 <= m <= bit_depth={bit_depth}, got m={m}")
    return DigitalNet(_generating_columns(s, bit_depth), m, bit_depth)


@numba.njit(cache=True)
def _parity(w):
    w ^= w >> np.uint64(32)
    w ^= w >> np.uint64(16)
    w ^= w >> np.uint64(8)
    w ^= w >> np.uint64(4)
    w ^= w >> np.uint64(2)
    w ^= w >> np.uint64(1)
    return w & np.uint64(1)


@numba.njit(cache=True)
def _left_multiply(rows, cols):
    # rows[j, i]: mask of the input digits feeding output digit i of dimension j
    s, bits = rows.shape
    out = np.zeros_like(cols)
    for j in range(s):
        for k in range(cols.shape[1]):
            c = cols[j, k]
            v = np.uint64(0)
            for i in range(bits):
                v |= _parity(rows[j, i] & c) << np.uint64(bits - 1 - i)
            out[j, k] = v
    return out


def randomize_lms(net: DigitalNet, seed: int) -> PointSet:
    """Left matrix scramble plus random digital shift of a Sobol' net."""
    bits = net.bit_depth
    rng = _rng(seed)
    s = net.s
    # row i has its diagonal digit set and random digits strictly above it in significance
    rand = rng.integers(0, 1 << bits, size=(s, bits), dtype=np.uint64)
    rows = np.empty((s, bits), dtype=np.uint64)
    for i in range(bits):
        pos = bits - 1 - i
        higher = ((1 << bits) - 1) ^ ((1 << (pos + 1)) - 1)
        rows[:, i] = (rand[:, i] & np.uint64(higher)) | np.uint64(1 << pos)
    shift = rng.integers(0, 1 << bits, size=s, dtype=np.uint64)
    cols = _left_multiply(rows, np.ascontiguousarray(net.columns[:, : net.m]))
    ints = _net_ints(cols, net.m) ^ shift[None, :]
    pts = ints.astype(np.float64) / float(1 << bits)
    return PointSet(pts, SamplerSpec(SamplerKind.SOBOL_LMS, s, seed, bits))


@numba.njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def _nus_kernel(ints, keys, tail_keys, bits, tail_bits):
    n, s = ints.shape
    out = np.empty((n, s), dtype=np.uint64)
    golden = np.uint64(0x9E3779B97F4A7C15)
    one = np.uint64(1)
    for i in range(n):
        for j in range(s):
            v = ints[i, j]
            y = np.uint64(0)
            for d in range(bits):
                shift = np.uint64(bits - 1 - d)
                node = (one << np.uint64(d)) | (v >> (shift + one))
                flip = _mix64(keys[j] ^ (node * golden)) >> np.uint64(63)
                y |= (((v >> shift) & one) ^ flip) << shift
            # digits past the tree depth are fresh uniform bits keyed by the full path
            leaf = (one << np.uint64(bits)) | v
            tail = _mix64(tail_keys[j] ^ (leaf * golden)) >> np.uint64(64 - tail_bits)
            out[i, j] = (y << np.uint64(tail_bits)) | tail
    return out


def randomize_nus(net: DigitalNet, seed: int) -> PointSet:
    """Nested uniform scramble of a Sobol' net."""
    bits = net.bit_depth
    tail_bits = _NUS_TOTAL_BITS - bits
    rng = _rng(seed)
    keys = rng.integers(0, 2**64, size=net.s, dtype=np.uint64)
    tail_keys = rng.integers(0, 2**64, size=net.s, dtype=np.uint64)
    out = _nus_kernel(net.ints, keys, tail_keys, bits, tail_bits)
    pts = out.astype(np.float64) / float(1 << _NUS_TOTAL_BITS)
    return PointSet(pts, SamplerSpec(SamplerKind.SOBOL_NUS, net.s, seed, bits))


def _log2_exact(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise InvalidArgument(f"Sobol' point sets need n to be a power of 2, got {n}")
    return n.bit_length() - 1


def generate(spec: SamplerSpec, n: int) -> PointSet:
    """Point set of (about) ``n`` points for ``spec``.

    Stratified sets contain ``q**s`` points with ``q = round(n**(1/s))``;
    Sobol' kinds require ``n`` to be a power of 2.
    """
    kind = spec.kind
    if kind is SamplerKind.MC:
        return sample_mc(spec.s, n, spec.seed)
    if kind is SamplerKind.STRATIFIED:
        return sample_stratified(spec.s, n, spec.seed)
    net = sobol_net(spec.s, _log2_exact(n), spec.bit_depth)
    if kind is SamplerKind.SOBOL_LMS:
        return randomize_lms(net, spec.seed)
    return randomize_nus(net, spec.seed)


def write_csv(pointset: PointSet, path) -> None:
    """Dump a point set, one row per point, at full double precision."""
    header = ",".join(f"u{j + 1}" for j in range(pointset.s))
    np.savetxt(path, pointset.points, delimiter=",", fmt="%.17g", header=header, comments="")
