"""Deterministic seeded stand-ins for i.i.d. Unif[0,1) fields.

A SeededField evaluates a keyed cryptographic hash (BLAKE2b) of the site
coordinates and maps the first 64 bits to a float with 53 bits of
precision.  Substreams are derived by hashing labels into the key, so
distinct label paths behave as independent fields.  Sequential streams
(used by the one-dimensional colouring engine) expand a hash-derived
64-bit state through splitmix64, which is cheap and vectorises.

``distribute`` turns a site-indexed uniform field into the pair-indexed
field used by the symmetrization stage: per site, kappa + 1 sub-uniforms
are derived from the site value alone, and the Z-values are reassigned to
the arrows by ranking the neighbouring Y-values.  Being a function of the
values only, the construction commutes with every lattice isometry
exactly, which the test-suite checks cell by cell.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .grid import Box, PairConfig, SiteConfig
from .lattice import Site, arrow_offsets

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_TO_UNIT = float(2.0**-53)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def splitmix_uniforms(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Counter-based uniforms in [0,1) with 53-bit precision."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        bits = _mix64(_U64(seed) + idx * _GOLDEN)
    return (bits >> _U64(11)).astype(np.float64) * _TO_UNIT


def _label_bytes(label) -> bytes:
    if isinstance(label, bytes):
        return b"b" + label
    if isinstance(label, str):
        return b"s" + label.encode()
    if isinstance(label, (int, np.integer)):
        return b"i" + int(label).to_bytes(8, "little", signed=True)
    if isinstance(label, tuple):
        return b"t" + b"".join(_label_bytes(x) for x in label)
    raise TypeError(f"unsupported substream label {label!r}")


class SeededField:
    """Pure function (key, site) -> Unif[0,1); derive substreams by label."""

    __slots__ = ("key",)

    def __init__(self, key: bytes):
        if len(key) != 32:
            raise ValueError("field key must be 32 bytes")
        self.key = key

    @classmethod
    def from_seed(cls, seed: int) -> "SeededField":
        key = hashlib.blake2b(
            int(seed).to_bytes(8, "little", signed=True), digest_size=32
        ).digest()
        return cls(key)

    def substream(self, *labels) -> "SeededField":
        key = self.key
        for label in labels:
            key = hashlib.blake2b(_label_bytes(label), key=key, digest_size=32).digest()
        return SeededField(key)

    def eval(self, site: Site) -> float:
        msg = struct.pack(f"<{len(site)}q", *site)
        bits = int.from_bytes(
            hashlib.blake2b(msg, key=self.key, digest_size=8).digest(), "little"
        )
        return (bits >> 11) * _TO_UNIT

    def eval_box(self, box: Box, margin: int = 0) -> SiteConfig:
        d = box.d
        pack = struct.Struct(f"<{d}q").pack
        blake = hashlib.blake2b
        key = self.key
        out = np.empty(box.shape, dtype=np.float64)
        flat = out.reshape(-1)
        for i, site in enumerate(box.sites()):
            bits = int.from_bytes(blake(pack(*site), key=key, digest_size=8).digest(), "little")
            flat[i] = (bits >> 11) * _TO_UNIT
        return SiteConfig(box, out, margin)

    def stream(self, *labels) -> "SequentialStream":
        key = self.substream(*labels).key if labels else self.key
        seed = int.from_bytes(
            hashlib.blake2b(b"stream", key=key, digest_size=8).digest(), "little"
        )
        return SequentialStream(seed)


class SequentialStream:
    """Deterministic sequence of uniforms, consumed in index order."""

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.counter = 0

    def take(self, count: int) -> np.ndarray:
        out = splitmix_uniforms(self.seed, count, start=self.counter)
        self.counter += count
        return out

    def next(self) -> float:
        return float(self.take(1)[0])


def split_value(value: float, count: int) -> np.ndarray:
    """Derive ``count`` sub-uniforms from one uniform value (value bits only)."""
    raw = struct.pack("<d", value)
    out = np.empty(count, dtype=np.float64)
    filled = 0
    block = 0
    while filled < count:
        n = min(8, count - filled)
        digest = hashlib.blake2b(
            raw + block.to_bytes(2, "little"), key=b"fdcolour-split", digest_size=8 * n
        ).digest()
        for j in range(n):
            bits = int.from_bytes(digest[8 * j : 8 * j + 8], "little")
            out[filled + j] = (bits >> 11) * _TO_UNIT
        filled += n
        block += 1
    return out


def line_stream_seed(tag: bytes, dir_index: int, values: np.ndarray) -> int:
    """Seed for the sequential stream of one lattice-line sample.

    Mixing only the direction index and the value sequence (in line order)
    keeps every consumer an exact function of its input window, hence
    exactly translation-equivariant.
    """
    h = hashlib.blake2b(key=b"fdcolour-line", digest_size=8)
    h.update(tag)
    h.update(int(dir_index).to_bytes(4, "little"))
    h.update(np.ascontiguousarray(values, dtype=np.float64).tobytes())
    return int.from_bytes(h.digest(), "little")


def _split_box(values: np.ndarray, count: int) -> np.ndarray:
    """split_value applied per cell; returns shape values.shape + (count,)."""
    flat = values.reshape(-1)
    out = np.empty((flat.size, count), dtype=np.float64)
    for i in range(flat.size):
        out[i] = split_value(float(flat[i]), count)
    return out.reshape(values.shape + (count,))


def distribute_config(u: SiteConfig) -> PairConfig:
    """Pair-indexed uniforms from site-indexed ones.

    Per site x the sub-uniforms (Y, Z_1..Z_kappa) are derived from u(x);
    the arrow value towards y is Z_T(x) where Y(y) is the T-th largest
    Y-value over the arrow neighbours of x.  Exact ties (probability
    ~2^-53 per pair) zero out every arrow from x.
    """
    d = u.d
    arrows = arrow_offsets(d)
    kappa = len(arrows)
    pad = max(max(abs(c) for c in a) for a in arrows)  # largest coordinate = d
    inner = u.box.shrink(pad)

    sub = _split_box(u.values, kappa + 1)
    y_full = sub[..., 0]
    z = sub[..., 1:]

    def shifted(delta):
        sl = tuple(
            slice(il - ol + dc, ih - ol + dc + 1)
            for il, ih, ol, dc in zip(inner.lo, inner.hi, u.box.lo, delta)
        )
        return y_full[sl]

    y_nbr = np.stack([shifted(a) for a in arrows], axis=-1)
    z_inner = z[tuple(slice(il - ol, ih - ol + 1) for il, ih, ol in zip(inner.lo, inner.hi, u.box.lo))]

    # rank 0 = largest; stable argsort keeps exact determinism
    order = np.argsort(-y_nbr, axis=-1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.broadcast_to(np.arange(kappa), ranks.shape).copy(), axis=-1)
    w = np.take_along_axis(z_inner, ranks, axis=-1)

    srt = np.take_along_axis(y_nbr, order, axis=-1)
    tied = (np.diff(srt, axis=-1) == 0).any(axis=-1)
    if tied.any():
        w[tied] = 0.0
    return PairConfig(inner, w, u.margin)


class PairField:
    """Lazy pair-indexed view of a seeded field (the distributed process)."""

    def __init__(self, base: SeededField, d: int):
        self.base = base
        self.d = d

    def window(self, box: Box, margin: int = 0) -> PairConfig:
        pad = self.d
        u = self.base.eval_box(box.grow(pad), margin)
        return distribute_config(u)

    def value(self, x: Site, y: Site) -> float:
        delta = tuple(b - a for a, b in zip(x, y))
        if delta not in arrow_offsets(self.d):
            raise ValueError(f"(x, y) with y - x = {delta} is not an arrow pair")
        box = Box(tuple(x), tuple(x))
        return float(self.window(box).value(x, y))


def distribute(source, d: int = None):
    """Field in, field out; config in, config out."""
    if isinstance(source, SeededField):
        if d is None:
            raise ValueError("dimension required when distributing a field")
        return PairField(source, d)
    if isinstance(source, SiteConfig):
        return distribute_config(source)
    raise TypeError("distribute expects a SeededField or SiteConfig")


def gamma_field(w: PairConfig, gamma) -> SiteConfig:
    """The site field x -> W(x, x + gamma rho) of one symmetrization branch."""
    if not gamma.is_origin_fixing():
        raise ValueError("branch isometry must fix the origin")
    from .lattice import rho

    return w.arrow_component(gamma.apply(rho(w.d)))


class PairDistributor(BaseEstimator, TransformerMixin):
    """Transformer form of :func:`distribute_config` (uniforms -> arrow pairs)."""

    def __init__(self, d: int = 1):
        self.d = d

    def fit(self, X=None, y=None):
        return self

    def transform(self, X: SiteConfig) -> PairConfig:
        if not isinstance(X, SiteConfig):
            raise TypeError("expected a SiteConfig of uniforms")
        if X.d != self.d:
            raise ValueError(f"config dimension {X.d} != declared {self.d}")
        return distribute_config(X)

    @property
    def pad(self) -> int:
        return self.d
