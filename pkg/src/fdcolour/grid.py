"""Finite windows of lattice processes.

A SiteConfig is a dense array of values over an axis-aligned box, together
with a ``margin``: the width of the outer band whose cells were computed
but are only support for the interior (window-truncation effects may reach
them).  A PairConfig stores one value per (site, arrow) for the arrow set
of pair-indexed fields; arrows are kept on a trailing axis in the canonical
order of :func:`fdcolour.lattice.arrow_offsets`.

``act`` realises the isometry action (theta x)(v) = x(theta^-1 v) on both
kinds, exactly, by axis permutation / reversal plus an arrow permutation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .lattice import Isometry, Site, arrow_offsets, check_coords


@dataclass(frozen=True)
class Box:
    """Axis-aligned box of lattice sites; bounds are inclusive."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        check_coords(self.lo)
        check_coords(self.hi)
        if len(self.lo) != len(self.hi):
            raise ValueError("box corner dimensions differ")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"empty box {self.lo}..{self.hi}")

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        n = 1
        for s in self.shape:
            n *= s
        return n

    def contains(self, v: Site) -> bool:
        return all(l <= c <= h for l, c, h in zip(self.lo, v, self.hi))

    def index(self, v: Site) -> tuple:
        if not self.contains(v):
            raise KeyError(f"site {v} outside box {self.lo}..{self.hi}")
        return tuple(c - l for c, l in zip(v, self.lo))

    def site(self, idx: tuple) -> Site:
        return tuple(l + i for l, i in zip(self.lo, idx))

    def sites(self) -> Iterator[Site]:
        for idx in np.ndindex(*self.shape):
            yield self.site(idx)

    def shrink(self, pad: int) -> "Box":
        if pad < 0:
            raise ValueError("pad must be >= 0")
        return Box(
            tuple(l + pad for l in self.lo), tuple(h - pad for h in self.hi)
        )

    def grow(self, pad: int) -> "Box":
        return Box(
            tuple(l - pad for l in self.lo), tuple(h + pad for h in self.hi)
        )

    def transform(self, iso: Isometry) -> "Box":
        a = iso.apply(self.lo)
        b = iso.apply(self.hi)
        return Box(tuple(map(min, a, b)), tuple(map(max, a, b)))

    def intersect(self, other: "Box") -> "Box":
        return Box(
            tuple(map(max, self.lo, other.lo)), tuple(map(min, self.hi, other.hi))
        )

    @staticmethod
    def centred(shape: tuple) -> "Box":
        lo = tuple(-(s // 2) for s in shape)
        return Box(lo, tuple(l + s - 1 for l, s in zip(lo, shape)))


@dataclass
class SiteConfig:
    """Dense values over a box.  Trailing array axes hold tuple components."""

    box: Box
    values: np.ndarray
    margin: int = 0

    def __post_init__(self):
        if self.values.shape[: self.box.d] != self.box.shape:
            raise ValueError(
                f"value shape {self.values.shape} does not start with box shape {self.box.shape}"
            )
        if self.margin < 0:
            raise ValueError("margin must be >= 0")

    @property
    def d(self) -> int:
        return self.box.d

    @property
    def interior_box(self) -> Box:
        return self.box.shrink(self.margin)

    def at(self, v: Site):
        return self.values[self.box.index(v)]

    def with_margin(self, margin: int) -> "SiteConfig":
        return replace(self, margin=margin)

    def restrict(self, box: Box) -> "SiteConfig":
        return SiteConfig(box, _restrict_values(self.values, self.box, box), self.margin)


@dataclass
class PairConfig:
    """One value per (site, arrow); arrow axis last, canonical offset order."""

    box: Box
    values: np.ndarray
    margin: int = 0

    def __post_init__(self):
        d = self.box.d
        if self.values.shape[:d] != self.box.shape:
            raise ValueError("value shape does not match box")
        if self.values.shape[d:] != (len(arrow_offsets(d)),):
            raise ValueError("trailing axis must enumerate the arrow offsets")

    @property
    def d(self) -> int:
        return self.box.d

    @property
    def arrows(self) -> tuple:
        return arrow_offsets(self.d)

    @property
    def interior_box(self) -> Box:
        return self.box.shrink(self.margin)

    def value(self, x: Site, y: Site):
        delta = tuple(b - a for a, b in zip(x, y))
        try:
            j = self.arrows.index(delta)
        except ValueError:
            raise ValueError(f"(x, y) with y - x = {delta} is not an arrow pair")
        return self.values[self.box.index(x) + (j,)]

    def arrow_component(self, delta: Site) -> SiteConfig:
        j = self.arrows.index(tuple(delta))
        return SiteConfig(self.box, self.values[..., j], self.margin)

    def restrict(self, box: Box) -> "PairConfig":
        return PairConfig(box, _restrict_values(self.values, self.box, box), self.margin)


def _restrict_values(values: np.ndarray, outer: Box, inner: Box) -> np.ndarray:
    if any(
        il < ol or ih > oh
        for il, ih, ol, oh in zip(inner.lo, inner.hi, outer.lo, outer.hi)
    ):
        raise ValueError(f"box {inner.lo}..{inner.hi} not contained in {outer.lo}..{outer.hi}")
    sl = tuple(
        slice(l - ol, h - ol + 1) for l, h, ol in zip(inner.lo, inner.hi, outer.lo)
    )
    return values[sl]


def _spatial_transform(values: np.ndarray, box: Box, iso: Isometry) -> tuple:
    """Reindex a dense array so entry at theta(v) equals the old entry at v."""
    d = box.d
    trailing = tuple(range(d, values.ndim))
    out = np.transpose(values, axes=iso.perm + trailing)
    flips = tuple(i for i in range(d) if iso.signs[i] < 0)
    if flips:
        out = np.flip(out, axis=flips)
    return np.ascontiguousarray(out), box.transform(iso)


def act(config, iso: Isometry):
    """(theta x)(v) = x(theta^-1 v), exactly, for configs or tuples of them."""
    if isinstance(config, tuple):
        return tuple(act(c, iso) for c in config)
    if isinstance(config, SiteConfig):
        vals, box = _spatial_transform(config.values, config.box, iso)
        return SiteConfig(box, vals, config.margin)
    if isinstance(config, PairConfig):
        vals, box = _spatial_transform(config.values, config.box, iso)
        arrows = arrow_offsets(config.d)
        gamma_inv = iso.linear_part().inverse()
        take = [arrows.index(gamma_inv.apply(a)) for a in arrows]
        vals = vals[..., take]
        return PairConfig(box, np.ascontiguousarray(vals), config.margin)
    raise TypeError(f"cannot act on {type(config).__name__}")


def configs_equal(a, b) -> tuple:
    """Exact equality on the common box; returns (equal, witness or None)."""
    if isinstance(a, tuple):
        for x, y in zip(a, b):
            eq, wit = configs_equal(x, y)
            if not eq:
                return eq, wit
        return True, None
    common = a.box.intersect(b.box)
    av = a.restrict(common).values
    bv = b.restrict(common).values
    if av.shape != bv.shape:
        return False, ("shape", av.shape, bv.shape)
    mism = av != bv
    while mism.ndim > common.d:
        mism = mism.any(axis=-1)
    if not mism.any():
        return True, None
    idx = tuple(int(i) for i in np.argwhere(mism)[0])
    v = common.site(idx)
    return False, (v, av[idx], bv[idx])
