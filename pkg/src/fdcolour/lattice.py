"""Integer-lattice geometry.

Sites are plain tuples of ints.  The isometries of Z^d that fix the origin
are exactly the signed coordinate permutations (the hyperoctahedral group);
a general lattice isometry adds an integer shift.  This module also builds
the orbit labelling used by the tiling stage, the canonical direction sets
used by the line-product colouring, and canonical anchors for lattice lines.

Everything here is pure and deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

Site = tuple  # a d-tuple of ints

_I64_MIN = -(2**63)
_I64_MAX = 2**63 - 1


def check_coords(v: Site) -> Site:
    """Reject coordinates outside the signed 64-bit range."""
    for c in v:
        if not (_I64_MIN <= c <= _I64_MAX):
            raise OverflowError(f"coordinate {c} exceeds 64-bit signed range")
    return v


def norm1(v: Site) -> int:
    return sum(abs(c) for c in v)


def add(u: Site, v: Site) -> Site:
    return check_coords(tuple(a + b for a, b in zip(u, v)))


def sub(u: Site, v: Site) -> Site:
    return check_coords(tuple(a - b for a, b in zip(u, v)))


def neg(v: Site) -> Site:
    return tuple(-c for c in v)


def scale(k: int, v: Site) -> Site:
    return check_coords(tuple(k * c for c in v))


def ball(d: int, r: int) -> list[Site]:
    """All sites of Z^d with 1-norm at most r, in lexicographic order."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if r < 0:
        raise ValueError("radius must be >= 0")

    def rec(dim: int, budget: int) -> Iterator[Site]:
        if dim == 0:
            yield ()
            return
        for c in range(-budget, budget + 1):
            for rest in rec(dim - 1, budget - abs(c)):
                yield (c,) + rest

    return list(rec(d, r))


@dataclass(frozen=True)
class Isometry:
    """A lattice isometry v -> w with w[i] = signs[i] * v[perm[i]] + shift[i].

    perm is 0-based.  With shift == 0 this is an element of the
    origin-fixing group; arbitrary shifts give the full isometry group.
    """

    perm: tuple
    signs: tuple
    shift: tuple

    def __post_init__(self):
        d = len(self.perm)
        if sorted(self.perm) != list(range(d)):
            raise ValueError("perm must be a permutation of 0..d-1")
        if len(self.signs) != d or any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be a d-vector of +/-1")
        if len(self.shift) != d:
            raise ValueError("shift dimension mismatch")

    @property
    def d(self) -> int:
        return len(self.perm)

    def apply(self, v: Site) -> Site:
        check_coords(v)
        return check_coords(
            tuple(s * v[p] + t for s, p, t in zip(self.signs, self.perm, self.shift))
        )

    def compose(self, other: "Isometry") -> "Isometry":
        """Return self o other (apply ``other`` first)."""
        perm = tuple(other.perm[p] for p in self.perm)
        signs = tuple(s * other.signs[p] for s, p in zip(self.signs, self.perm))
        shift = tuple(
            s * other.shift[p] + t
            for s, p, t in zip(self.signs, self.perm, self.shift)
        )
        return Isometry(perm, signs, shift)

    def inverse(self) -> "Isometry":
        inv_perm = [0] * self.d
        for i, p in enumerate(self.perm):
            inv_perm[p] = i
        perm = tuple(inv_perm)
        signs = tuple(self.signs[perm[j]] for j in range(self.d))
        shift = tuple(-signs[j] * self.shift[perm[j]] for j in range(self.d))
        return Isometry(perm, signs, shift)

    def is_origin_fixing(self) -> bool:
        return all(t == 0 for t in self.shift)

    def linear_part(self) -> "Isometry":
        return Isometry(self.perm, self.signs, (0,) * self.d)

    @staticmethod
    def identity(d: int) -> "Isometry":
        return Isometry(tuple(range(d)), (1,) * d, (0,) * d)

    @staticmethod
    def translation(t: Site) -> "Isometry":
        d = len(t)
        return Isometry(tuple(range(d)), (1,) * d, tuple(t))


@lru_cache(maxsize=None)
def group_elements(d: int) -> tuple:
    """The 2^d d! origin-fixing isometries, in a fixed canonical order.

    Order: permutations lexicographically ascending, then sign vectors with
    +1 sorting before -1 coordinate-wise.  The identity comes first.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    out = []
    zero = (0,) * d
    for perm in itertools.permutations(range(d)):
        for signs in itertools.product((1, -1), repeat=d):
            out.append(Isometry(perm, signs, zero))
    return tuple(out)


def rho(d: int) -> Site:
    """The vector (1, 2, ..., d), whose group images are pairwise distinct."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return tuple(range(1, d + 1))


@lru_cache(maxsize=None)
def arrow_offsets(d: int) -> tuple:
    """Images of rho(d) under the origin-fixing group, lexicographically sorted.

    These are the arrow directions used by pair-indexed random fields; the
    sort order is the canonical storage order for the arrow axis.
    """
    images = {g.apply(rho(d)) for g in group_elements(d)}
    if len(images) != len(group_elements(d)):
        raise AssertionError("group images of the reference vector collide")
    return tuple(sorted(images))


@dataclass(frozen=True)
class OrbitLabelling:
    """Non-negative integer labels, constant on each origin-fixing-group orbit.

    Orbits are numbered in non-decreasing 1-norm; among orbits of equal norm
    the one whose lexicographically smallest member is smaller comes first.
    label(0) = 0 and labels grow strictly with the orbit norm ordering.
    """

    d: int
    max_norm: int
    _labels: dict
    orbit_sizes: tuple
    orbit_norms: tuple

    def label(self, v: Site) -> int:
        try:
            return self._labels[tuple(v)]
        except KeyError:
            raise ValueError(f"site {v} outside labelled ball of radius {self.max_norm}")

    def max_label_at_norm(self, n: int) -> int:
        if n > self.max_norm:
            raise ValueError("norm exceeds labelled radius")
        return max(lab for lab, nn in enumerate(self.orbit_norms) if nn == n)

    @property
    def n_orbits(self) -> int:
        return len(self.orbit_sizes)


def orbit_labelling(d: int, max_norm: int) -> OrbitLabelling:
    if max_norm < 0:
        raise ValueError("max_norm must be >= 0")
    group = group_elements(d)
    orbits: dict = {}
    for v in ball(d, max_norm):
        rep = min(g.apply(v) for g in group)
        orbits.setdefault(rep, []).append(v)
    keys = sorted(orbits, key=lambda rep: (norm1(rep), rep))
    labels: dict = {}
    sizes = []
    norms = []
    for lab, rep in enumerate(keys):
        members = orbits[rep]
        for v in members:
            labels[v] = lab
        sizes.append(len(members))
        norms.append(norm1(rep))
    return OrbitLabelling(d, max_norm, labels, tuple(sizes), tuple(norms))


@lru_cache(maxsize=None)
def direction_set(d: int, m: int) -> tuple:
    """One representative of {h, -h} for every 0 < |h| <= m.

    The representative is the one whose first nonzero coordinate is positive.
    Returned sorted by (1-norm, lexicographic); this order is the canonical
    component order for tuple colours.
    """
    if m < 1:
        raise ValueError("range must be >= 1")
    dirs = [h for h in ball(d, m) if any(c != 0 for c in h) and _first_nonzero(h) > 0]
    return tuple(sorted(dirs, key=lambda h: (norm1(h), h)))


def _first_nonzero(v: Site) -> int:
    for c in v:
        if c != 0:
            return c
    return 0


def line_decompose(v: Site, h: Site) -> tuple:
    """Canonical (anchor, index) of v on the lattice line {a + i*h}.

    The anchor is the line point minimising (1-norm, lexicographic); the
    index satisfies v == anchor + index * h.  Walking one step along h
    increments the index and keeps the anchor.
    """
    if all(c == 0 for c in h):
        raise ValueError("line direction must be nonzero")
    check_coords(v)

    def f(t: int) -> int:
        return norm1(tuple(a + t * b for a, b in zip(v, h)))

    t = 0
    if f(1) < f(0):
        step = 1
    elif f(-1) < f(0):
        step = -1
    else:
        step = 0
    if step:
        while f(t + step) < f(t):
            t += step
    # collect the (contiguous, by convexity) tie interval of minimisers
    lo = hi = t
    while f(lo - 1) == f(t):
        lo -= 1
    while f(hi + 1) == f(t):
        hi += 1
    cand_lo = tuple(a + lo * b for a, b in zip(v, h))
    cand_hi = tuple(a + hi * b for a, b in zip(v, h))
    anchor = min(cand_lo, cand_hi)
    t_anchor = lo if anchor == cand_lo else hi
    return anchor, -t_anchor
