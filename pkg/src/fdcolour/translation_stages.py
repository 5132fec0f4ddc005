"""Translation-equivariant pipeline stages.

``RangeColouring`` assigns every site the tuple of its colours on all
lattice lines through it with direction in the canonical direction set:
any two sites within 1-norm distance m share a line on which they are
adjacent, so the tuples form a proper range-m colouring.  Each line's
colour word is sampled from the exact window law of the one-dimensional
engine, seeded purely from the input values along the line; the stage is
therefore an exact function of its input window and commutes with
translations cell by cell.  (Resampling a different window redraws the
lines: the law is preserved but not cross-window consistency.)

``NetExtractor`` turns any properly coloured window into a maximal
independent set of the range-m graph by greedy selection in increasing
colour order, which reproduces the colour-cascade construction at
O(N log N) instead of one sweep per colour value.

``RangeColouringNet`` composes the two; above a size threshold it switches
to a lazy evaluation that materialises only three tuple components and
resolves the rare colour-order ties on demand.  Both strategies produce
bit-identical output (asserted by the test-suite).
"""

from __future__ import annotations

import logging

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .base import check_site_config
from .colour1d import draws_needed, sample_word
from .fields import line_stream_seed, splitmix_uniforms
from .grid import Box, SiteConfig
from .lattice import direction_set

logger = logging.getLogger(__name__)

DEFAULT_MARGIN_SCALE = 8
_LAZY_COMPONENTS = 3


class CorruptColouringError(ValueError):
    """Input to net extraction had equal colours within the blocking range."""


def iter_lines(box: Box, h):
    """Index arrays of every maximal line segment of direction h in the box.

    Segments are yielded with sites in ascending line order (towards +h);
    iteration order is fixed by the segment start sites.
    """
    d = box.d
    shape = box.shape
    grids = np.indices(shape)
    back_out = np.zeros(shape, dtype=bool)
    for a in range(d):
        if h[a] > 0:
            back_out |= grids[a] < h[a]
        elif h[a] < 0:
            back_out |= grids[a] >= shape[a] + h[a]
    for st in np.argwhere(back_out):
        length = None
        for a in range(d):
            if h[a] > 0:
                room = (shape[a] - 1 - st[a]) // h[a]
            elif h[a] < 0:
                room = st[a] // (-h[a])
            else:
                continue
            length = room if length is None else min(length, room)
        length = int(length) + 1
        steps = np.arange(length)
        yield tuple(st[a] + steps * h[a] for a in range(d))


def sample_line_words(values: np.ndarray, box: Box, h, dir_index: int, q: int, tag: bytes, out: np.ndarray):
    """Sample every line of direction h and scatter the words into ``out``."""
    for idxs in iter_lines(box, h):
        vals = values[idxs]
        seed = line_stream_seed(tag, dir_index, vals)
        draws = splitmix_uniforms(seed, draws_needed(len(vals)))
        out[idxs] = sample_word(q, len(vals), draws)


class RangeColouring(BaseEstimator, TransformerMixin):
    """Proper range-m colouring by per-line engine words (tuple colours).

    Output values have shape (*window, len(direction_set(d, m))) with one
    int8 component per canonical direction.  With m=1 this is the classic
    product-of-axes colouring: proper, 1-dependent, q^d colours, but not
    invariant under coordinate exchange (the tuple order breaks it) --
    which is exactly what the symmetrization stages repair.
    """

    def __init__(self, d: int = 1, m: int = 1, engine_q: int = 4, tag: bytes = b"range-colouring"):
        self.d = d
        self.m = m
        self.engine_q = engine_q
        self.tag = tag

    def fit(self, X=None, y=None):
        return self

    def transform(self, X: SiteConfig) -> SiteConfig:
        check_site_config(X, d=self.d, kind="f")
        dirs = direction_set(self.d, self.m)
        out = np.empty(X.box.shape + (len(dirs),), dtype=np.int8)
        for j, h in enumerate(dirs):
            sample_line_words(X.values, X.box, h, j, self.engine_q, self.tag, out[..., j])
        return SiteConfig(X.box, out, X.margin)

    @property
    def pad(self) -> int:
        return 0  # per-line window laws are exact; no guard cells needed


def product_colouring(u: SiteConfig, d: int, engine_q: int = 4) -> SiteConfig:
    """The per-axis product colouring baseline (range 1, q^d tuple colours)."""
    return RangeColouring(d=d, m=1, engine_q=engine_q).transform(u)


def encode_tuple_colours(x: SiteConfig, q: int) -> SiteConfig:
    """Pack tuple components into a single integer, order-isomorphically."""
    comps = x.values
    if comps.ndim == x.d:
        return x
    k = comps.shape[-1]
    weights = (q + 1) ** np.arange(k - 1, -1, -1, dtype=np.int64)
    packed = (comps.astype(np.int64) * weights).sum(axis=-1)
    return SiteConfig(x.box, packed, x.margin)


def _colour_sort_keys(values: np.ndarray, d: int):
    """Keys for np.lexsort: colour components first, flat site index last."""
    if values.ndim == d:
        comps = [values.reshape(-1)]
    else:
        flat = values.reshape(-1, values.shape[-1])
        comps = [flat[:, j] for j in range(flat.shape[1])]
    flat_idx = np.arange(comps[0].size)
    return comps, flat_idx


def _sort_by_colour(values: np.ndarray, d: int) -> np.ndarray:
    comps, flat_idx = _colour_sort_keys(values, d)
    return np.lexsort([flat_idx] + comps[::-1])


def _equal_colour_runs(values: np.ndarray, d: int, order: np.ndarray):
    """Slices of ``order`` whose members share a full colour value."""
    if values.ndim == d:
        sorted_vals = values.reshape(-1)[order][:, None]
    else:
        sorted_vals = values.reshape(-1, values.shape[-1])[order]
    change = np.any(sorted_vals[1:] != sorted_vals[:-1], axis=1)
    boundaries = np.flatnonzero(change) + 1
    start = 0
    for b in list(boundaries) + [len(order)]:
        if b - start > 1:
            yield order[start:b]
        start = b


def greedy_select(coords: np.ndarray, m: int) -> np.ndarray:
    """Greedy maximal independent set of the range-m graph, in given order.

    ``coords`` are site coordinates sorted by increasing colour; a site is
    selected iff no previously selected site is within 1-norm distance m.
    """
    n, d = coords.shape
    selected = np.zeros(n, dtype=bool)
    cells = coords // m
    buckets: dict = {}
    from itertools import product

    neighbourhood = list(product((-1, 0, 1), repeat=d))
    for i in range(n):
        c = coords[i]
        cell = tuple(cells[i])
        blocked = False
        for off in neighbourhood:
            lst = buckets.get((cell[0] + off[0],) + tuple(cell[a] + off[a] for a in range(1, d)))
            if not lst:
                continue
            for s in lst:
                dist = 0
                for a in range(d):
                    dist += abs(s[a] - c[a])
                    if dist > m:
                        break
                if dist <= m:
                    blocked = True
                    break
            if blocked:
                break
        if not blocked:
            selected[i] = True
            buckets.setdefault(cell, []).append(tuple(int(x) for x in c))
    return selected


def _box_coords(box: Box) -> np.ndarray:
    grids = np.indices(box.shape).reshape(box.d, -1).T
    return grids + np.asarray(box.lo, dtype=np.int64)


def _check_run_distances(run_coords: np.ndarray, m: int):
    for i in range(len(run_coords)):
        for j in range(i + 1, len(run_coords)):
            if np.abs(run_coords[i] - run_coords[j]).sum() <= m:
                raise CorruptColouringError(
                    f"equal colours within distance {m} at "
                    f"{tuple(run_coords[i])} and {tuple(run_coords[j])}"
                )


class NetExtractor(BaseEstimator, TransformerMixin):
    """Greedy minimum-colour-first maximal independent set of the range-m graph.

    Visiting sites in increasing colour order and keeping any site that is
    not blocked by an earlier selection gives the same output as promoting
    colour classes one at a time, because each colour class is itself an
    independent set.  Far-apart colour ties cannot影响 the outcome and are
    broken by site order; ties within distance m mean the input was not a
    proper colouring and are reported as corrupt.
    """

    def __init__(self, m: int = 1, margin_scale: int = DEFAULT_MARGIN_SCALE):
        self.m = m
        self.margin_scale = margin_scale

    def fit(self, X=None, y=None):
        return self

    def transform(self, X: SiteConfig) -> SiteConfig:
        check_site_config(X)
        order = _sort_by_colour(X.values, X.d)
        coords = _box_coords(X.box)
        for run in _equal_colour_runs(X.values, X.d, order):
            _check_run_distances(coords[run], self.m)
        selected = greedy_select(coords[order], self.m)
        out = np.zeros(X.box.size, dtype=np.int8)
        out[order[selected]] = 1
        return SiteConfig(X.box, out.reshape(X.box.shape), X.margin + self.pad)

    @property
    def pad(self) -> int:
        return self.m * (1 + self.margin_scale)


class _LazyLineColours:
    """On-demand tuple components backed by per-line word caching."""

    def __init__(self, values, box, dirs, q, tag, precomputed):
        self.values = values
        self.box = box
        self.dirs = dirs
        self.q = q
        self.tag = tag
        self.pre = precomputed  # (n_sites, n_pre) int8
        self.caches = [dict() for _ in dirs]
        self.shape = box.shape

    def component(self, flat: int, j: int) -> int:
        if j < self.pre.shape[1]:
            return int(self.pre[flat, j])
        h = self.dirs[j]
        idx = np.unravel_index(flat, self.shape)
        # walk back to the segment start
        cur = list(idx)
        steps = 0
        while True:
            nxt = [c - a for c, a in zip(cur, h)]
            if any(c < 0 or c >= s for c, s in zip(nxt, self.shape)):
                break
            cur = nxt
            steps += 1
        key = (j, tuple(cur))
        word = self.caches[j].get(key)
        if word is None:
            length = None
            for a in range(self.box.d):
                if h[a] > 0:
                    room = (self.shape[a] - 1 - cur[a]) // h[a]
                elif h[a] < 0:
                    room = cur[a] // (-h[a])
                else:
                    continue
                length = room if length is None else min(length, room)
            length = int(length) + 1
            rng = np.arange(length)
            idxs = tuple(cur[a] + rng * h[a] for a in range(self.box.d))
            vals = self.values[idxs]
            seed = line_stream_seed(self.tag, j, vals)
            word = sample_word(self.q, length, splitmix_uniforms(seed, draws_needed(length)))
            self.caches[j][key] = word
        return int(word[steps])


class RangeColouringNet(BaseEstimator, TransformerMixin):
    """Range-m colouring followed by net extraction (uniforms in, net out).

    strategy="materialize" builds the full tuple colouring; "lazy" samples
    only the first three components up front and the rest on demand while
    resolving sort ties, which is what makes large direction sets (the
    symmetrization scale kappa^2) tractable.  "auto" picks by size.
    """

    def __init__(
        self,
        d: int = 1,
        m: int = 1,
        engine_q: int = 4,
        margin_scale: int = DEFAULT_MARGIN_SCALE,
        strategy: str = "auto",
        tag: bytes = b"range-colouring",
    ):
        self.d = d
        self.m = m
        self.engine_q = engine_q
        self.margin_scale = margin_scale
        self.strategy = strategy
        self.tag = tag

    def fit(self, X=None, y=None):
        return self

    def transform(self, X: SiteConfig) -> SiteConfig:
        check_site_config(X, d=self.d, kind="f")
        n_dirs = len(direction_set(self.d, self.m))
        strategy = self.strategy
        if strategy == "auto":
            small = n_dirs <= 64 and n_dirs * X.box.size <= 2_000_000
            strategy = "materialize" if small else "lazy"
        if strategy == "materialize":
            colours = RangeColouring(self.d, self.m, self.engine_q, self.tag).transform(X)
            return NetExtractor(self.m, self.margin_scale).transform(colours)
        if strategy != "lazy":
            raise ValueError(f"unknown strategy {self.strategy!r}")
        return self._transform_lazy(X)

    def _transform_lazy(self, X: SiteConfig) -> SiteConfig:
        dirs = direction_set(self.d, self.m)
        n_pre = min(_LAZY_COMPONENTS, len(dirs))
        pre = np.empty(X.box.shape + (n_pre,), dtype=np.int8)
        for j in range(n_pre):
            sample_line_words(
                X.values, X.box, dirs[j], j, self.engine_q, self.tag, pre[..., j]
            )
        flat_pre = pre.reshape(-1, n_pre)
        flat_idx = np.arange(flat_pre.shape[0])
        order = np.lexsort([flat_idx] + [flat_pre[:, j] for j in range(n_pre)][::-1])

        lazy = _LazyLineColours(X.values, X.box, dirs, self.engine_q, self.tag, flat_pre)
        coords = _box_coords(X.box)
        order = self._resolve_ties(order, flat_pre, lazy, coords, len(dirs), n_pre)

        selected = greedy_select(coords[order], self.m)
        out = np.zeros(X.box.size, dtype=np.int8)
        out[order[selected]] = 1
        return SiteConfig(X.box, out.reshape(X.box.shape), X.margin + self.pad)

    def _resolve_ties(self, order, flat_pre, lazy, coords, n_dirs, n_pre):
        import functools

        sorted_pre = flat_pre[order]
        change = np.any(sorted_pre[1:] != sorted_pre[:-1], axis=1)
        boundaries = list(np.flatnonzero(change) + 1) + [len(order)]
        m = self.m

        def cmp(u: int, v: int) -> int:
            for j in range(n_pre, n_dirs):
                cu = lazy.component(u, j)
                cv = lazy.component(v, j)
                if cu != cv:
                    return -1 if cu < cv else 1
            if np.abs(coords[u] - coords[v]).sum() <= m:
                raise CorruptColouringError(
                    f"equal colours within distance {m} at "
                    f"{tuple(coords[u])} and {tuple(coords[v])}"
                )
            return -1 if u < v else 1

        out = order.copy()
        start = 0
        for b in boundaries:
            if b - start > 1:
                chunk = sorted(out[start:b].tolist(), key=functools.cmp_to_key(cmp))
                out[start:b] = chunk
            start = b
        return out

    @property
    def pad(self) -> int:
        return self.m * (1 + self.margin_scale)
