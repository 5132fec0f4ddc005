"""One-dimensional finitely dependent colouring engine.

The engine samples the exact law of a window of n sites in O(n):

1. Backward pass.  Starting from all n positions, repeatedly remove one:
   with total probability 2(q-1)/W_p a uniformly chosen boundary position
   (the current minimum or maximum), otherwise a uniformly chosen interior
   position, where W_p = 2(q-1) + (p-2)(q-2) and p is the current count.
   With two positions left, remove either with probability 1/2.
2. The arrival order is the reversal of the removal order.
3. Replay.  Process positions in arrival order.  The first takes a uniform
   colour in {1..q}; a position arriving next to a single present
   neighbour takes a uniform colour among the q-1 colours differing from
   it; a position arriving between two present neighbours takes a uniform
   colour among the q-2 colours differing from both (their colours are
   always distinct, because they were adjacent-among-present earlier).

q = 4 gives a 1-dependent proper colouring law, q = 3 a 2-dependent one;
both claims are certified exactly (window length <= 7) by two independent
oracles in this module rather than assumed:

* ``exact_sampler_law`` enumerates every removal sequence and every replay
  branch with exact rational weights;
* ``insertion_count`` counts, per word, the build orders keeping every
  intermediate subword proper -- the law must be proportional to it.

Randomness is consumed from a sequential stream in a fixed documented
order (backward pass first, one or two draws per step, then one draw per
arrival), which is part of the reproducibility contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

SUPPORTED_Q = (3, 4)

_LAW_MAX_N = 8
_COUNT_MAX_N = 12


def _check_q(q: int, experimental: bool):
    if q in SUPPORTED_Q:
        return
    if experimental and q > 2:
        return
    raise ValueError(
        f"q={q} carries no dependence warranty; only q in {SUPPORTED_Q} "
        "is supported (pass experimental=True to sample anyway)"
    )


def sample_word(q: int, n: int, draws: np.ndarray) -> np.ndarray:
    """Sample one window word from pre-drawn uniforms (consumed in order)."""
    word = np.zeros(n, dtype=np.int8)
    if n == 1:
        word[0] = 1 + min(int(draws[0] * q), q - 1)
        return word

    nxt = list(range(1, n + 1))
    nxt[n - 1] = -1
    prv = list(range(-1, n - 1))
    interior = list(range(1, n - 1))
    slot = [-1] * n
    for i, pos in enumerate(interior):
        slot[pos] = i
    head, tail = 0, n - 1

    removed_pos = []
    removed_nbrs = []
    di = 0

    def drop_interior(pos):
        i = slot[pos]
        last = interior[-1]
        interior[i] = last
        slot[last] = i
        interior.pop()
        slot[pos] = -1

    for p in range(n, 2, -1):
        wb = 2.0 * (q - 1)
        total = wb + (p - 2) * (q - 2)
        u = draws[di] * total
        di += 1
        if u < wb:
            pos = head if u < wb / 2 else tail
        else:
            j = min(int(draws[di] * (p - 2)), p - 3)
            di += 1
            pos = interior[j]
        removed_pos.append(pos)
        removed_nbrs.append((prv[pos], nxt[pos]))
        a, b = prv[pos], nxt[pos]
        if a >= 0:
            nxt[a] = b
        if b >= 0:
            prv[b] = a
        if pos == head:
            head = b
            if head != tail:
                drop_interior(head)
        elif pos == tail:
            tail = a
            if tail != head:
                drop_interior(tail)
        else:
            drop_interior(pos)

    # two remain: head and tail
    u = draws[di]
    di += 1
    pos = head if u < 0.5 else tail
    other = tail if pos == head else head
    removed_pos.append(pos)
    removed_nbrs.append((prv[pos], nxt[pos]))

    # replay
    u = draws[di]
    di += 1
    word[other] = 1 + min(int(u * q), q - 1)
    for pos, (a, b) in zip(reversed(removed_pos), reversed(removed_nbrs)):
        forb1 = int(word[a]) if a >= 0 else 0
        forb2 = int(word[b]) if b >= 0 else 0
        if forb1 > 0 and forb2 == forb1:
            raise AssertionError("present neighbours share a colour")
        c = q - (forb1 > 0) - (forb2 > 0)
        k = min(int(draws[di] * c), c - 1)
        di += 1
        colour = 0
        for cand in range(1, q + 1):
            if cand == forb1 or cand == forb2:
                continue
            if k == 0:
                colour = cand
                break
            k -= 1
        word[pos] = colour
    return word


def draws_needed(n: int) -> int:
    return 3 * n + 4


def sample_window(q: int, n: int, stream, experimental: bool = False) -> np.ndarray:
    """Sample the exact n-site window law; all randomness from ``stream``."""
    _check_q(q, experimental)
    if n < 1:
        raise ValueError("window length must be >= 1")
    return sample_word(q, n, stream.take(draws_needed(n)))


@dataclass
class LawTable:
    """Exact finite-window law: word tuples -> rational probabilities."""

    q: int
    n: int
    probs: dict

    def total(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def support(self):
        return sorted(self.probs)

    def prob(self, word) -> Fraction:
        return self.probs.get(tuple(word), Fraction(0))

    def marginal(self, positions) -> dict:
        """Exact joint law of the given (0-based, sorted) positions."""
        positions = tuple(positions)
        out: dict = {}
        for word, p in self.probs.items():
            key = tuple(word[i] for i in positions)
            out[key] = out.get(key, Fraction(0)) + p
        return out

    def reversed_table(self) -> "LawTable":
        out: dict = {}
        for word, p in self.probs.items():
            out[word[::-1]] = out.get(word[::-1], Fraction(0)) + p
        return LawTable(self.q, self.n, out)

    def permuted_colours(self, perm: dict) -> "LawTable":
        out: dict = {}
        for word, p in self.probs.items():
            key = tuple(perm[c] for c in word)
            out[key] = out.get(key, Fraction(0)) + p
        return LawTable(self.q, self.n, out)

    def to_jsonable(self) -> dict:
        return {
            "q": self.q,
            "n": self.n,
            "probabilities": {
                "".join(map(str, w)): f"{p.numerator}/{p.denominator}"
                for w, p in sorted(self.probs.items())
            },
        }

    @classmethod
    def from_jsonable(cls, data: dict) -> "LawTable":
        probs = {}
        for key, val in data["probabilities"].items():
            word = tuple(int(c) for c in key)
            num, den = val.split("/")
            probs[word] = Fraction(int(num), int(den))
        return cls(int(data["q"]), int(data["n"]), probs)


def is_proper(word) -> bool:
    return all(a != b for a, b in zip(word, word[1:]))


def exact_sampler_law(q: int, n: int, experimental: bool = False) -> LawTable:
    """Brute-force enumeration of the sampler's law, in exact rationals.

    Walks every removal sequence with its probability, then every colour
    branch of the replay; the per-branch weight is the product of the
    literal step probabilities (nothing is simplified away analytically).
    """
    _check_q(q, experimental)
    if n < 1:
        raise ValueError("window length must be >= 1")
    if n > _LAW_MAX_N:
        raise ValueError(f"n={n} too large for exact enumeration (max {_LAW_MAX_N})")

    if n == 1:
        p = Fraction(1, q)
        return LawTable(q, n, {(c,): p for c in range(1, q + 1)})

    # weight -> {word: multiplicity}; grouping keeps the rational sums cheap
    groups: dict = {}

    def backward(present: tuple, prob: Fraction, records: list):
        p = len(present)
        if p == 2:
            for i in (0, 1):
                pos = present[i]
                other = present[1 - i]
                nbr = (-1, other) if pos < other else (other, -1)
                _replay_leaf(
                    q, records + [(pos, nbr)], other, prob * Fraction(1, 2), groups
                )
            return
        w_total = 2 * (q - 1) + (p - 2) * (q - 2)
        for i, pos in enumerate(present):
            boundary = i == 0 or i == p - 1
            weight = Fraction(q - 1 if boundary else q - 2, w_total)
            left = present[i - 1] if i > 0 else -1
            right = present[i + 1] if i < p - 1 else -1
            rest = present[:i] + present[i + 1 :]
            backward(rest, prob * weight, records + [(pos, (left, right))])

    backward(tuple(range(n)), Fraction(1), [])

    law: dict = {}
    for weight, counts in groups.items():
        for word, mult in counts.items():
            law[word] = law.get(word, Fraction(0)) + weight * mult
    return LawTable(q, n, law)


def _replay_leaf(q, records, first, prob, groups):
    """Enumerate every colour branch of one arrival order."""
    n = len(records) + 1
    # branch factor per arrival is fixed by the arrival types
    denom = q
    for _, (a, b) in reversed(records):
        denom *= (q - 2) if (a >= 0 and b >= 0) else (q - 1)
    weight = prob / denom
    counts = groups.setdefault(weight, {})

    word = [0] * n
    arrivals = [rec for rec in reversed(records)]

    def colours(k: int):
        if k == len(arrivals):
            key = tuple(word)
            counts[key] = counts.get(key, 0) + 1
            return
        pos, (a, b) = arrivals[k]
        ca = word[a] if a >= 0 else 0
        cb = word[b] if b >= 0 else 0
        if a >= 0 and b >= 0 and ca == cb:
            raise AssertionError("present neighbours share a colour")
        for cand in range(1, q + 1):
            if cand == ca or cand == cb:
                continue
            word[pos] = cand
            colours(k + 1)
        word[pos] = 0

    for c in range(1, q + 1):
        word[first] = c
        colours(0)
    return


@lru_cache(maxsize=None)
def _count(word: tuple) -> int:
    if len(word) == 0:
        return 1
    total = 0
    for i in range(len(word)):
        rest = word[:i] + word[i + 1 :]
        if is_proper(rest):
            total += _count(rest)
    return total


def insertion_count(word) -> int:
    """Number of build orders of ``word`` with every intermediate subword proper.

    Independent cross-oracle: the sampler's law must equal N(x) / sum N.
    """
    word = tuple(int(c) for c in word)
    if len(word) > _COUNT_MAX_N:
        raise ValueError(f"word longer than {_COUNT_MAX_N}")
    if not is_proper(word):
        return 0
    return _count(word)


def all_proper_words(q: int, n: int):
    def rec(prefix):
        if len(prefix) == n:
            yield prefix
            return
        for c in range(1, q + 1):
            if prefix and prefix[-1] == c:
                continue
            yield from rec(prefix + (c,))

    yield from rec(())


@dataclass
class DependenceReport:
    """Exact block-independence audit of a window law."""

    q: int
    n: int
    k: int
    max_discrepancy: Fraction
    witness: tuple = None

    @property
    def exactly_independent(self) -> bool:
        return self.max_discrepancy == 0


def check_dependence(law: LawTable, k: int) -> DependenceReport:
    """Compare joint vs product marginals for all block pairs with gap > k.

    Blocks are contiguous position intervals; for a one-dimensional window
    law this implies independence of arbitrary site sets across the gap.
    Discrepancies are exact rationals; 0 means exactly k-dependent at n.
    """
    n = law.n
    worst = Fraction(0)
    witness = None
    for a_end in range(n - 1):  # block A = [a_start..a_end]
        for a_start in range(a_end + 1):
            for b_start in range(a_end + k + 1, n):
                for b_end in range(b_start, n):
                    pa = tuple(range(a_start, a_end + 1))
                    pb = tuple(range(b_start, b_end + 1))
                    joint = law.marginal(pa + pb)
                    ma = law.marginal(pa)
                    mb = law.marginal(pb)
                    for wa, qa in ma.items():
                        for wb, qb in mb.items():
                            diff = abs(joint.get(wa + wb, Fraction(0)) - qa * qb)
                            if diff > worst:
                                worst = diff
                                witness = (pa, pb, wa, wb)
    return DependenceReport(law.q, n, k, worst, witness)
