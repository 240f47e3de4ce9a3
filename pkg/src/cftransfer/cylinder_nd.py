"""Product cylinders in (0, 1)^d and their separation estimates.

A d-dimensional word is a sequence of digit vectors ``(v_1, ..., v_n)``
with ``v_i`` in N^d. Its cylinder is the product over coordinates ``j`` of
the 1-d cylinders of ``(v_1[j], ..., v_n[j])``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Iterable, NamedTuple, Sequence

from .cf_core import (
    UNIT_INTERVAL,
    Interval,
    as_rational,
    cylinder_interval,
    cylinder_length,
)
from .errors import InvalidInput

DigitVector = tuple[int, ...]
WordND = tuple[DigitVector, ...]

# Smallest value of box_distance / digit_separation_bound over all prefixes
# and digit pairs; attained for the empty prefix with digits 1 and 3.
DIGIT_SEPARATION_FACTOR = Fraction(1, 4)


def as_vector(v: Iterable[int], d: int | None = None) -> DigitVector:
    out = []
    for a in v:
        if isinstance(a, bool) or int(a) != a or a < 1:
            raise InvalidInput(f"digit vector entry {a!r} is not a positive integer")
        out.append(int(a))
    if not out:
        raise InvalidInput("digit vector has no coordinates")
    if d is not None and len(out) != d:
        raise InvalidInput(f"digit vector {tuple(out)} does not have dimension {d}")
    return tuple(out)


def as_word_nd(word: Iterable[Iterable[int]], d: int | None = None) -> tuple[WordND, int]:
    """Validate a d-dimensional word; returns the word and its dimension."""
    vecs = []
    for v in word:
        v = as_vector(v, d)
        d = len(v)
        vecs.append(v)
    if d is None:
        raise InvalidInput("the dimension of an empty word must be given")
    return tuple(vecs), d


def linf(v: Sequence[int]) -> int:
    return max(abs(x) for x in v)


def coordinate_words(word: WordND, d: int) -> list[tuple[int, ...]]:
    return [tuple(v[j] for v in word) for j in range(d)]


@dataclass(frozen=True)
class CylinderND:
    word: WordND
    factors: tuple[Interval, ...]

    @property
    def d(self) -> int:
        return len(self.factors)

    @property
    def side_lengths(self) -> tuple[Fraction, ...]:
        return tuple(f.length for f in self.factors)

    def contains(self, point: Sequence) -> bool:
        if len(point) != self.d:
            raise InvalidInput("point dimension does not match the cylinder")
        return all(f.contains(x) for f, x in zip(self.factors, point))

    def to_json(self) -> dict:
        return {
            "word": [list(v) for v in self.word],
            "factors": [f.to_json() for f in self.factors],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CylinderND":
        factors = tuple(Interval.from_json(f) for f in data["factors"])
        word, _ = as_word_nd(data["word"], len(factors))
        return cls(word, factors)


def cylinder_nd(word: Iterable[Iterable[int]], d: int | None = None) -> CylinderND:
    """Product cylinder of a d-dimensional word (``d`` needed only if the word is empty)."""
    word, d = as_word_nd(word, d)
    if not word:
        return CylinderND((), (UNIT_INTERVAL,) * d)
    factors = tuple(cylinder_interval(w) for w in coordinate_words(word, d))
    return CylinderND(word, factors)


class Enclosure(NamedTuple):
    lo: Fraction
    hi: Fraction


def _sqrt_bounds(n: int, digits: int = 30) -> Enclosure:
    """Rational lower and upper bounds for sqrt(n)."""
    r = isqrt(n)
    if r * r == n:
        return Enclosure(Fraction(r), Fraction(r))
    scale = 10 ** digits
    s = isqrt(n * scale * scale)
    return Enclosure(Fraction(s, scale), Fraction(s + 1, scale))


def diameter(c: CylinderND, metric: str = "linf") -> Enclosure:
    """Diameter of a product cylinder.

    Exact for the sup metric. The Euclidean diameter ``sqrt(sum of squared
    sides)`` is returned as a tight rational enclosure.
    """
    longest = max(c.side_lengths)
    if metric == "linf":
        return Enclosure(longest, longest)
    if metric == "l2":
        total = sum(x * x for x in c.side_lengths)
        lo_r, hi_r = _sqrt_bound_fraction(total)
        return Enclosure(lo_r, hi_r)
    raise InvalidInput(f"unknown metric {metric!r}")


def _sqrt_bound_fraction(x: Fraction, digits: int = 30) -> Enclosure:
    # sqrt(p/q) = sqrt(p q) / q
    lo, hi = _sqrt_bounds(x.numerator * x.denominator, digits)
    return Enclosure(lo / x.denominator, hi / x.denominator)


def diameter_bounds(word: Iterable[Iterable[int]], d: int | None = None) -> tuple[Fraction, Fraction, Fraction]:
    """``(lower, diam_inf, upper)`` with lower/upper the product-of-digits bounds.

    ``lower = 1/2 max_j prod_i (v_i[j]+1)^-2`` and
    ``upper = max_j prod_i v_i[j]^-2``.
    """
    word, d = as_word_nd(word, d)
    c = cylinder_nd(word, d)
    lower = Fraction(0)
    upper = Fraction(0)
    for w in coordinate_words(word, d):
        lo = Fraction(1, 2)
        up = Fraction(1)
        for a in w:
            lo /= (a + 1) ** 2
            up /= a * a
        lower = max(lower, lo)
        upper = max(upper, up)
    if not word:
        lower, upper = Fraction(1, 2), Fraction(1)
    return lower, diameter(c).hi, upper


def box_distance_linf(c1: CylinderND, c2: CylinderND) -> Fraction:
    """Sup-metric distance between the closures of two product cylinders."""
    if c1.d != c2.d:
        raise InvalidInput("cylinders have different dimensions")
    return max(f.gap(g) for f, g in zip(c1.factors, c2.factors))


class SeparationCheck(NamedTuple):
    distance: Fraction
    bound: Fraction
    ok: bool


def _children(prefix, v, w):
    prefix, d = as_word_nd(prefix, len(v))
    v = as_vector(v, d)
    w = as_vector(w, d)
    return prefix, v, w, d


def sibling_separation_check(prefix, v, w, c: Fraction = Fraction(1)) -> SeparationCheck:
    """Compare the gap between two sibling cylinders with ``c`` times their smallest side.

    Requires ``||v - w||_inf >= 2``; the bound is
    ``c * min_j min(|I(prefix_j v_j)|, |I(prefix_j w_j)|)``.
    """
    prefix, v, w, d = _children(prefix, v, w)
    if linf([a - b for a, b in zip(v, w)]) < 2:
        raise InvalidInput(f"digit vectors {v} and {w} are not 2-separated")
    cv = cylinder_nd(prefix + (v,), d)
    cw = cylinder_nd(prefix + (w,), d)
    smallest = min(min(cv.side_lengths), min(cw.side_lengths))
    bound = as_rational(c) * smallest
    dist = box_distance_linf(cv, cw)
    return SeparationCheck(dist, bound, dist >= bound)


def digit_separation_bound(prefix, v, w) -> Fraction:
    """``max_j |I(prefix_j)| |v_j - w_j| / (v_j w_j)`` over coordinates with ``|v_j - w_j| >= 2``."""
    prefix, v, w, d = _children(prefix, v, w)
    if linf([a - b for a, b in zip(v, w)]) < 2:
        raise InvalidInput(f"digit vectors {v} and {w} are not 2-separated")
    best = Fraction(0)
    for j, pw in enumerate(coordinate_words(prefix, d) if prefix else [()] * d):
        if abs(v[j] - w[j]) >= 2:
            val = cylinder_length(pw) * Fraction(abs(v[j] - w[j]), v[j] * w[j])
            best = max(best, val)
    return best


def digit_separation_check(prefix, v, w, factor: Fraction = DIGIT_SEPARATION_FACTOR) -> SeparationCheck:
    """Box distance of the two children against ``factor * digit_separation_bound``."""
    prefix, v, w, d = _children(prefix, v, w)
    bound = as_rational(factor) * digit_separation_bound(prefix, v, w)
    dist = box_distance_linf(cylinder_nd(prefix + (v,), d), cylinder_nd(prefix + (w,), d))
    return SeparationCheck(dist, bound, dist >= bound)
