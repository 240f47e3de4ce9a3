"""Digit sets S in N^d: membership, shell enumeration, exact counting and densities.

Boxes are inclusive integer rectangles ``lo <= v <= hi`` (coordinatewise).
``Q_N = [1, N]^d`` and ``Q_N(u) = u + [1, N]^d``. The canonical order on a
finite piece of a set is by sup-norm, then lexicographic.
"""

from __future__ import annotations

import csv
import io
import itertools
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor
from typing import Callable, Iterable, Iterator, Sequence

from .cf_core import as_rational, format_rational
from .config import SCHEMA_VERSION, default_budget
from .cylinder_nd import DigitVector, as_vector
from .errors import BudgetExceeded, InvalidInput

Box = tuple[tuple[int, ...], tuple[int, ...]]


def iroot(n: int, p: int) -> int:
    """Largest integer r >= 0 with r**p <= n."""
    if n < 0:
        raise ValueError("negative radicand")
    if n < 2 or p == 1:
        return n
    # integer Newton iteration from an overestimate
    r = 1 << (n.bit_length() // p + 1)
    while True:
        nxt = ((p - 1) * r + n // r ** (p - 1)) // p
        if nxt >= r:
            break
        r = nxt
    while r ** p > n:
        r -= 1
    while (r + 1) ** p <= n:
        r += 1
    return r


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _shell_points(cands: Sequence[Sequence[int]], m: int) -> Iterator[DigitVector]:
    """Lexicographic tuples with coordinate j drawn from ``cands[j]`` (sorted, all <= m) and max exactly m."""
    d = len(cands)
    has_m = [m in c for c in cands]
    # suffix_has[j]: some coordinate at position >= j can equal m
    suffix_has = [False] * (d + 1)
    for j in range(d - 1, -1, -1):
        suffix_has[j] = suffix_has[j + 1] or has_m[j]
    if not suffix_has[0]:
        return
    prefix: list[int] = []

    def rec(j: int, hit: bool):
        if j == d:
            if hit:
                yield tuple(prefix)
            return
        for c in cands[j]:
            h = hit or c == m
            if not h and not suffix_has[j + 1]:
                continue
            prefix.append(c)
            yield from rec(j + 1, h)
            prefix.pop()

    yield from rec(0, False)


class DigitSet:
    """Base class. Subclasses override ``contains`` and, where possible, exact counting."""

    d: int = 1
    declared_alpha: float | None = None
    declared_beta: float = 0.0

    # -- membership and enumeration -------------------------------------------------
    def contains(self, v: Sequence[int]) -> bool:
        raise NotImplementedError

    def __contains__(self, v) -> bool:
        return self.contains(tuple(v))

    def max_norm(self) -> int | None:
        """Largest sup-norm of a member for finite sets, ``None`` for infinite ones."""
        return None

    @property
    def is_finite(self) -> bool:
        return self.max_norm() is not None

    def _coord_candidates(self, j: int, m: int) -> Sequence[int]:
        return range(1, m + 1)

    def iter_shell(self, m: int) -> Iterator[DigitVector]:
        """Members with sup-norm exactly ``m``, in lexicographic order."""
        if m < 1:
            return iter(())
        cands = [list(self._coord_candidates(j, m)) for j in range(self.d)]
        return (v for v in _shell_points(cands, m) if self.contains(v))

    def iter_members(self, lo: int, hi: int, budget: int | None = None) -> Iterator[DigitVector]:
        """Members with ``lo <= ||v||_inf <= hi`` in canonical order."""
        budget = default_budget() if budget is None else budget
        seen = 0
        top = self.max_norm()
        if top is not None:
            hi = min(hi, top)
        for m in range(max(lo, 1), hi + 1):
            for v in self.iter_shell(m):
                seen += 1
                if seen > budget:
                    raise BudgetExceeded(f"enumeration budget {budget} exhausted at norm {m}")
                yield v

    # -- counting --------------------------------------------------------------------
    def count_rect(self, lo: Sequence[int], hi: Sequence[int], budget: int | None = None) -> int:
        """``|S ∩ {lo <= v <= hi}|`` (inclusive; coordinates below 1 are ignored)."""
        lo, hi = _clip_rect(lo, hi, self.d)
        if lo is None:
            return 0
        return self._count_rect(lo, hi, default_budget() if budget is None else budget)

    def _count_rect(self, lo, hi, budget) -> int:
        size = 1
        for a, b in zip(lo, hi):
            size *= b - a + 1
        if size > budget:
            raise BudgetExceeded(f"box with {size} points exceeds enumeration budget {budget}")
        return sum(1 for v in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)])
                   if self.contains(v))

    def count_box(self, origin: Sequence[int], N: int, budget: int | None = None) -> int:
        """``|S ∩ Q_N(origin)|``."""
        if len(origin) != self.d:
            raise InvalidInput("translate has the wrong dimension")
        if N < 0:
            raise InvalidInput("box side must be non-negative")
        return self.count_rect([u + 1 for u in origin], [u + N for u in origin], budget)

    def count_cube(self, N: int, budget: int | None = None) -> int:
        """``|S ∩ Q_N|``, which is also the number of members of norm at most N."""
        return self.count_box((0,) * self.d, N, budget)

    def count_norm_between(self, lo: int, hi: int, floor_: int = 1, budget: int | None = None) -> int:
        """Members with ``lo <= ||v||_inf <= hi`` and every coordinate ``>= floor_``."""
        if hi < lo:
            return 0
        f = (floor_,) * self.d
        return (self.count_rect(f, (hi,) * self.d, budget)
                - self.count_rect(f, (lo - 1,) * self.d, budget))

    # -- serialization ---------------------------------------------------------------
    def to_json(self) -> dict:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_json()})"


def _clip_rect(lo, hi, d):
    if len(lo) != d or len(hi) != d:
        raise InvalidInput("box has the wrong dimension")
    lo = tuple(max(1, int(a)) for a in lo)
    hi = tuple(int(b) for b in hi)
    if any(a > b for a, b in zip(lo, hi)):
        return None, None
    return lo, hi


# ----------------------------------------------------------------------------- 1-d sets
class Seq1D(DigitSet):
    """``{c m^p + b : m >= m0}`` in N (increasing in m). Requires ``p == 1`` or ``b == 0``.

    Covers N, tails ``{a >= N}``, residue classes and perfect powers.
    """

    d = 1

    def __init__(self, c: int = 1, p: int = 1, b: int = 0, m0: int = 1, name: str | None = None):
        if c < 1 or p < 1 or m0 < 0:
            raise InvalidInput("sequence needs c >= 1, p >= 1, m0 >= 0")
        if p > 1 and b != 0:
            raise InvalidInput("only affine sequences may have an offset")
        if c * m0 ** p + b < 1:
            raise InvalidInput("sequence must start inside N")
        self.c, self.p, self.b, self.m0 = c, p, b, m0
        self.name = name

    def g(self, m: int) -> int:
        return self.c * m ** self.p + self.b

    def index_le(self, x: int) -> int:
        """Largest m with g(m) <= x (may be m0 - 1)."""
        y = x - self.b
        if y < self.c * self.m0 ** self.p:
            return self.m0 - 1
        return iroot(y // self.c, self.p)

    def first_index_above(self, x: int) -> int:
        return max(self.m0, self.index_le(x) + 1)

    def contains(self, v) -> bool:
        (a,) = v
        m = self.index_le(a)
        return m >= self.m0 and self.g(m) == a

    def values(self, lo: int, hi: int) -> Iterator[int]:
        m = self.first_index_above(lo - 1)
        while True:
            a = self.g(m)
            if a > hi:
                return
            yield a
            m += 1

    def count_range(self, lo: int, hi: int) -> int:
        if hi < lo:
            return 0
        return max(0, self.index_le(hi) - max(self.m0, self.index_le(lo - 1) + 1) + 1)

    def _count_rect(self, lo, hi, budget) -> int:
        return self.count_range(lo[0], hi[0])

    def iter_shell(self, m):
        return iter([(m,)] if m >= 1 and self.contains((m,)) else [])

    def iter_members(self, lo, hi, budget=None):
        return ((a,) for a in self.values(max(lo, 1), hi))

    def to_json(self) -> dict:
        return {"kind": "sequence", "c": self.c, "p": self.p, "b": self.b, "m0": self.m0}


def naturals() -> Seq1D:
    return Seq1D(name="N")


def tail1(N: int) -> Seq1D:
    """``{a in N : a >= N}``."""
    if N < 1:
        raise InvalidInput("tail start must be a positive integer")
    return Seq1D(1, 1, 0, N, name=f"tail1:N={N}")


def progression(modulus: int, residue: int) -> Seq1D:
    """``{a >= 1 : a = residue mod modulus}``."""
    if modulus < 1:
        raise InvalidInput("modulus must be positive")
    r0 = residue % modulus or modulus
    return Seq1D(modulus, 1, r0 - modulus, 1, name=f"progression:{modulus},{residue % modulus}")


def evens() -> Seq1D:
    return progression(2, 0)


def squares() -> Seq1D:
    return Seq1D(1, 2, 0, 1, name="squares1")


# ------------------------------------------------------------------------- finite sets
class ExplicitSet(DigitSet):
    """A finite set of digit vectors."""

    def __init__(self, points: Iterable[Sequence[int]], d: int | None = None):
        pts = sorted({as_vector(p, d) for p in points}, key=lambda v: (max(v), v))
        if not pts and d is None:
            raise InvalidInput("dimension of an empty explicit set must be given")
        self.d = d if d is not None else len(pts[0])
        if any(len(p) != self.d for p in pts):
            raise InvalidInput("explicit set mixes dimensions")
        self.points = pts
        self._set = set(pts)
        self._norms = [max(p) for p in pts]

    def contains(self, v) -> bool:
        return tuple(v) in self._set

    def max_norm(self):
        return self._norms[-1] if self.points else 0

    def iter_shell(self, m):
        i, j = bisect_left(self._norms, m), bisect_right(self._norms, m)
        return iter(self.points[i:j])

    def iter_members(self, lo, hi, budget=None):
        i, j = bisect_left(self._norms, lo), bisect_right(self._norms, hi)
        return iter(self.points[i:j])

    def _count_rect(self, lo, hi, budget) -> int:
        j = bisect_right(self._norms, max(hi))
        return sum(1 for p in self.points[:j]
                   if all(a <= x <= b for a, x, b in zip(lo, p, hi)))

    def to_json(self) -> dict:
        return {"kind": "explicit", "d": self.d, "points": [list(p) for p in self.points]}


# -------------------------------------------------------------------- product families
class ProductSet(DigitSet):
    """Cartesian product of one-dimensional sets."""

    def __init__(self, factors: Sequence[DigitSet], name: str | None = None):
        if not factors or any(f.d != 1 for f in factors):
            raise InvalidInput("product factors must be one-dimensional sets")
        self.factors = list(factors)
        self.d = len(self.factors)
        self.name = name

    def contains(self, v) -> bool:
        return len(v) == self.d and all(f.contains((a,)) for f, a in zip(self.factors, v))

    def max_norm(self):
        tops = [f.max_norm() for f in self.factors]
        if any(t == 0 for t in tops):
            return 0
        return None if any(t is None for t in tops) else max(tops)

    def _coord_candidates(self, j, m):
        return [a for (a,) in self.factors[j].iter_members(1, m)]

    def _count_rect(self, lo, hi, budget) -> int:
        out = 1
        for f, a, b in zip(self.factors, lo, hi):
            out *= f.count_rect((a,), (b,), budget)
            if out == 0:
                return 0
        return out

    def to_json(self) -> dict:
        return {"kind": "product", "factors": [f.to_json() for f in self.factors]}


def full(d: int) -> DigitSet:
    """N^d (a single sequence when d = 1)."""
    if d < 1:
        raise InvalidInput("dimension must be positive")
    if d == 1:
        return naturals()
    return ProductSet([naturals() for _ in range(d)], name=f"full{d}")


def tail_product(d: int, N: int) -> DigitSet:
    """``{v : min_j v_j >= N}``."""
    if d == 1:
        return tail1(N)
    return ProductSet([tail1(N) for _ in range(d)], name=f"tail{d}:N={N}")


class DiagonalSet(DigitSet):
    """``{(a, ..., a) : a in base}`` for a one-dimensional base set."""

    def __init__(self, base: DigitSet, d: int):
        if base.d != 1 or d < 1:
            raise InvalidInput("diagonal needs a one-dimensional base and d >= 1")
        self.base = base
        self.d = d

    def contains(self, v) -> bool:
        return len(v) == self.d and len(set(v)) == 1 and self.base.contains((v[0],))

    def max_norm(self):
        return self.base.max_norm()

    def iter_shell(self, m):
        return iter([(m,) * self.d] if self.base.contains((m,)) else [])

    def iter_members(self, lo, hi, budget=None):
        return ((a,) * self.d for (a,) in self.base.iter_members(lo, hi, budget))

    def _count_rect(self, lo, hi, budget) -> int:
        return self.base.count_rect((max(lo),), (min(hi),), budget)

    def to_json(self) -> dict:
        return {"kind": "diagonal", "d": self.d, "base": self.base.to_json()}


def diagonal(d: int) -> DiagonalSet:
    return DiagonalSet(naturals(), d)


class BalancedSet(DigitSet):
    """``C_K = {v in N^d : max_j v_j <= K min_j v_j}``."""

    def __init__(self, K: int, d: int):
        if K < 1 or d < 1:
            raise InvalidInput("balanced set needs K >= 1 and d >= 1")
        self.K, self.d = K, d

    def contains(self, v) -> bool:
        return len(v) == self.d and min(v) >= 1 and max(v) <= self.K * min(v)

    def _coord_candidates(self, j, m):
        return range(_ceil_div(m, self.K), m + 1)

    def _count_rect(self, lo, hi, budget) -> int:
        # sum over the minimum value mn of #{min = mn, max <= K mn}
        K = self.K
        total = 0
        top = min(hi)
        if budget is not None and top - min(lo) > budget:
            raise BudgetExceeded(f"balanced count over {top - min(lo)} minima exceeds the budget")
        for mn in range(min(lo), top + 1):
            up = K * mn
            ge = 1
            gt = 1
            for a, b in zip(lo, hi):
                ge *= max(0, min(b, up) - max(a, mn) + 1)
                gt *= max(0, min(b, up) - max(a, mn + 1) + 1)
            total += ge - gt
        return total

    def to_json(self) -> dict:
        return {"kind": "balanced_band", "K": self.K, "d": self.d}


def ck_count(K: int, d: int, N: int) -> int:
    """``|C_K ∩ Q_N| = sum_{m<=N} (L_m^d - (L_m - 1)^d)`` with ``L_m = min(K m, N) - m + 1``."""
    if K < 1 or d < 1 or N < 0:
        raise InvalidInput("ck_count needs K >= 1, d >= 1, N >= 0")
    total = 0
    for m in range(1, N + 1):
        L = min(K * m, N) - m + 1
        total += L ** d - (L - 1) ** d
    return total


def ck_density_limit(K: int, d: int) -> Fraction:
    """Asymptotic density ``(1 - 1/K)^(d-1)`` of C_K."""
    return (1 - Fraction(1, K)) ** (d - 1)


# --------------------------------------------------------------------- restrictions
class RectRestricted(DigitSet):
    """``base ∩ (union of disjoint inclusive boxes)``."""

    def __init__(self, base: DigitSet, boxes: Sequence[Box]):
        self.base = base
        self.d = base.d
        self.boxes = [(tuple(a), tuple(b)) for a, b in boxes]
        for (a, b) in self.boxes:
            if len(a) != self.d or len(b) != self.d:
                raise InvalidInput("box dimension mismatch")
        for i, j in itertools.combinations(range(len(self.boxes)), 2):
            if _rects_meet(self.boxes[i], self.boxes[j]):
                raise InvalidInput(f"boxes {self.boxes[i]} and {self.boxes[j]} overlap")

    def contains(self, v) -> bool:
        return (any(all(a <= x <= b for a, x, b in zip(lo, v, hi)) for lo, hi in self.boxes)
                and self.base.contains(v))

    def max_norm(self):
        return max((max(hi) for _, hi in self.boxes), default=0)

    def _count_rect(self, lo, hi, budget) -> int:
        total = 0
        for blo, bhi in self.boxes:
            a = tuple(max(x, y) for x, y in zip(lo, blo))
            b = tuple(min(x, y) for x, y in zip(hi, bhi))
            if all(x <= y for x, y in zip(a, b)):
                total += self.base.count_rect(a, b, budget)
        return total

    def iter_shell(self, m):
        pts = []
        for blo, bhi in self.boxes:
            if max(bhi) < m or max(blo) > m:
                continue
            cands = [range(max(a, 1), min(b, m) + 1) for a, b in zip(blo, bhi)]
            pts.extend(v for v in _shell_points([list(c) for c in cands], m) if self.base.contains(v))
        return iter(sorted(pts))

    def to_json(self) -> dict:
        return {"kind": "union_boxes", "base": self.base.to_json(),
                "boxes": [[list(a), list(b)] for a, b in self.boxes]}


def _rects_meet(r1: Box, r2: Box) -> bool:
    return all(max(a1, a2) <= min(b1, b2) for a1, b1, a2, b2 in zip(r1[0], r1[1], r2[0], r2[1]))


class NormWindow(DigitSet):
    """``{v in base : lo <= ||v||_inf <= hi, min_j v_j >= floor}``."""

    def __init__(self, base: DigitSet, lo: int, hi: int, floor_: int = 1):
        self.base, self.d = base, base.d
        self.lo, self.hi, self.floor = max(1, lo), hi, max(1, floor_)

    def contains(self, v) -> bool:
        return (self.lo <= max(v) <= self.hi and min(v) >= self.floor and self.base.contains(v))

    def max_norm(self):
        return max(self.hi, 0) if self.hi >= self.lo else 0

    def iter_shell(self, m):
        if not (self.lo <= m <= self.hi):
            return iter(())
        if isinstance(self.base, (Seq1D, DiagonalSet)):
            return (v for v in self.base.iter_shell(m) if min(v) >= self.floor)
        cands = [[c for c in self.base._coord_candidates(j, m) if c >= self.floor]
                 for j in range(self.d)]
        return (v for v in _shell_points(cands, m) if self.base.contains(v))

    def iter_members(self, lo, hi, budget=None):
        lo, hi = max(lo, self.lo), min(hi, self.hi)
        if isinstance(self.base, (Seq1D, DiagonalSet)):
            return (v for v in self.base.iter_members(lo, hi, budget) if min(v) >= self.floor)
        return super().iter_members(lo, hi, budget)

    def _count_rect(self, lo, hi, budget) -> int:
        a = tuple(max(x, self.floor) for x in lo)

        def upto(h):
            b = tuple(min(x, h) for x in hi)
            if any(x > y for x, y in zip(a, b)):
                return 0
            return self.base.count_rect(a, b, budget)

        if self.hi < self.lo:
            return 0
        return upto(self.hi) - upto(self.lo - 1)

    def to_json(self) -> dict:
        return {"kind": "window", "base": self.base.to_json(), "lo": self.lo,
                "hi": self.hi, "floor": self.floor}


class FilteredSet(DigitSet):
    """``base ∩ {v : predicate(v)}`` for an arbitrary Python predicate (enumeration only)."""

    def __init__(self, base: DigitSet, predicate: Callable[[DigitVector], bool], label: str = "filter"):
        self.base, self.d, self.predicate, self.label = base, base.d, predicate, label

    def contains(self, v) -> bool:
        return self.base.contains(v) and self.predicate(tuple(v))

    def max_norm(self):
        return self.base.max_norm()

    def _coord_candidates(self, j, m):
        return self.base._coord_candidates(j, m)

    def to_json(self) -> dict:
        return {"kind": "filtered", "label": self.label, "base": self.base.to_json()}


class DifferenceSet(DigitSet):
    """``base \\ removed``; counting assumes ``removed`` is a subset of ``base``."""

    def __init__(self, base: DigitSet, removed: DigitSet):
        if base.d != removed.d:
            raise InvalidInput("sets have different dimensions")
        self.base, self.removed, self.d = base, removed, base.d

    def contains(self, v) -> bool:
        return self.base.contains(v) and not self.removed.contains(v)

    def max_norm(self):
        return self.base.max_norm()

    def _coord_candidates(self, j, m):
        return self.base._coord_candidates(j, m)

    def _count_rect(self, lo, hi, budget) -> int:
        return self.base.count_rect(lo, hi, budget) - self.removed.count_rect(lo, hi, budget)

    def to_json(self) -> dict:
        return {"kind": "difference", "base": self.base.to_json(), "removed": self.removed.to_json()}


# ------------------------------------------------------------------------- registry
def set_from_json(data: dict) -> DigitSet:
    """Build a set from its JSON/TOML registry description."""
    try:
        kind = data["kind"]
        if kind == "full":
            return full(int(data["d"]))
        if kind == "product":
            return ProductSet([set_from_json(f) for f in data["factors"]])
        if kind == "balanced_band":
            return BalancedSet(int(data["K"]), int(data["d"]))
        if kind == "squares":
            base = squares()
            d = int(data.get("d", 1))
            return base if d == 1 else DiagonalSet(base, d)
        if kind == "explicit":
            return ExplicitSet(data["points"], data.get("d"))
        if kind == "union_boxes":
            return RectRestricted(set_from_json(data["base"]),
                                  [(tuple(a), tuple(b)) for a, b in data["boxes"]])
        if kind == "sequence":
            return Seq1D(int(data["c"]), int(data["p"]), int(data["b"]), int(data["m0"]))
        if kind == "tail":
            return tail_product(int(data.get("d", 1)), int(data["N"]))
        if kind == "diagonal":
            return DiagonalSet(set_from_json(data.get("base", {"kind": "full", "d": 1})),
                               int(data["d"]))
        if kind == "window":
            return NormWindow(set_from_json(data["base"]), int(data["lo"]), int(data["hi"]),
                              int(data.get("floor", 1)))
        if kind == "difference":
            return DifferenceSet(set_from_json(data["base"]), set_from_json(data["removed"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"bad digit-set description {data!r}: {exc}") from None
    raise InvalidInput(f"unknown digit-set kind {data.get('kind')!r}")


def _params(text: str, names: Sequence[str]) -> dict:
    out = {}
    parts = [p for p in text.split(",") if p]
    for i, part in enumerate(parts):
        if "=" in part:
            k, v = part.split("=", 1)
        elif i < len(names):
            k, v = names[i], part
        else:
            raise InvalidInput(f"cannot parse parameter {part!r}")
        try:
            out[k.strip()] = int(v)
        except ValueError:
            raise InvalidInput(f"parameter {k}={v!r} is not an integer") from None
    missing = [n for n in names if n not in out]
    if missing:
        raise InvalidInput(f"missing parameters {missing}")
    return out


def parse_set(name: str) -> DigitSet:
    """Resolve a registry name such as ``full2``, ``diag3``, ``ck:K=2,d=2``, ``tail1:N=1000``."""
    from .config import load_document

    name = name.strip()
    head, _, rest = name.partition(":")
    if head.startswith("full") and head[4:].isdigit() and not rest:
        return full(int(head[4:]))
    if head.startswith("diag") and head[4:].isdigit() and not rest:
        return diagonal(int(head[4:]))
    if head in ("ck", "band"):
        p = _params(rest, ["K", "d"])
        return BalancedSet(p["K"], p["d"])
    if head == "tail1":
        return tail1(_params(rest, ["N"])["N"])
    if head == "squares1" and not rest:
        return squares()
    if head == "evens1" and not rest:
        return evens()
    if head == "odds1" and not rest:
        return progression(2, 1)
    if head in ("explicit", "union_boxes") and rest:
        data = load_document(rest)
        if head == "explicit" and "kind" not in data:
            data = {"kind": "explicit", **data}
        return set_from_json(data)
    if head == "file" and rest:
        return set_from_json(load_document(rest))
    raise InvalidInput(f"unknown digit set {name!r}")


# ------------------------------------------------------------------------ densities
@dataclass
class DensityRow:
    N: int
    count: int
    denom: int
    ratio: Fraction
    running_max: Fraction


@dataclass
class DensityReport:
    kind: str
    rows: list[DensityRow]
    witness: tuple[int, ...] | None = None
    notes: dict = field(default_factory=dict)

    COLUMNS = ("N", "count", "denom", "ratio", "running_max")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([r.N, r.count, r.denom, format_rational(r.ratio), format_rational(r.running_max)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "witness": list(self.witness) if self.witness is not None else None,
            "rows": [{"N": r.N, "count": r.count, "denom": r.denom,
                      "ratio": format_rational(r.ratio),
                      "running_max": format_rational(r.running_max)} for r in self.rows],
            "notes": self.notes,
        }

    @property
    def last(self) -> DensityRow:
        return self.rows[-1]


def _report(kind, triples) -> DensityReport:
    rows = []
    best = Fraction(0)
    for N, count, denom in triples:
        ratio = Fraction(count, denom) if denom else Fraction(0)
        best = max(best, ratio)
        rows.append(DensityRow(N, count, denom, ratio, best))
    return DensityReport(kind, rows)


def _check_horizons(horizons):
    hs = [int(h) for h in horizons]
    if not hs or any(h < 1 for h in hs):
        raise InvalidInput("horizons must be positive integers")
    return hs


def upper_density(S: DigitSet, horizons: Iterable[int], budget: int | None = None) -> DensityReport:
    """``|S ∩ Q_N| / N^d`` at each horizon, with the running maximum."""
    hs = _check_horizons(horizons)
    return _report("upper", ((N, S.count_cube(N, budget), N ** S.d) for N in hs))


def relative_density(A: DigitSet, S: DigitSet, horizons: Iterable[int],
                     budget: int | None = None, check_members: int = 1000) -> DensityReport:
    """``|A ∩ Q_N| / |S ∩ Q_N|``; inclusion ``A ⊆ S`` is checked on the first members of A."""
    if A.d != S.d:
        raise InvalidInput("sets have different dimensions")
    hs = _check_horizons(horizons)
    for i, v in enumerate(A.iter_members(1, max(hs), budget)):
        if i >= check_members:
            break
        if not S.contains(v):
            raise InvalidInput(f"{v} lies in A but not in S")
    return _report("relative", ((N, A.count_cube(N, budget), S.count_cube(N, budget)) for N in hs))


def banach_density(S: DigitSet, N: int, translates: str | Iterable[Sequence[int]] = "exhaustive",
                   bound: int = 0, budget: int | None = None) -> DensityReport:
    """Best ``|S ∩ Q_N(v)| / N^d`` over a family of translates.

    ``translates`` is ``"exhaustive"`` (every v in ``[0, bound]^d``,
    lexicographic) or an explicit iterable of translates. The lexicographically
    first maximizer is reported as the witness. This is a lower bound for the
    true sup over all translates.
    """
    if N < 1:
        raise InvalidInput("box side must be positive")
    if translates == "exhaustive":
        if bound < 0:
            raise InvalidInput("translate bound must be non-negative")
        cand: Iterable = itertools.product(range(bound + 1), repeat=S.d)
    else:
        cand = translates
    best, witness, checked = -1, None, 0
    for v in cand:
        v = tuple(int(x) for x in v)
        c = S.count_box(v, N, budget)
        checked += 1
        if c > best:
            best, witness = c, v
    if witness is None:
        raise InvalidInput("no translates supplied")
    rep = _report("banach", [(N, best, N ** S.d)])
    rep.witness = witness
    rep.notes = {"translates_checked": checked}
    return rep


def balanced_extract(delta, d: int) -> int:
    """Smallest K with ``1 - (1 - 1/K)^(d-1) < delta / 4``."""
    delta = as_rational(str(delta) if isinstance(delta, float) else delta)
    if not (0 < delta <= 1):
        raise InvalidInput("density must lie in (0, 1]")
    if d < 1:
        raise InvalidInput("dimension must be positive")
    target = delta / 4

    def ok(K):
        return 1 - (1 - Fraction(1, K)) ** (d - 1) < target

    if ok(1):
        return 1
    # (1 - 1/K)^(d-1) >= 1 - (d-1)/K, so K = 4(d-1)/delta + 1 always works
    lo, hi = 1, int(4 * (d - 1) / delta) + 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def scale_ratio(S: DigitSet, t, L, n: int, budget: int | None = None) -> dict:
    """``|S ∩ Q_{t^n}| / |S ∩ Q_{L t^n}|`` next to the model prediction ``L^(-d/alpha)``."""
    t, L = as_rational(t), as_rational(L)
    a = S.count_cube(floor(t ** n), budget)
    b = S.count_cube(floor(L * t ** n), budget)
    out = {"n": n, "small": a, "large": b, "ratio": Fraction(a, b) if b else None}
    if S.declared_alpha:
        out["model"] = float(L) ** (-S.d / S.declared_alpha)
    return out


def validate_declared_alpha(S: DigitSet, N: int, factor: float = 4.0, budget: int | None = None) -> bool:
    """Ratio test: ``|S ∩ Q_N|`` within ``factor`` of ``N^(d/alpha) / log(N)^beta``."""
    import math

    if S.declared_alpha is None:
        raise InvalidInput("set has no declared growth exponent")
    count = S.count_cube(N, budget)
    model = N ** (S.d / S.declared_alpha) / math.log(N) ** S.declared_beta
    return model / factor <= count <= model * factor


# ---------------------------------------------------------------- density reduction
@dataclass
class ReductionBox:
    j: int
    k: int
    v: tuple[int, ...]
    side: int
    count: int
    ratio: Fraction
    threshold: Fraction
    witness_R: int
    witness_u: tuple[int, ...]
    witness_ratio: Fraction

    @property
    def rect(self) -> Box:
        return (tuple(x + 1 for x in self.v), tuple(x + self.side for x in self.v))


@dataclass
class DensityReductionResult:
    alpha: Fraction
    alpha_estimated: bool
    boxes: list[ReductionBox]
    reduced: RectRestricted
    skipped: list[tuple[int, str]]

    def decay_bound(self, j: int) -> Fraction:
        """``2^d j 10^(-dj)``."""
        d = self.reduced.d
        return Fraction(2 ** d * j, 10 ** (d * j))

    def horizon_checks(self, budget: int | None = None) -> list[tuple[int, int, Fraction, Fraction]]:
        """For horizons at and around each box: ``(N, j(N), ratio, bound)``."""
        d = self.reduced.d
        out = []
        for b in self.boxes:
            for N in (max(b.v) + 1, max(b.v) + b.side, 2 * (max(b.v) + b.side)):
                j = max(x.j for x in self.boxes if all(v + 1 <= N for v in x.v))
                ratio = Fraction(self.reduced.count_cube(N, budget), N ** d)
                out.append((N, j, ratio, self.decay_bound(j)))
        return out


def density_reduction(S: DigitSet, stages: int, alpha=None,
                      witness: Callable[[int, int], Sequence[int]] | None = None,
                      search_bound: int = 0, k_max: int = 100_000,
                      candidate_budget: int = 100_000, budget: int | None = None) -> DensityReductionResult:
    """Extract boxes ``B_j = v_j + [1, N_j]^d`` pushed off to infinity carrying density near ``alpha``.

    Stage parameters are ``eps_k = 1/k``, ``N_k = k``, ``M_k = k^2`` and a
    witness cube of side ``R_k = k^4`` at translate ``u_k``. The witness cube is
    cut into subcubes of side ``N_k``; among those lying in ``{min v >= M_k}``
    the first (lexicographic in the subcube index) that also lies in
    ``{min v >= 10^j N_k}``, avoids earlier boxes and has ratio at least
    ``alpha - 2 eps_k - 4d/k^2`` becomes ``B_j``.

    ``witness(k, R)`` returns ``u_k``; otherwise translates in
    ``[0, search_bound]^d`` are searched. ``alpha`` defaults to the best ratio
    found at the first stage (flagged as an estimate).
    """
    if stages < 1:
        raise InvalidInput("need at least one stage")
    d = S.d

    def find_witness(k, R):
        if witness is not None:
            u = tuple(int(x) for x in witness(k, R))
            return u, Fraction(S.count_box(u, R, budget), R ** d)
        rep = banach_density(S, R, "exhaustive", search_bound, budget)
        return rep.witness, rep.last.ratio

    estimated = alpha is None
    if not estimated:
        alpha = as_rational(alpha)
    boxes: list[ReductionBox] = []
    skipped: list[tuple[int, str]] = []
    k = 0
    for j in range(1, stages + 1):
        placed = False
        while not placed:
            k += 1
            if k > k_max:
                raise BudgetExceeded(f"no admissible stage up to k={k_max}",
                                     partial=(boxes, skipped))
            N, M, R = k, k * k, k ** 4
            u, wratio = find_witness(k, R)
            if alpha is None:
                alpha = wratio
            eps = Fraction(1, k)
            if wratio <= alpha - eps:
                skipped.append((k, "witness ratio too small"))
                continue
            q = R // N
            far = 10 ** j * N
            lows = [max(0, _ceil_div(M - ui, N), _ceil_div(far - ui, N)) for ui in u]
            if any(lw > q - 1 for lw in lows):
                skipped.append((k, "witness cube too small for the far condition"))
                continue
            threshold = alpha - 2 * eps - Fraction(4 * d, k * k)
            tried = 0
            for m in itertools.product(*[range(lw, q) for lw in lows]):
                tried += 1
                if tried > candidate_budget:
                    break
                v = tuple(ui + N * mi for ui, mi in zip(u, m))
                rect = (tuple(x + 1 for x in v), tuple(x + N for x in v))
                if any(_rects_meet(rect, b.rect) for b in boxes):
                    continue
                count = S.count_box(v, N, budget)
                ratio = Fraction(count, N ** d)
                if ratio >= threshold:
                    boxes.append(ReductionBox(j, k, v, N, count, ratio, threshold, R, u, wratio))
                    placed = True
                    break
            if not placed:
                skipped.append((k, "no admissible subcube"))
    reduced = RectRestricted(S, [b.rect for b in boxes])
    return DensityReductionResult(alpha, estimated, boxes, reduced, skipped)


# ----------------------------------------------------------------- configurations
Polynomial = dict  # exponent tuple -> integer coefficient


def poly_eval(poly, m: Sequence[int]) -> int:
    if callable(poly):
        return int(poly(*m))
    total = 0
    for exps, coeff in poly.items():
        term = int(coeff)
        for x, e in zip(m, exps):
            term *= x ** e
        total += term
    return total


def find_configuration(D: DigitSet, F: Sequence[Sequence[int]], P: Sequence, n_max: int,
                       u_box: Box) -> tuple[int, tuple[int, ...]] | None:
    """First ``(n, u)`` (n ascending, u lexicographic in ``u_box``) with ``u + P(n f) in D`` for all f in F.

    ``P`` lists one integer polynomial per output coordinate, each either a
    callable or a dict ``{exponent tuple: coefficient}``; ``P(0)`` must be 0.
    """
    if not D.is_finite:
        raise InvalidInput("configuration search needs a finite digit set")
    if len(P) != D.d:
        raise InvalidInput("P must have one polynomial per coordinate")
    F = [tuple(int(x) for x in f) for f in F]
    if not F:
        raise InvalidInput("pattern F is empty")
    r = len(F[0])
    if any(len(f) != r for f in F):
        raise InvalidInput("pattern points have different lengths")
    if any(poly_eval(p, (0,) * r) != 0 for p in P):
        raise InvalidInput("P(0) must be 0")
    lo, hi = u_box
    if len(lo) != D.d or len(hi) != D.d:
        raise InvalidInput("u_box has the wrong dimension")
    for n in range(1, n_max + 1):
        shifts = [tuple(poly_eval(p, tuple(n * x for x in f)) for p in P) for f in F]
        for u in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
            if all(D.contains(tuple(a + s for a, s in zip(u, sh))) for sh in shifts):
                return n, u
    return None
