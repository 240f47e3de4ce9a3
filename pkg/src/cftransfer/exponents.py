"""Singular-value potential, the series Phi_S and zeta_S, and their critical exponents.

For a in N^d sorted as a_(1) <= ... <= a_(d) and k < s <= k+1,

    phi^s(a) = a_(1)^-2 ... a_(k)^-2 * a_(k+1)^(-2(s-k)).

``Phi_S(s) = sum_{a in S} phi^s(a)`` and ``zeta_S(sigma) = sum_{a in S} prod a_j^-sigma_j``.
Every numeric value is an ``mpmath.iv`` enclosure; exponents themselves are
kept as exact rationals so convergence verdicts are exact comparisons.
"""

from __future__ import annotations

import itertools
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import Sequence

from mpmath import iv, mpf

from .cf_core import as_rational, format_rational
from .config import SCHEMA_VERSION, RunConfig
from .digitset import (
    BalancedSet,
    DiagonalSet,
    DigitSet,
    ExplicitSet,
    ProductSet,
    Seq1D,
)
from .errors import BudgetExceeded, InvalidInput
from .numerics import INF, certainly_lt, iv_json, ivprec, ivq, span, to_float
from .numerics import hi as _hi
from .numerics import lo as _lo

ZERO = iv.mpf(0)


def as_exponent(s) -> Fraction:
    """Exponents are exact rationals; floats are read through their decimal repr."""
    if isinstance(s, float):
        return Fraction(repr(s))
    return as_rational(s)


# ----------------------------------------------------------------------------- phi^s
def split_exponent(s: Fraction) -> tuple[int, Fraction]:
    """``(k, s - k)`` with ``k < s <= k+1``."""
    k = ceil(s) - 1
    return k, s - k


def phi_s(a: Sequence[int], s) -> "iv.mpf":
    """Enclosure of ``phi^s(a)``."""
    s = as_exponent(s)
    a = sorted(int(x) for x in a)
    d = len(a)
    if d == 0 or any(x < 1 for x in a):
        raise InvalidInput("phi^s needs a non-empty vector of positive integers")
    if not (0 < s <= d):
        raise InvalidInput(f"s={s} is outside (0, {d}]")
    k, frac = split_exponent(s)
    head = Fraction(1)
    for x in a[:k]:
        head /= x * x
    return ivq(head) * ivq(a[k]) ** (-2 * ivq(frac))


def sigma_tilde(s, d: int) -> tuple[Fraction, ...]:
    """``(2, ..., 2, 2(s-k), 0, ..., 0)``: the exponent profile matching phi^s on sorted vectors."""
    s = as_exponent(s)
    k, frac = split_exponent(s)
    return (Fraction(2),) * k + (2 * frac,) + (Fraction(0),) * (d - k - 1)


def monomial(a: Sequence[int], sigma: Sequence) -> "iv.mpf":
    """Enclosure of ``prod a_j^-sigma_j``."""
    out = iv.mpf(1)
    for x, e in zip(a, sigma):
        e = as_exponent(e)
        if e:
            out *= ivq(int(x)) ** (-ivq(e))
    return out


def rearrangement_check(x: Sequence, w: Sequence, perm: Sequence[int]) -> bool:
    """``sum w_perm(i) x_i >= sum w_i x_i`` for x nondecreasing and w nonincreasing."""
    if not (len(x) == len(w) == len(perm)):
        raise InvalidInput("length mismatch")
    if sorted(perm) != list(range(len(x))):
        raise InvalidInput("not a permutation")
    x = [as_exponent(v) for v in x]
    w = [as_exponent(v) for v in w]
    if any(x[i] > x[i + 1] for i in range(len(x) - 1)) or any(w[i] < w[i + 1] for i in range(len(w) - 1)):
        raise InvalidInput("x must be nondecreasing and w nonincreasing")
    return sum(w[perm[i]] * x[i] for i in range(len(x))) >= sum(wi * xi for wi, xi in zip(w, x))


# ------------------------------------------------------------------- enclosures
@dataclass
class SeriesEnclosure:
    partial: "iv.mpf"
    tail_lower: mpf
    tail_upper: mpf
    radius: int
    tail_method: str
    rigorous: bool
    converges: bool | None

    @property
    def total(self) -> "iv.mpf":
        if self.tail_lower == INF:
            return iv.mpf([INF, INF])
        return self.partial + iv.mpf([self.tail_lower, self.tail_upper])

    def below(self, threshold) -> bool | None:
        """Certified verdict on ``total < threshold`` (None if undecided)."""
        if self.converges is False:
            return False
        return certainly_lt(self.total, ivq(threshold))

    def to_json(self) -> dict:
        return {
            "partial_sum": iv_json(self.partial),
            "tail_lower": str(self.tail_lower),
            "tail_upper": str(self.tail_upper),
            "truncation_radius": self.radius,
            "tail_method": self.tail_method,
            "rigorous": self.rigorous,
            "converges": self.converges,
        }


@dataclass
class _Tail:
    lo: "iv.mpf"  # enclosure of a lower bound
    hi: "iv.mpf"  # enclosure of an upper bound
    converges: bool | None
    method: str
    rigorous: bool = True


DIVERGENT = _Tail(iv.mpf([INF, INF]), iv.mpf([INF, INF]), False, "divergence")


def _series(partial, tail: _Tail, R: int) -> SeriesEnclosure:
    if tail.converges is False:
        return SeriesEnclosure(partial, INF, INF, R, tail.method, tail.rigorous, False)
    return SeriesEnclosure(partial, _lo(tail.lo), _hi(tail.hi), R, tail.method, tail.rigorous, tail.converges)


# ------------------------------------------------------------- one-dimensional sums
def _power_partial_1d(S: DigitSet, sigma: Fraction, R: int, budget: int | None) -> "iv.mpf":
    e = -ivq(sigma)
    total = iv.mpf(0)
    for (a,) in S.iter_members(1, R, budget):
        total += ivq(a) ** e
    return total


def _seq_tail(S: Seq1D, sigma: Fraction, R: int) -> _Tail:
    """Bounds for ``sum_{m >= m1} g(m)^-sigma`` where ``g(m1)`` is the first member above R.

    ``f(m) = g(m)^-sigma`` is convex and decreasing, so
    ``int_{m1} f + f(m1)/2 <= sum <= int_{m1 - 1/2} f``.
    """
    if S.p * sigma <= 1:
        return DIVERGENT
    m1 = S.first_index_above(R)
    s = ivq(sigma)
    c, b, p = ivq(S.c), ivq(S.b), S.p

    def f(m):
        return (c * ivq(m) ** p + b) ** (-s)

    def integral(x):
        # int_x^inf (c m^p + b)^-s dm, exact for p == 1 or b == 0
        if p == 1:
            return (c * x + b) ** (1 - s) / (c * (s - 1))
        return c ** (-s) * x ** (1 - p * s) / (p * s - 1)

    x1 = ivq(m1)
    lo = integral(x1) + f(m1) / 2
    half = x1 - iv.mpf(0.5)
    if _lo(c * half ** p + b) > 0:
        hi = integral(half)
    else:
        hi = integral(x1) + f(m1)
    return _Tail(lo, hi, True, "convexity-integral")


def _tail_1d(S: DigitSet, sigma: Fraction, R: int, budget) -> _Tail:
    if isinstance(S, Seq1D):
        return _seq_tail(S, sigma, R)
    top = S.max_norm()
    if top is not None:
        rest = _power_partial_1d(S, sigma, top, budget) - _power_partial_1d(S, sigma, min(R, top), budget)
        rest = iv.mpf([max(_lo(rest), 0), max(_hi(rest), 0)])
        return _Tail(rest, rest, True, "finite")
    return _declared_tail(S, None, R, sigma=sigma)


def _declared_tail(S: DigitSet, s: Fraction | None, R: int, sigma: Fraction | None = None) -> _Tail:
    """Heuristic tail for a set declared to have ``|S ∩ Q_N| ~ N^(d/alpha)``; never rigorous.

    Members of norm m are modeled with density ``(d/alpha) m^(d/alpha - 1)``
    and terms of size ``m^-(2s)`` (or ``m^-sum(sigma)`` for zeta).
    """
    if S.declared_alpha is None:
        return _Tail(ZERO, iv.mpf([INF, INF]), None, "none", False)
    growth = Fraction(repr(S.d / S.declared_alpha))
    decay = 2 * s if s is not None else sigma
    if decay <= growth:
        return _Tail(iv.mpf([INF, INF]), iv.mpf([INF, INF]), False, "declared-alpha", False)
    g, e = ivq(growth), ivq(decay)
    est = g * ivq(R) ** (g - e) / (e - g)
    return _Tail(est, est, True, "declared-alpha", False)


def _fmax(x, y):
    return iv.mpf([max(_lo(x), _lo(y)), max(_hi(x), _hi(y))])


# ---------------------------------------------------------------------- phi sums
def _finite_phi(S: DigitSet, s: Fraction, R: int, budget):
    top = S.max_norm()
    part = iv.mpf(0)
    rest = iv.mpf(0)
    for v in S.iter_members(1, top, budget):
        if max(v) <= R:
            part += phi_s(v, s)
        else:
            rest += phi_s(v, s)
    return part, _Tail(rest, rest, True, "finite")


def _product_factor_data(S: ProductSet, R: int, budget):
    """Per factor: sorted values up to R and prefix sums of a^-2."""
    data = []
    for f in S.factors:
        vals = [a for (a,) in f.iter_members(1, R, budget)]
        pref = [iv.mpf(0)]
        for a in vals:
            pref.append(pref[-1] + ivq(Fraction(1, a * a)))
        data.append((vals, pref))
    return data


def _product_phi(S: ProductSet, s: Fraction, R: int, budget, need_partial: bool):
    d = S.d
    k, frac = split_exponent(s)
    if any(f.max_norm() == 0 for f in S.factors):
        return iv.mpf(0), _Tail(ZERO, ZERO, True, "empty")
    if S.is_finite:
        return _finite_phi(S, s, R, budget) if need_partial else (None, _Tail(ZERO, ZERO, True, "finite"))
    if k < d - 1:
        # an infinite factor can carry the maximum without changing phi^s
        return None, DIVERGENT
    tau = 2 * frac
    tails = [_tail_1d(f, tau, R, budget) for f in S.factors]
    if any(t.converges is False for t in tails):
        return None, DIVERGENT
    if any(t.converges is None for t in tails):
        return None, _Tail(ZERO, iv.mpf([INF, INF]), None, "none", False)
    rigorous = all(t.rigorous for t in tails)
    # Z_i(2) = sum over the whole factor of a^-2, enclosed
    sq = [_tail_1d(f, Fraction(2), R, budget) for f in S.factors]
    data = _product_factor_data(S, R, budget)
    P2 = [pref[-1] for _, pref in data]
    Z2 = [p + span(t.lo, t.hi) for p, t in zip(P2, sq)]
    if d == 2:
        lo = tails[0].lo * P2[1] + tails[1].lo * P2[0]
        both = ivq(R) ** ivq(tau - 2) * tails[0].hi * tails[1].hi
        hi = tails[0].hi * P2[1] + tails[1].hi * P2[0] + both
        tail = _Tail(_fmax(lo, ZERO), hi, True, "product-split", rigorous)
    else:
        hi = iv.mpf(0)
        for j in range(d):
            term = tails[j].hi
            for i in range(d):
                if i != j:
                    term *= Z2[i]
            hi += term
        tail = _Tail(ZERO, hi, True, "product-dominated", rigorous)
    if not need_partial:
        return None, tail
    if d == 2:
        e = -ivq(tau)
        (v1, p1), (v2, p2) = data
        part = iv.mpf(0)
        for a2 in v2:
            part += ivq(a2) ** e * p1[bisect_left(v1, a2)]
        for a1 in v1:
            part += ivq(a1) ** e * p2[bisect_left(v2, a1)]
        common = sorted(set(v1) & set(v2))
        for a in common:
            part += ivq(a) ** (e - 2)
        return part, tail
    part = iv.mpf(0)
    for v in itertools.product(*[vals for vals, _ in data]):
        part += phi_s(v, s)
    return part, tail


def _balanced_phi(S: BalancedSet, s: Fraction, R: int, budget, need_partial: bool):
    """Shell bounds for C_K: members of norm m have every coordinate in [m/K, m]."""
    d, K = S.d, S.K
    if K == 1:
        return _reduce_diagonal(DiagonalSet(Seq1D(), d), s, R, budget, need_partial)
    e = ivq(d - 2 * s)  # exponent of x in the shell-sum density
    if 2 * s <= d:
        return None, _Tail(iv.mpf([INF, INF]), iv.mpf([INF, INF]), False, "balanced-shells")
    hi = ivq(d) * ivq(K) ** ivq(2 * s) * ivq(R) ** e / (-e)
    lo = ivq(1 - Fraction(1, K)) ** (d - 1) * ivq(R + 1) ** e / (-e)
    tail = _Tail(lo, hi, True, "balanced-shells")
    if not need_partial:
        return None, tail
    part = iv.mpf(0)
    for v in S.iter_members(1, R, budget):
        part += phi_s(v, s)
    return part, tail


def _reduce_diagonal(S: DiagonalSet, s: Fraction, R: int, budget, need_partial: bool):
    # phi^s((a, ..., a)) = a^(-2s)
    tail = _tail_1d(S.base, 2 * s, R, budget)
    if tail.converges is False or not need_partial:
        return None, tail
    return _power_partial_1d(S.base, 2 * s, R, budget), tail


def _phi_parts(S: DigitSet, s: Fraction, R: int, budget, need_partial: bool = True):
    if not (0 < s <= S.d):
        raise InvalidInput(f"s={s} is outside (0, {S.d}]")
    if S.d == 1:
        tail = _tail_1d(S, 2 * s, R, budget)
        if tail.converges is False or not need_partial:
            return None, tail
        return _power_partial_1d(S, 2 * s, R, budget), tail
    if isinstance(S, DiagonalSet):
        return _reduce_diagonal(S, s, R, budget, need_partial)
    if isinstance(S, ProductSet):
        return _product_phi(S, s, R, budget, need_partial)
    if isinstance(S, BalancedSet):
        return _balanced_phi(S, s, R, budget, need_partial)
    if S.is_finite:
        return _finite_phi(S, s, R, budget)
    tail = _declared_tail(S, s, R)
    if tail.converges is False or not need_partial:
        return None, tail
    part = iv.mpf(0)
    for v in S.iter_members(1, R, budget):
        part += phi_s(v, s)
    return part, tail


def phi_sum(S: DigitSet, s, R: int, budget: int | None = None) -> SeriesEnclosure:
    """Enclosure of ``Phi_S(s)``: exact partial sum over ``||a||_inf <= R`` plus a tail bound."""
    s = as_exponent(s)
    part, tail = _phi_parts(S, s, int(R), budget)
    return _series(part if part is not None else iv.mpf([0, 0]), tail, int(R))


def phi_converges(S: DigitSet, s) -> tuple[bool | None, str, bool]:
    """Convergence verdict for ``Phi_S(s)`` from the tail method alone."""
    s = as_exponent(s)
    _, tail = _phi_parts(S, s, 1, None, need_partial=False)
    return tail.converges, tail.method, tail.rigorous


# --------------------------------------------------------------------- zeta sums
def _as_sigma(S: DigitSet, sigma) -> tuple[Fraction, ...]:
    sig = tuple(as_exponent(x) for x in sigma)
    if len(sig) != S.d:
        raise InvalidInput(f"sigma needs {S.d} entries")
    if any(x <= 0 for x in sig):
        raise InvalidInput("every sigma_j must be positive")
    return sig


def _zeta_parts(S: DigitSet, sig: tuple[Fraction, ...], R: int, budget, need_partial=True):
    if S.d == 1:
        tail = _tail_1d(S, sig[0], R, budget)
        if tail.converges is False or not need_partial:
            return None, tail
        return _power_partial_1d(S, sig[0], R, budget), tail
    if isinstance(S, DiagonalSet):
        tot = sum(sig)
        tail = _tail_1d(S.base, tot, R, budget)
        if tail.converges is False or not need_partial:
            return None, tail
        return _power_partial_1d(S.base, tot, R, budget), tail
    if isinstance(S, ProductSet):
        tails = [_tail_1d(f, x, R, budget) for f, x in zip(S.factors, sig)]
        if any(f.max_norm() == 0 for f in S.factors):
            return iv.mpf(0), _Tail(ZERO, ZERO, True, "empty")
        if any(t.converges is False for t in tails):
            return None, DIVERGENT
        if any(t.converges is None for t in tails):
            return None, _Tail(ZERO, iv.mpf([INF, INF]), None, "none", False)
        parts = [_power_partial_1d(f, x, R, budget) for f, x in zip(S.factors, sig)]
        prod_p = iv.mpf(1)
        prod_lo = iv.mpf(1)
        prod_hi = iv.mpf(1)
        for p, t in zip(parts, tails):
            prod_p *= p
            prod_lo *= p + t.lo
            prod_hi *= p + t.hi
        tail = _Tail(_fmax(prod_lo - prod_p, ZERO), prod_hi - prod_p, True, "product",
                     all(t.rigorous for t in tails))
        return prod_p, tail
    if isinstance(S, BalancedSet) and S.K > 1:
        d, K, tot = S.d, S.K, sum(sig)
        if tot <= d:
            return None, _Tail(iv.mpf([INF, INF]), iv.mpf([INF, INF]), False, "balanced-shells")
        e = ivq(d - tot)
        hi = ivq(d) * ivq(K) ** ivq(tot) * ivq(R) ** e / (-e)
        lo = ivq(1 - Fraction(1, K)) ** (d - 1) * ivq(R + 1) ** e / (-e)
        tail = _Tail(lo, hi, True, "balanced-shells")
    elif isinstance(S, BalancedSet):
        return _zeta_parts(DiagonalSet(Seq1D(), S.d), sig, R, budget, need_partial)
    elif S.is_finite:
        part = iv.mpf(0)
        rest = iv.mpf(0)
        for v in S.iter_members(1, S.max_norm(), budget):
            if max(v) <= R:
                part += monomial(v, sig)
            else:
                rest += monomial(v, sig)
        return part, _Tail(rest, rest, True, "finite")
    else:
        tail = _declared_tail(S, None, R, sigma=sum(sig))
    if tail.converges is False or not need_partial:
        return None, tail
    part = iv.mpf(0)
    for v in S.iter_members(1, R, budget):
        part += monomial(v, sig)
    return part, tail


def zeta_sum(S: DigitSet, sigma: Sequence, R: int, budget: int | None = None) -> SeriesEnclosure:
    """Enclosure of ``zeta_S(sigma)``."""
    sig = _as_sigma(S, sigma)
    part, tail = _zeta_parts(S, sig, int(R), budget)
    return _series(part if part is not None else iv.mpf([0, 0]), tail, int(R))


def zeta_converges(S: DigitSet, sigma: Sequence) -> tuple[bool | None, str, bool]:
    sig = _as_sigma(S, sigma)
    _, tail = _zeta_parts(S, sig, 1, None, need_partial=False)
    return tail.converges, tail.method, tail.rigorous


# -------------------------------------------------------------------- brackets
@dataclass
class ExponentBracket:
    exponent_kind: str
    lo: Fraction
    hi: Fraction
    verdict_lo: str
    verdict_hi: str
    tol: Fraction
    truncation_radius: int
    tail_method: str
    rigorous: bool
    status: str = "bracket"  # bracket | no_threshold | below_domain | budget | undecided
    two_sided: bool = True
    notes: dict = field(default_factory=dict)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        x = as_exponent(x)
        return self.lo <= x <= self.hi

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "exponent_kind": self.exponent_kind,
            "lo": float(self.lo),
            "hi": float(self.hi),
            "lo_exact": format_rational(self.lo),
            "hi_exact": format_rational(self.hi),
            "verdict_lo": self.verdict_lo,
            "verdict_hi": self.verdict_hi,
            "tol": float(self.tol),
            "truncation_radius": self.truncation_radius,
            "tail_method": self.tail_method,
            "rigorous": self.rigorous,
            "status": self.status,
            "two_sided": self.two_sided,
            "notes": self.notes,
        }


S_LOW = Fraction(1, 1000)


def _bisect(pred, lo: Fraction, hi: Fraction, tol: Fraction):
    """Bisection on a monotone predicate (False below, True above).

    ``pred`` returns True/False or None when undecided. Returns
    ``(lo, hi, status)``.
    """
    while hi - lo > tol:
        mid = (lo + hi) / 2
        v = pred(mid)
        if v is None:
            return lo, hi, "undecided"
        if v:
            hi = mid
        else:
            lo = mid
    return lo, hi, "bracket"


def s_star(S: DigitSet, tol=Fraction(1, 100), config: RunConfig | None = None) -> ExponentBracket:
    """Bracket for ``inf{s > 0 : Phi_S(s) < inf}`` from tail-method convergence verdicts."""
    tol = as_exponent(tol)
    if tol <= 0:
        raise InvalidInput("tolerance must be positive")
    d = Fraction(S.d)
    methods = set()
    rigorous = [True]

    def pred(s):
        conv, method, rig = phi_converges(S, s)
        methods.add(method)
        rigorous[0] &= rig
        return conv

    top, bottom = pred(d), pred(S_LOW)
    if top is False:
        return ExponentBracket("s_star", d, d, "diverges", "diverges", tol, 0,
                               "/".join(sorted(methods)), rigorous[0], "no_threshold")
    if bottom is True:
        return ExponentBracket("s_star", Fraction(0), S_LOW, "converges", "converges", tol, 0,
                               "/".join(sorted(methods)), rigorous[0], "below_domain")
    if top is None or bottom is None:
        return ExponentBracket("s_star", S_LOW, d, "unknown", "unknown", tol, 0,
                               "/".join(sorted(methods)), False, "undecided")
    lo, hi, status = _bisect(pred, S_LOW, d, tol)
    return ExponentBracket("s_star", lo, hi, "diverges", "converges", tol, 0,
                           "/".join(sorted(methods)), rigorous[0], status)


def _phi_below_one(S, s, cfg: RunConfig, state):
    """Decide ``Phi_S(s) < 1``, doubling the radius and then the precision when undecided."""
    R = cfg.initial_radius
    bits = cfg.precision_bits
    while True:
        with ivprec(bits):
            enc = phi_sum(S, s, R, cfg.budget)
            verdict = enc.below(1)
        state["radius"] = max(state["radius"], R)
        state["methods"].add(enc.tail_method)
        state["rigorous"] &= enc.rigorous
        if verdict is not None:
            return verdict
        if R < cfg.radius_cap:
            R = min(2 * R, cfg.radius_cap)
        elif bits < cfg.max_precision_bits:
            bits *= 2
        else:
            return None


def s_sharp(S: DigitSet, tol=Fraction(1, 100), config: RunConfig | None = None) -> ExponentBracket:
    """Bracket for ``inf{s > 0 : Phi_S(s) < 1}``.

    Each bisection step decides ``Phi < 1`` or ``Phi >= 1`` from a certified
    enclosure. Undecided steps stop the bisection with status ``budget``.
    """
    cfg = config or RunConfig()
    tol = as_exponent(tol)
    if tol <= 0:
        raise InvalidInput("tolerance must be positive")
    d = Fraction(S.d)
    state = {"radius": 0, "methods": set(), "rigorous": True}

    def pred(s):
        try:
            return _phi_below_one(S, s, cfg, state)
        except BudgetExceeded:
            return None

    def result(lo, hi, vlo, vhi, status):
        return ExponentBracket("s_sharp", lo, hi, vlo, vhi, tol, state["radius"],
                               "/".join(sorted(state["methods"])), state["rigorous"], status)

    top = pred(d)
    if top is False:
        return result(d, d, ">=1", ">=1", "no_threshold")
    if top is None:
        return result(S_LOW, d, "unknown", "unknown", "budget")
    bottom = pred(S_LOW)
    if bottom is True:
        return result(Fraction(0), S_LOW, "<1", "<1", "below_domain")
    if bottom is None:
        return result(S_LOW, d, "unknown", "<1", "budget")
    lo, hi, status = _bisect(pred, S_LOW, d, tol)
    return result(lo, hi, ">=1", "<1", "budget" if status == "undecided" else status)


def lambda_trace(S: DigitSet, tol=Fraction(1, 100), search: str = "auto",
                 config: RunConfig | None = None) -> ExponentBracket:
    """Bracket for ``inf{sigma_1 + ... + sigma_d : zeta_S(sigma) < inf}``.

    ``search``: ``"diagonal"`` bisects t with ``sigma = (t/d, ..., t/d)``;
    ``"product"`` adds up per-factor abscissas of a product set;
    ``"coordinate"`` lowers one coordinate at a time from a convergent
    diagonal point and only yields an upper bound; ``"auto"`` picks product
    for product sets and diagonal otherwise.
    """
    tol = as_exponent(tol)
    if tol <= 0:
        raise InvalidInput("tolerance must be positive")
    d = S.d
    top_t = Fraction(2 * d + 4)
    if search == "auto":
        search = "product" if isinstance(S, ProductSet) else "diagonal"
    methods = set()
    rigorous = [True]

    def conv(sig):
        c, m, r = zeta_converges(S, sig)
        methods.add(m)
        rigorous[0] &= r
        return c

    balanced = isinstance(S, (BalancedSet, DiagonalSet)) or d == 1

    if search == "product":
        if not isinstance(S, ProductSet):
            raise InvalidInput("product search needs a product set")
        lo_sum, hi_sum = Fraction(0), Fraction(0)
        for j, f in enumerate(S.factors):
            def pred_j(x, f=f):
                c, m, r = zeta_converges(f, (x,))
                methods.add(m)
                rigorous[0] &= r
                return c
            t_hi = Fraction(d + 2)
            if pred_j(S_LOW):
                lo_j, hi_j = Fraction(0), S_LOW
            elif pred_j(t_hi) is not True:
                return ExponentBracket("lambda", Fraction(0), top_t, "unknown", "unknown", tol, 0,
                                       "/".join(sorted(methods)), rigorous[0], "no_threshold")
            else:
                lo_j, hi_j, status = _bisect(pred_j, S_LOW, t_hi, tol / d)
                if status != "bracket":
                    return ExponentBracket("lambda", Fraction(0), top_t, "unknown", "unknown", tol, 0,
                                           "/".join(sorted(methods)), False, status)
            lo_sum += lo_j
            hi_sum += hi_j
        return ExponentBracket("lambda", lo_sum, hi_sum, "diverges", "converges", tol, 0,
                               "/".join(sorted(methods)), rigorous[0], "bracket", True,
                               {"search": "product"})

    def pred(t):
        return conv((t / d,) * d)

    if pred(S_LOW):
        return ExponentBracket("lambda", Fraction(0), S_LOW, "converges", "converges", tol, 0,
                               "/".join(sorted(methods)), rigorous[0], "below_domain", balanced)
    if pred(top_t) is not True:
        return ExponentBracket("lambda", top_t, top_t, "diverges", "diverges", tol, 0,
                               "/".join(sorted(methods)), rigorous[0], "no_threshold", False)
    lo, hi, status = _bisect(pred, S_LOW, top_t, tol)
    if search == "diagonal":
        return ExponentBracket("lambda", lo, hi, "diverges", "converges", tol, 0,
                               "/".join(sorted(methods)), rigorous[0], status, balanced,
                               {"search": "diagonal"})
    if search != "coordinate":
        raise InvalidInput(f"unknown search {search!r}")
    sig = [hi / d] * d
    for j in range(d):
        def pred_c(x, j=j):
            trial = list(sig)
            trial[j] = x
            return conv(tuple(trial))
        if pred_c(S_LOW):
            sig[j] = S_LOW
            continue
        _, hj, st = _bisect(pred_c, S_LOW, sig[j], tol / d)
        if st == "bracket":
            sig[j] = hj
    upper = sum(sig)
    return ExponentBracket("lambda", Fraction(0), upper, "unknown", "converges", tol, 0,
                           "/".join(sorted(methods)), rigorous[0], "upper_bound", False,
                           {"search": "coordinate", "sigma": [format_rational(x) for x in sig]})


# ------------------------------------------------------------------------ Good
def good_bounds(N: int):
    """``(1/2 + 1/(2 ln(N+2)), 1/2 + ln ln(N-1) / (2 ln(N-1)))`` as enclosures."""
    if isinstance(N, bool) or int(N) != N or N < 20:
        raise InvalidInput("Good's bounds need an integer N >= 20")
    N = int(N)
    half = iv.mpf(1) / 2
    lower = half + 1 / (2 * iv.log(ivq(N + 2)))
    l1 = iv.log(ivq(N - 1))
    upper = half + iv.log(l1) / (2 * l1)
    return lower, upper


def describe(b: ExponentBracket) -> str:
    return f"{b.exponent_kind} in [{to_float(ivq(b.lo)):.6f}, {to_float(ivq(b.hi)):.6f}] ({b.status})"
