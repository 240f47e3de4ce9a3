"""Interval helpers on top of ``mpmath.iv``: precision scoping and certified comparisons."""

from __future__ import annotations

from contextlib import contextmanager
from fractions import Fraction

from mpmath import iv, mp, mpf

INF = mpf("inf")


@contextmanager
def ivprec(bits: int):
    """Temporarily set the working precision of the interval context."""
    old = iv.prec
    iv.prec = int(bits)
    try:
        yield
    finally:
        iv.prec = old


def ivq(x) -> "iv.mpf":
    """Tight interval around a rational (or int, or interval passed through)."""
    if isinstance(x, iv.mpf):
        return x
    if isinstance(x, Fraction):
        return iv.mpf(x.numerator) / iv.mpf(x.denominator)
    if isinstance(x, int):
        return iv.mpf(x)
    return iv.mpf(x)


def iv_log(x) -> "iv.mpf":
    """Enclosure of the natural log of a positive rational or integer, any size."""
    if isinstance(x, Fraction):
        return iv.log(iv.mpf(x.numerator)) - iv.log(iv.mpf(x.denominator))
    return iv.log(ivq(x))


def lo(x) -> mpf:
    """Lower endpoint as a plain mpf (exact, no rounding)."""
    return mp.make_mpf(x._mpi_[0]) if isinstance(x, iv.mpf) else mpf(x)


def hi(x) -> mpf:
    """Upper endpoint as a plain mpf (exact, no rounding)."""
    return mp.make_mpf(x._mpi_[1]) if isinstance(x, iv.mpf) else mpf(x)


def span(a, b) -> "iv.mpf":
    """The interval ``[lo(a), hi(b)]``."""
    return iv.mpf([lo(a), hi(b)])


def certainly_lt(a, b):
    """True if a < b for every point of the enclosures, False if a >= b for all, else None."""
    if hi(a) < lo(b):
        return True
    if lo(a) >= hi(b):
        return False
    return None


def certainly_le(a, b):
    if hi(a) <= lo(b):
        return True
    if lo(a) > hi(b):
        return False
    return None


def to_float(x) -> float:
    """Midpoint of an enclosure as a float (for reporting only)."""
    if isinstance(x, iv.mpf):
        a, b = lo(x), hi(x)
        if a == INF:
            return float("inf")
        return float((a + b) / 2)
    return float(x)


def iv_json(x) -> dict:
    """Serialize an enclosure as decimal strings of its endpoints."""
    from mpmath import nstr

    return {"lo": nstr(lo(x), 20), "hi": nstr(hi(x), 20)}


def as_fraction(x) -> Fraction:
    """Exact rational value of a finite mpf (or interval endpoint)."""
    x = mpf(x)
    if not mp.isfinite(x):
        raise ValueError("infinite value has no rational form")
    man, exp = x.man_exp
    return Fraction(int(man)) * Fraction(2) ** int(exp)
