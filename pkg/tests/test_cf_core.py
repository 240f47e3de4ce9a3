from fractions import Fraction
import math

import pytest
from hypothesis import given, strategies as st

from cftransfer.cf_core import (
    as_rational,
    check_length_bounds,
    convergents,
    cylinder_interval,
    cylinder_length,
    digits_of,
    golden_length_bound,
    prepend_digits,
)
from cftransfer.errors import InvalidInput
from cftransfer.numerics import as_fraction, hi, lo

words = st.lists(st.integers(1, 50), min_size=1, max_size=12).map(tuple)


def eval_cf(word, tail=Fraction(0)):
    # independent route: fold from the right
    x = tail
    for a in reversed(word):
        x = 1 / (a + x)
    return x


def test_small_cylinders():
    assert cylinder_interval((2,)).lo == Fraction(1, 3)
    assert cylinder_interval((2,)).hi == Fraction(1, 2)
    I = cylinder_interval((2, 1))
    assert (I.lo, I.hi) == (Fraction(1, 3), Fraction(2, 5))
    assert I.lo_closed and not I.hi_closed
    assert cylinder_length((2, 1)) == Fraction(1, 15)


def test_convergents_golden():
    p, q, pp, qp = convergents((1,) * 10)
    assert (p, q) == (55, 89) and (pp, qp) == (34, 55)


@given(words)
def test_interval_endpoints_match_folding(w):
    I = cylinder_interval(w)
    ends = {eval_cf(w), eval_cf(w[:-1] + (w[-1] + 1,))}
    assert {I.lo, I.hi} == ends
    assert I.length == cylinder_length(w)
    # the included endpoint is p_n/q_n
    assert I.contains(eval_cf(w))
    assert not I.contains(eval_cf(w[:-1] + (w[-1] + 1,)))


@given(words, st.fractions(min_value=0, max_value=1).filter(lambda y: 0 < y < 1))
def test_prepend_lands_in_cylinder(w, y):
    x = prepend_digits(y, w)
    assert cylinder_interval(w).contains(x)
    assert digits_of(x, len(w)).digits == w


@given(words)
def test_length_bounds_sandwich(w):
    b = check_length_bounds(w)
    assert b.lower <= b.length <= b.upper


@given(words)
def test_children_tile_parent(w):
    parent = cylinder_interval(w)
    kids = [cylinder_interval(w + (a,)) for a in range(1, 40)]
    total = sum(k.length for k in kids)
    assert total < parent.length
    # the tail beyond digit 39 is itself a cylinder-like interval of the right size
    rest = abs(eval_cf(w + (40,)) - eval_cf(w))
    assert total + rest == parent.length


def test_digits_of_rational_terminates():
    e = digits_of(Fraction(13, 30), 10)
    assert e.terminated and e.digits == (2, 3, 4)
    assert digits_of(Fraction(13, 30), 2) == ((2, 3), False)


def test_digits_of_rejects_outside():
    with pytest.raises(InvalidInput):
        digits_of(Fraction(3, 2), 3)
    with pytest.raises(InvalidInput):
        digits_of(Fraction(0), 3)


def test_as_rational_forms():
    assert as_rational("3/4") == Fraction(3, 4)
    assert as_rational(2) == Fraction(2)
    with pytest.raises(InvalidInput):
        as_rational("x")


@given(st.integers(1, 30))
def test_golden_bound_covers_all_words(n):
    # longest cylinder at depth n is the all-ones word
    longest = cylinder_length((1,) * n)
    g = golden_length_bound(n)
    assert longest <= as_fraction(hi(g))
    assert as_fraction(lo(g)) > 0
    # F_{n+1} F_{n+2} grows like phi^(2n+1)/5, so the bound is tight up to a constant
    assert float(hi(g)) / float(longest) < 5 * ((1 + math.sqrt(5)) / 2) ** 3
