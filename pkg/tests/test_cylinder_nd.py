from fractions import Fraction
import math

import pytest
from hypothesis import assume, given, strategies as st

from cftransfer.cf_core import cylinder_interval, cylinder_length
from cftransfer.cylinder_nd import (
    DIGIT_SEPARATION_FACTOR,
    box_distance_linf,
    cylinder_nd,
    diameter,
    diameter_bounds,
    digit_separation_bound,
    digit_separation_check,
    sibling_separation_check,
)
from cftransfer.errors import InvalidInput


def word_nd(d, max_len=5, max_digit=30):
    vec = st.tuples(*[st.integers(1, max_digit)] * d)
    return st.lists(vec, min_size=0, max_size=max_len).map(tuple)


@st.composite
def separated_children(draw, d=2):
    prefix = draw(word_nd(d, 4))
    v = draw(st.tuples(*[st.integers(1, 40)] * d))
    w = draw(st.tuples(*[st.integers(1, 40)] * d))
    assume(max(abs(a - b) for a, b in zip(v, w)) >= 2)
    return prefix, v, w


def test_factors_are_coordinate_cylinders():
    c = cylinder_nd([(1, 2), (3, 4)])
    assert c.factors[0] == cylinder_interval((1, 3))
    assert c.factors[1] == cylinder_interval((2, 4))
    assert c.side_lengths == (cylinder_length((1, 3)), cylinder_length((2, 4)))


@given(word_nd(3))
def test_diameter_bounds(word):
    lower, diam, upper = diameter_bounds(word, 3)
    assert lower <= diam <= upper
    c = cylinder_nd(word, 3)
    l2 = diameter(c, "l2")
    exact_sq = sum(s * s for s in c.side_lengths)
    assert l2.lo ** 2 <= exact_sq <= l2.hi ** 2
    assert diam <= l2.lo or diam == l2.lo == l2.hi


@given(separated_children())
def test_sibling_gap_at_least_smallest_side(args):
    prefix, v, w = args
    assert sibling_separation_check(prefix, v, w).ok


@given(separated_children(d=1) | separated_children(d=2) | separated_children(d=3))
def test_digit_separation_with_quarter_factor(args):
    prefix, v, w = args
    chk = digit_separation_check(prefix, v, w)
    assert chk.ok, chk


def test_half_factor_fails_for_one_and_three():
    chk = digit_separation_check((), (1,), (3,), factor=Fraction(1, 2))
    assert chk.distance == Fraction(1, 6)
    assert digit_separation_bound((), (1,), (3,)) == Fraction(2, 3)
    assert not chk.ok
    assert digit_separation_check((), (1,), (3,)).ok
    assert DIGIT_SEPARATION_FACTOR == Fraction(1, 4)


def test_quarter_is_the_exhaustive_minimum():
    # exact search over short prefixes and small digits
    best = None
    for prefix in [(), ((1,),), ((2,),), ((1,), (1,)), ((3,), (1,))]:
        for v in range(1, 25):
            for w in range(v + 2, 25):
                dist = box_distance_linf(cylinder_nd(prefix + ((v,),), 1), cylinder_nd(prefix + ((w,),), 1))
                r = dist / digit_separation_bound(prefix, (v,), (w,))
                best = r if best is None else min(best, r)
    assert best == Fraction(1, 4)


def test_adjacent_digits_rejected():
    with pytest.raises(InvalidInput):
        sibling_separation_check((), (1, 1), (2, 2))
    with pytest.raises(InvalidInput):
        digit_separation_bound((), (5,), (6,))


def test_box_distance_of_neighbours_is_zero():
    c1 = cylinder_nd([(1,)])
    c2 = cylinder_nd([(2,)])
    assert box_distance_linf(c1, c2) == 0


@given(word_nd(2, 3))
def test_l2_enclosure_tight(word):
    c = cylinder_nd(word, 2)
    e = diameter(c, "l2")
    true = math.sqrt(sum(float(s) ** 2 for s in c.side_lengths))
    assert float(e.lo) <= true * (1 + 1e-12) and float(e.hi) >= true * (1 - 1e-12)
    assert e.hi - e.lo <= Fraction(1, 10 ** 20)
