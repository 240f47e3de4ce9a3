from fractions import Fraction
import math

import pytest
from hypothesis import given, strategies as st
from mpmath import mp, zeta

from cftransfer.digitset import BalancedSet, diagonal, full, tail1
from cftransfer.errors import InvalidInput
from cftransfer.exponents import (
    good_bounds,
    lambda_trace,
    monomial,
    phi_s,
    phi_sum,
    rearrangement_check,
    s_sharp,
    s_star,
    sigma_tilde,
    zeta_sum,
)
from cftransfer.numerics import as_fraction, hi, lo

TOL = Fraction(1, 100)

# roots of zeta(2s, N) = 1 (Hurwitz zeta), computed with mpmath.findroot at 30 digits
TAIL_ROOTS = {
    20: 0.675869772864066149907500169052,
    100: 0.639078623877220727568914965449,
    1000: 0.609761364081011085404052524069,
}

vectors = st.lists(st.integers(1, 200), min_size=1, max_size=4)


@given(vectors, st.data())
def test_phi_matches_sorted_monomial(a, data):
    d = len(a)
    s = data.draw(st.fractions(min_value=Fraction(1, 10), max_value=d))
    direct = phi_s(a, s)
    via_sigma = monomial(sorted(a), sigma_tilde(s, d))
    assert lo(direct) <= hi(via_sigma) and lo(via_sigma) <= hi(direct)


def test_phi_integer_exponent_exact():
    # s = 2: product of the two smallest squares
    x = phi_s([5, 2, 3], 2)
    assert lo(x) <= 1 / 36 <= hi(x)


def test_phi_rejects_bad_arguments():
    with pytest.raises(InvalidInput):
        phi_s([1, 2], 3)
    with pytest.raises(InvalidInput):
        phi_s([0, 2], 1)


@given(st.lists(st.integers(1, 50), min_size=2, max_size=5), st.randoms(use_true_random=False))
def test_rearrangement(xs, rnd):
    x = sorted(xs)
    w = sorted((rnd.randint(0, 9) for _ in x), reverse=True)
    perm = list(range(len(x)))
    rnd.shuffle(perm)
    assert rearrangement_check(x, w, perm)


def test_phi_sum_riemann_zeta():
    e = phi_sum(full(1), Fraction(3, 4), 256)
    tot = e.total
    with mp.workdps(30):
        z = zeta(1.5)
    assert lo(tot) <= z <= hi(tot)
    assert e.rigorous


def test_zeta_sum_product():
    e = zeta_sum(full(2), (Fraction(3), Fraction(2)), 128)
    with mp.workdps(30):
        z = zeta(3) * zeta(2)
    assert lo(e.total) <= z <= hi(e.total)


@pytest.mark.parametrize("S,value", [(full(1), Fraction(1, 2)), (full(2), Fraction(3, 2)),
                                     (diagonal(2), Fraction(1, 2)), (BalancedSet(2, 2), Fraction(1))])
def test_s_star_known(S, value):
    b = s_star(S, TOL)
    assert b.status == "bracket"
    assert b.lo <= value <= b.hi and b.width <= TOL


@pytest.mark.parametrize("S,value", [(full(2), 2), (diagonal(2), 1), (BalancedSet(2, 2), 2)])
def test_lambda_known(S, value):
    b = lambda_trace(S, TOL)
    assert b.lo <= value <= b.hi and b.width <= TOL


@pytest.mark.parametrize("N", sorted(TAIL_ROOTS))
def test_s_sharp_tail_matches_hurwitz_root(N):
    b = s_sharp(tail1(N), Fraction(1, 1000))
    assert b.status == "bracket"
    assert float(b.lo) <= TAIL_ROOTS[N] <= float(b.hi)
    lower, upper = good_bounds(N)
    assert as_fraction(lo(lower)) <= b.hi
    assert b.lo <= as_fraction(hi(upper))


def test_s_sharp_without_threshold():
    # the a = 1 term alone contributes 1
    assert s_sharp(full(1), TOL).status == "no_threshold"
    assert s_sharp(diagonal(2), TOL).status == "no_threshold"


def test_exponent_ordering_full2():
    a = s_star(full(2), TOL)
    b = lambda_trace(full(2), TOL)
    # summing over a finer family of exponents can only raise the threshold
    assert a.hi <= b.hi


def test_good_bounds_domain():
    with pytest.raises(InvalidInput):
        good_bounds(5)
    lower, upper = good_bounds(1000)
    assert 0.5 < float(lo(lower)) < float(hi(upper)) < 0.6 + 0.1
    assert abs(float(lo(lower)) - (0.5 + 1 / (2 * math.log(1002)))) < 1e-12
