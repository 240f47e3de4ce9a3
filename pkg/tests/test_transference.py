from fractions import Fraction
import json
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from cftransfer.cf_core import digits_of
from cftransfer.digitset import evens, full, naturals
from cftransfer.errors import BudgetExceeded, CorruptionError, InvalidInput, PreconditionError, TruncationError
from cftransfer.numerics import hi, ivprec, lo
from cftransfer.transference import (
    ConstructionSchedule,
    DigitStream,
    construct,
    eliminate,
    growth3_direct_log,
    growth3_exponent,
    growth_check,
    in_Q,
    in_seed_annulus,
    insert,
    is_two_separated,
    nu,
    nu_bound_check,
    random_schedule,
    realize,
    recovery_windows,
    recovery_windows_div,
    select_M,
    thin_subset,
    verify_schedule,
    window_bounds,
    wk_product_bound,
)


def brute_Q(limit):
    out, k = set(), 2
    while math.factorial(k) < limit:
        f = math.factorial(k)
        out |= {f + i * k for i in range(f) if f + i * k < limit}
        k += 1
    return out


@given(st.integers(1, 10 ** 7))
def test_nu_brackets_factorials(x):
    k = nu(x)
    assert math.factorial(k) <= x < math.factorial(k + 1)


def test_Q_small():
    assert [n for n in range(1, 24) if in_Q(n)] == [2, 4, 6, 9, 12, 15, 18, 21]
    assert {n for n in range(1, 5000) if in_Q(n)} == brute_Q(5000)


def test_nu_bound_lambdas():
    assert nu_bound_check(10, 20).lam == Fraction(7, 5)
    rep = nu_bound_check(3, 20)
    assert rep.lam == Fraction(37, 5)
    assert rep.per_n_min[:3] == [Fraction(37, 5), Fraction(7, 5), Fraction(6, 5)]
    with pytest.raises(InvalidInput):
        nu_bound_check(2, 5)


@given(st.lists(st.tuples(st.integers(0, 12), st.integers(0, 12)), max_size=30, unique=True))
def test_two_separation_matches_pairwise(pts):
    pairwise = all(max(abs(a - c), abs(b - e)) >= 2 for i, (a, b) in enumerate(pts) for (c, e) in pts[i + 1:])
    assert is_two_separated(pts) == pairwise


def test_thin_subset_naturals():
    res = thin_subset(naturals(), 30)
    assert res.S_sep == [(n,) for n in range(1, 31, 2)]
    # positions 2, 4, 6, 9, 12, 15 of the odd numbers
    assert res.S_star == [(3,), (7,), (11,), (17,), (23,), (29,)]
    assert is_two_separated(res.S_sep)


def test_thin_subset_full2_sandwich():
    res = thin_subset(full(2), 60)
    assert is_two_separated(res.S_sep) and set(res.S_star) <= set(res.S_sep)
    assert res.final_ok


@given(st.fractions(min_value=Fraction(1, 8), max_value=2), st.integers(1, 40),
       st.sampled_from([Fraction(3), Fraction(10), Fraction(11, 10)]))
def test_growth3_closed_form_matches_products(eps, n, t):
    q = (n + 1) * (n * eps - 6)
    with ivprec(200):
        direct = growth3_direct_log(t, eps, n)
        lt = math.log(t)
        assert float(lo(direct)) == pytest.approx(float(q) * lt, rel=1e-9, abs=1e-9)


@given(st.fractions(min_value=Fraction(1, 8), max_value=2), st.integers(1, 60))
def test_growth3_infimum(eps, M):
    q, n = growth3_exponent(eps, M)
    brute = min((m + 1) * (m * eps - 6) for m in range(M, M + 200))
    assert q == brute and n >= M


@pytest.mark.parametrize("args,expected", [
    ((10, 2, 1, Fraction(1, 2), 0), 13),
    ((10, 2, 1, Fraction(1), 0), 7),
    ((2, Fraction(3, 2), 1, Fraction(1), 0), 7),
    ((2, Fraction(3, 2), 1, Fraction(1, 2), 9), 589825),
])
def test_select_M_golden(args, expected):
    M = select_M(*args)
    assert M == expected
    t, L, d, eps, Mp = args
    assert growth_check(t, L, d, Mp, M, eps).ok
    assert not growth_check(t, L, d, Mp, M - 1, eps).ok or M - 1 <= Mp


@given(st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)]),
       st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)]))
def test_select_M_monotone_in_eps(e1, e2):
    if e1 > e2:
        e1, e2 = e2, e1
    assert select_M(10, 2, 1, e1, 0) >= select_M(10, 2, 1, e2, 0)


def test_select_M_budget():
    with pytest.raises(BudgetExceeded):
        select_M(2, Fraction(3, 2), 1, Fraction(1, 2), 591361)


@given(st.integers(0, 6), st.integers(1, 5000), st.integers(1, 2),
       st.sampled_from([(Fraction(3), Fraction(2)), (Fraction(10), Fraction(2)), (Fraction(5, 2), Fraction(7, 5))]))
def test_window_bounds_exact(Mp, M, d, tl):
    t, L = tl
    a, b = window_bounds(t, L, d, Mp, M)
    X = L * t ** Mp
    inside = lambda m: m >= X + 1 and (m - X) ** (2 * d) <= M
    assert inside(a) or a > b
    assert not inside(a - 1)
    if a <= b:
        assert inside(b)
    assert not inside(b + 1)


def test_wk_product_bound():
    pb = wk_product_bound(10, 2, 1, 0, 13, Fraction(1, 2))
    assert pb.window == (3, 5) and pb.ok
    assert pb.lhs_log == pytest.approx(-2 * math.log(60), rel=1e-12)
    assert pb.rhs_log == pytest.approx(-1.5 * 14 * 13 * math.log(10), rel=1e-12)
    with pytest.raises(PreconditionError):
        wk_product_bound(10, 2, 1, 0, 2, Fraction(1, 2))


def test_construct_golden_and_round_trip():
    s = construct(naturals(), evens(), 2, Fraction(3, 2), 2)
    assert s.M == [9, 591361]
    assert s.W[0] == [(2,), (4,)] and len(s.W[1]) == 384
    assert s.certified
    data = json.loads(json.dumps(s.to_json()))
    assert verify_schedule(data).ok
    assert ConstructionSchedule.from_json(data).to_json() == s.to_json()
    bad = json.loads(json.dumps(data))
    bad["M"][0] = "2"
    rep = verify_schedule(bad)
    assert not rep.ok and any("growth0" in m for m in rep.mismatches)
    bad = json.loads(json.dumps(data))
    bad["W"][0] = [[2], [5]]
    rep = verify_schedule(bad)
    assert any("seed_disjoint" in m for m in rep.mismatches)


def test_construct_reports_unbuilt_stage():
    s = construct(naturals(), evens(), 2, Fraction(3, 2), 3)
    assert s.stages == 2 and any("stage 3" in n for n in s.notes)


def test_seed_annulus_membership():
    assert [m for m in range(1, 40) if in_seed_annulus(3, 2, m)] == [3, 4, 5, 9, 10, 11, 12, 13, 14, 15, 16, 17, 27, 28, 29, 30, 31, 32, 33, 34, 35, 36, 37, 38, 39]


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6))
def test_insert_eliminate_round_trip(seed):
    rng = random.Random(seed)
    sched = random_schedule(rng, max_stages=3, max_bits=64)
    n = min(sched.M[-1] + 3, 2000)
    stream = DigitStream.from_seed([tuple(rng.randrange(1, 50) * 2 - 1 for _ in range(sched.d)) for _ in range(n)])
    x = insert(stream, sched)
    assert eliminate(x, sched) == stream
    assert len(x) >= len(stream)


def _small_schedule():
    return construct(naturals(), evens(), 2, Fraction(3, 2), 1)


def test_eliminate_detects_corruption():
    sched = _small_schedule()
    stream = DigitStream.from_seed([(1,), (3,)] * 6)
    x = insert(stream, sched)
    i = x.tags.index(("inserted", 1, 0))
    bad = DigitStream(x.vectors[:i] + ((999,),) + x.vectors[i + 1:], x.tags)
    with pytest.raises(CorruptionError):
        eliminate(bad, sched)
    swapped = DigitStream(x.vectors, x.tags[:1] + (("seed", 5),) + x.tags[2:])
    with pytest.raises(CorruptionError):
        eliminate(swapped, sched)


def test_insert_truncation():
    sched = _small_schedule()
    short = DigitStream.from_seed([(1,)] * 4)
    assert insert(short, sched) == short
    with pytest.raises(TruncationError):
        insert(short, sched, strict=True)


@given(st.lists(st.tuples(st.integers(1, 40), st.integers(1, 40)), max_size=8))
def test_realize_reads_back_digits(vecs):
    x = realize(vecs, 2)
    for j in range(2):
        got = digits_of(x[j], len(vecs)).digits
        assert got == tuple(v[j] for v in vecs)


def test_recovery_relative_golden():
    res = recovery_windows(naturals(), evens(), 2, Fraction(3, 2), 3)
    assert not res.partial
    assert [s.ratio for s in res.stages][0] == Fraction(1, 3)
    assert [s.M.bit_length() for s in res.stages] == [3, 10, 1255]
    for k, s in enumerate(res.stages, start=1):
        assert abs(s.ratio - Fraction(1, 2)) <= Fraction(2, k)


def test_recovery_div_floors():
    res = recovery_windows_div(full(2), Fraction(11, 10), Fraction(21, 20), 3)
    assert res.M == [16, 81, 31709613814641]
    for k, s in enumerate(res.stages, start=1):
        assert s.window.floor == k
        assert s.ok
