from fractions import Fraction
import itertools
import json

import pytest
from hypothesis import given, strategies as st

from cftransfer.digitset import (
    BalancedSet,
    DifferenceSet,
    ExplicitSet,
    FilteredSet,
    NormWindow,
    ProductSet,
    RectRestricted,
    balanced_extract,
    banach_density,
    ck_count,
    ck_density_limit,
    density_reduction,
    diagonal,
    evens,
    find_configuration,
    full,
    iroot,
    naturals,
    parse_set,
    progression,
    relative_density,
    set_from_json,
    squares,
    tail1,
    upper_density,
)
from cftransfer.errors import BudgetExceeded, InvalidInput


def brute_count(S, N):
    return sum(1 for v in itertools.product(range(1, N + 1), repeat=S.d) if S.contains(v))


@given(st.integers(0, 10 ** 60), st.integers(1, 9))
def test_iroot(n, p):
    r = iroot(n, p)
    assert r ** p <= n < (r + 1) ** p


def test_iroot_large():
    x = 3 ** 4000 + 17
    r = iroot(x, 6)
    assert r ** 6 <= x < (r + 1) ** 6


@given(st.integers(1, 4), st.integers(1, 3), st.integers(0, 25))
def test_ck_count_brute(K, d, N):
    assert ck_count(K, d, N) == brute_count(BalancedSet(K, d), N) == BalancedSet(K, d).count_cube(N)


def test_ck_density_tends_to_limit():
    K, d = 3, 3
    N = 3000
    r = Fraction(ck_count(K, d, N), N ** d)
    assert abs(r - ck_density_limit(K, d)) < Fraction(1, 100)


SETS = [full(1), full(2), diagonal(2), diagonal(3), evens(), squares(), tail1(5), progression(3, 2),
        BalancedSet(2, 2), ProductSet([evens(), tail1(3)]),
        ExplicitSet([(1, 2), (3, 3), (7, 1)]),
        RectRestricted(full(2), [((1, 1), (3, 4)), ((6, 2), (8, 9))]),
        NormWindow(full(2), 3, 7, 2), DifferenceSet(full(1), evens())]


@pytest.mark.parametrize("S", SETS, ids=lambda S: type(S).__name__)
def test_counts_match_brute_force(S):
    for N in (1, 2, 5, 11):
        assert S.count_cube(N) == brute_count(S, N)
    pts = list(S.iter_members(1, 9))
    assert pts == sorted(set(pts), key=lambda v: (max(v), v))
    assert all(S.contains(v) for v in pts)
    assert len(pts) == brute_count(S, 9)


@pytest.mark.parametrize("S", SETS, ids=lambda S: type(S).__name__)
def test_json_round_trip(S):
    data = S.to_json()
    back = set_from_json(json.loads(json.dumps(data)))
    assert back.to_json() == data
    assert back.count_cube(12) == S.count_cube(12)


@given(st.integers(0, 5), st.integers(0, 5), st.integers(1, 6))
def test_count_box_translate(a, b, N):
    S = BalancedSet(2, 2)
    brute = sum(1 for x in range(a + 1, a + N + 1) for y in range(b + 1, b + N + 1) if S.contains((x, y)))
    assert S.count_box((a, b), N) == brute


def test_parse_set_names():
    assert parse_set("full3").d == 3
    assert parse_set("ck:K=2,d=2").count_cube(10) == ck_count(2, 2, 10)
    assert parse_set("tail1:N=20").contains((20,)) and not parse_set("tail1:N=20").contains((19,))
    assert parse_set("odds1").contains((5,)) and not parse_set("odds1").contains((4,))
    with pytest.raises(InvalidInput):
        parse_set("nonsense")


def test_upper_density_running_max():
    rep = upper_density(ExplicitSet([(1,), (2,), (9,)]), [2, 4, 10])
    assert [r.ratio for r in rep.rows] == [1, Fraction(2, 4), Fraction(3, 10)]
    assert all(r.running_max == 1 for r in rep.rows)
    assert rep.to_csv().splitlines()[0] == "N,count,denom,ratio,running_max"


def test_relative_density_evens():
    rep = relative_density(evens(), naturals(), [10, 11, 1000])
    assert [r.ratio for r in rep.rows] == [Fraction(1, 2), Fraction(5, 11), Fraction(1, 2)]


def test_banach_density_finds_dense_window():
    S = RectRestricted(full(1), [((50,), (59,))])
    rep = banach_density(S, 10, "exhaustive", 60)
    assert rep.last.ratio == 1 and rep.witness == (49,)
    assert upper_density(S, [10]).last.ratio == 0


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        FilteredSet(full(3), lambda v: v[0] % 2 == 0).count_cube(100, budget=10)
    with pytest.raises(BudgetExceeded):
        BalancedSet(2, 2).count_cube(10 ** 7, budget=1000)


@given(st.fractions(min_value=Fraction(1, 50), max_value=1), st.integers(1, 6))
def test_balanced_extract_minimal(delta, d):
    K = balanced_extract(delta, d)
    assert 1 - ck_density_limit(K, d) < delta / 4
    if K > 1:
        assert not 1 - ck_density_limit(K - 1, d) < delta / 4


def test_density_reduction_boxes_far_and_dense():
    res = density_reduction(full(1), 2, alpha=1, search_bound=0)
    assert len(res.boxes) == 2
    for b in res.boxes:
        assert b.ratio >= b.threshold
        assert min(b.v) >= 10 ** b.j * b.side
    assert not res.alpha_estimated


def test_find_configuration_squares():
    D = ExplicitSet([(x,) for x in range(1, 40)])
    n, u = find_configuration(D, [(1,), (2,)], [{(2,): 1}], 10, ((1,), (3,)))
    assert (n, u) == (1, (1,))
    assert find_configuration(ExplicitSet([(1,)]), [(1,)], [{(1,): 1}], 5, ((2,), (4,))) is None
