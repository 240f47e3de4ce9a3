from fractions import Fraction
import itertools
import math

import pytest
from hypothesis import given, strategies as st

from cftransfer.digitset import diagonal, full, squares
from cftransfer.errors import BudgetExceeded, CheckFailure, InvalidInput
from cftransfer.moran import (
    MoranSpec,
    SeedParams,
    enumerate_tree,
    moran_lower_bound,
    packing_check,
    seed_annuli,
    seed_delta,
    seed_moran_spec,
)


def cantor_ratio(n):
    # log(r_1..r_{n-1}) / -log(r_n delta_n) with r = 2, delta_n = 3^-n
    return (n - 1) * math.log(2) / (n * math.log(3) - math.log(2))


def test_cantor_ratios_closed_form():
    rep = moran_lower_bound(MoranSpec.cantor(), 200)
    for n in (2, 3, 50, 200):
        assert rep.ratio_at(n) == pytest.approx(cantor_ratio(n), rel=1e-12)
    assert rep.ratio_at(200) == pytest.approx(0.62976, abs=1e-5)
    assert abs(rep.ratio_at(200) - math.log(2) / math.log(3)) < 0.01
    assert rep.contraction_index == 1 and rep.bounded_by()


def test_superexponential_gaps_drive_ratio_to_zero():
    spec = MoranSpec(1, lambda n: 2, lambda n: Fraction(1, 2 ** (n * n)))
    rep = moran_lower_bound(spec, 30)
    assert rep.ratio_at(30) == pytest.approx(29 / (900 - 1), rel=1e-9)


def test_moran_input_checks():
    with pytest.raises(InvalidInput):
        moran_lower_bound(MoranSpec(1, lambda n: 1, lambda n: Fraction(1, 3 ** n)), 5)
    with pytest.raises(InvalidInput):
        moran_lower_bound(MoranSpec(1, lambda n: 2, lambda n: Fraction(1, 3)), 5)


def test_moran_csv_header():
    rep = moran_lower_bound(MoranSpec.cantor(), 5)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "n,L_n,ratio,tail_min" and len(lines) == 5


def test_seed_annuli_full2():
    p = SeedParams(10, 2, full(2))
    # sup-norms in [10^n, 2*10^n): (2*10^n - 1)^2 - (10^n - 1)^2
    expected = [(2 * 10 ** n - 1) ** 2 - (10 ** n - 1) ** 2 for n in (1, 2, 3)]
    assert seed_annuli(p, 3) == expected == [280, 29800, 2998000]
    assert seed_delta(p, 1) == Fraction(1, 1600)


@given(st.integers(2, 12), st.integers(3, 12), st.integers(1, 4))
def test_norm_range_is_half_open_annulus(tn, ln, n):
    t = Fraction(tn, 2)
    L = Fraction(ln, 4)
    if not (t > L > 1):
        return
    p = SeedParams(t, L, full(1))
    a, b = p.norm_range(n)
    assert a >= t ** n and (a - 1) < t ** n
    assert b < L * t ** n and b + 1 >= L * t ** n


def test_seed_spec_bounded_by_dimension():
    spec = seed_moran_spec(SeedParams(10, 2, full(2)), 2.0, 4)
    rep = moran_lower_bound(spec, 4)
    assert rep.bounded_by()
    assert spec.meta["predicted_limit"] == 0.5


def test_tree_certificates_diagonal():
    tree = enumerate_tree(SeedParams(4, 2, diagonal(2)), 2)
    assert sum(len(l) for l in tree.levels) == 69
    assert tree.ok
    assert all(c.separation_kind == "disjoint" for c in tree.certificates)
    assert tree.leaf_csv().splitlines()[0] == "word,lo1,hi1,lo2,hi2"


def test_tree_budget_behaviour():
    p = SeedParams(4, 2, diagonal(2))
    assert len(enumerate_tree(p, 0).levels) == 1
    small = enumerate_tree(p, 3, node_budget=100)
    assert sum(len(l) for l in small.levels) <= 100 and small.branching_cap == 4
    full_tree = enumerate_tree(p, 3, node_budget=100, subsample=False)
    assert full_tree.truncated
    with pytest.raises(BudgetExceeded):
        enumerate_tree(p, 20, node_budget=10, subsample=True)


def test_packing_linf_and_l2():
    pts = [(Fraction(i), Fraction(j)) for i, j in itertools.product(range(4), repeat=2)]
    rep = packing_check(pts, 1)
    assert rep.ok and rep.count == 16 and rep.diameter == 3
    rep2 = packing_check(pts, 1, "l2")
    assert rep2.ok
    with pytest.raises(CheckFailure):
        packing_check([(0, 0), (Fraction(1, 2), 0)], 1)


@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=1, max_size=25, unique=True))
def test_packing_bound_holds_for_integer_points(pts):
    assert packing_check(pts, 1).ok


@pytest.mark.parametrize("K,t,alpha,levels", [(full(1), 10, 1.0, 40), (squares(), 100, 2.0, 12)])
def test_seed_ratios_trend_to_predicted_limit(K, t, alpha, levels):
    spec = seed_moran_spec(SeedParams(t, 2, K), alpha, levels)
    limit = spec.meta["predicted_limit"]
    ratios = [r.ratio for r in moran_lower_bound(spec, levels).rows]
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < limit
    # the gap closes at least like a constant over n
    assert (limit - ratios[-1]) * levels < (limit - ratios[len(ratios) // 2]) * (levels // 2 + 1) * 1.5
