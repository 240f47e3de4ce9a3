"""The acceptance checks, each returning a deterministic, JSON-ready result."""

from __future__ import annotations

import itertools
import json
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .cf_core import check_length_bounds, convergents, cylinder_length, format_rational
from .config import RunConfig
from .cylinder_nd import sibling_separation_check
from .digitset import BalancedSet, ck_count, evens, full, naturals, progression, tail1
from .exponents import good_bounds, lambda_trace, s_sharp, s_star
from .moran import MoranSpec, SeedParams, moran_lower_bound, packing_check, seed_moran_spec
from .numerics import as_fraction
from .numerics import hi as _hi
from .transference import (
    ConstructionSchedule,
    DigitStream,
    eliminate,
    empirical_holder,
    insert,
    is_two_separated,
    odd_annulus_sampler,
    random_schedule,
    recovery_windows,
    recovery_windows_div,
    select_M,
    thin_subset,
    verify_schedule,
    window_bounds,
)


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": self.passed, "details": self.details}

    def line(self) -> str:
        return f"criterion {self.id:>2} {'PASS' if self.passed else 'FAIL'}  {self.name}"


def _f(x) -> float:
    return float(x)


# --------------------------------------------------------------------------- 1
def criterion_1(seed: int = 0) -> CriterionResult:
    rng = random.Random(seed)
    identity_fail = sandwich_fail = 0
    for _ in range(1000):
        word = [rng.randint(1, 50) for _ in range(rng.randint(1, 10))]
        p, q, pp, qp = convergents(word)
        length = cylinder_length(word)
        if length != Fraction(1, q * (q + qp)):
            identity_fail += 1
        b = check_length_bounds(word)
        if not b.lower <= b.length <= b.upper:
            sandwich_fail += 1
    return CriterionResult(1, "exact cylinder identities", identity_fail == 0 and sandwich_fail == 0,
                           {"words": 1000, "identity_failures": identity_fail,
                            "sandwich_failures": sandwich_fail})


# --------------------------------------------------------------------------- 2
def _brute_ck(K, d, N):
    return sum(1 for v in itertools.product(range(1, N + 1), repeat=d) if max(v) <= K * min(v))


def criterion_2(seed: int = 0) -> CriterionResult:
    r22 = Fraction(ck_count(2, 2, 10 ** 4), 10 ** 8)
    r33 = Fraction(ck_count(3, 3, 10 ** 4), 10 ** 12)
    mism = []
    for K in range(1, 5):
        for d in range(1, 4):
            for N in range(1, 31):
                exact = ck_count(K, d, N)
                if exact != _brute_ck(K, d, N) or exact != BalancedSet(K, d).count_cube(N):
                    mism.append([K, d, N])
    ok = abs(r22 - Fraction(1, 2)) <= Fraction(1, 1000) and abs(r33 - Fraction(4, 9)) <= Fraction(2, 1000)
    return CriterionResult(2, "balanced-set density", ok and not mism,
                           {"ratio_K2_d2": _f(r22), "ratio_K3_d3": _f(r33), "brute_force_mismatches": mism})


# --------------------------------------------------------------------------- 3
def criterion_3(seed: int = 0) -> CriterionResult:
    cantor = moran_lower_bound(MoranSpec.cantor(), 200)
    r200 = cantor.ratio_at(200)
    target = math.log(2) / math.log(3)
    seed_spec = seed_moran_spec(SeedParams(10, 2, full(2)), 1.0, 6)
    seed_rep = moran_lower_bound(seed_spec, 6)
    ok = abs(r200 - target) <= 0.01 and cantor.bounded_by(0.05) and seed_rep.bounded_by(0.05)
    return CriterionResult(3, "Moran formula sanity", ok, {
        "cantor_ratio_200": r200, "ln2_over_ln3": target,
        "cantor_contraction_index": cantor.contraction_index,
        "cantor_max_ratio_after": cantor.max_ratio_after,
        "seed_full2_ratios": [row.ratio for row in seed_rep.rows],
        "seed_full2_max_ratio_after": seed_rep.max_ratio_after,
    })


# --------------------------------------------------------------------------- 4
def criterion_4(seed: int = 0) -> CriterionResult:
    from .digitset import diagonal

    tol = Fraction(1, 100)
    cfg = RunConfig(seed=seed)
    sd = s_star(diagonal(2), tol, cfg)
    ld = lambda_trace(diagonal(2), tol, config=cfg)
    sf = s_star(full(2), tol, cfg)
    lf = lambda_trace(full(2), tol, config=cfg)
    gap = max(abs(ld.hi - 2 * sd.lo), abs(ld.lo - 2 * sd.hi))
    checks = {
        "diag2_s_star_width": sd.width <= Fraction(2, 100) and sd.contains(Fraction(1, 2)),
        "diag2_lambda_contains_1": ld.contains(1),
        "diag2_lambda_vs_2s": gap <= Fraction(6, 100),
        "full2_s_star_contains_1.5": sf.contains(Fraction(3, 2)),
        "full2_lambda_contains_2": lf.contains(2),
        "full2_strict": lf.hi < 2 * sf.lo,
    }
    return CriterionResult(4, "exponent brackets", all(checks.values()), {
        "checks": checks,
        "diag2_s_star": [_f(sd.lo), _f(sd.hi)], "diag2_lambda": [_f(ld.lo), _f(ld.hi)],
        "full2_s_star": [_f(sf.lo), _f(sf.hi)], "full2_lambda": [_f(lf.lo), _f(lf.hi)],
        "diag2_worst_gap": _f(gap),
        "rigorous": [sd.rigorous, ld.rigorous, sf.rigorous, lf.rigorous],
    })


# --------------------------------------------------------------------------- 5
def criterion_5(seed: int = 0) -> CriterionResult:
    tol = Fraction(1, 1000)
    rows, ok = {}, True
    for N in (20, 100, 1000):
        b = s_sharp(tail1(N), tol, RunConfig(seed=seed))
        last = b.hi - Fraction(1, 2)
        good_lo, _ = good_bounds(N)
        above = b.status == "bracket" and b.lo > as_fraction(_hi(good_lo))
        ok &= above
        rows[str(N)] = {"bracket": [_f(b.lo), _f(b.hi)], "good_lower": float(_hi(good_lo)),
                        "strictly_above": above, "status": b.status}
    ok &= last < Fraction(12, 100)
    return CriterionResult(5, "Good-bound consistency", bool(ok), {"rows": rows, "s_sharp_1000_minus_half": _f(last)})


# --------------------------------------------------------------------------- 6
def criterion_6(seed: int = 0) -> CriterionResult:
    ts = thin_subset(full(2), 500)
    c = ts.checkpoints[-1]
    sep = is_two_separated(ts.S_star)
    return CriterionResult(6, "thin-subset sandwich", sep and c.ok, {
        "N": c.N, "count_S": c.count_S, "count_star": c.count_star, "nu": c.nu,
        "ratio": _f(c.ratio), "lower": format_rational(c.lower), "upper": format_rational(c.upper),
        "two_separated": sep, "early_checkpoint_failures": ts.first_failures,
    })


# --------------------------------------------------------------------------- 7
def criterion_7(seed: int = 0) -> CriterionResult:
    rng = random.Random(seed)
    round_trip_fail = verify_fail = 0
    stages = []
    for _ in range(100):
        sched = random_schedule(rng)
        stages.append(sched.stages)
        text = json.dumps(sched.to_json(), sort_keys=True)
        if not verify_schedule(json.loads(text)).ok:
            verify_fail += 1
        d = sched.d
        n = rng.randint(0, min(sched.M[-1] + 10, 3000)) if sched.M else rng.randint(0, 10)
        y = DigitStream.from_seed([tuple(2 * rng.randint(0, 50) + 1 for _ in range(d)) for _ in range(n)])
        if eliminate(insert(y, sched), sched) != y:
            round_trip_fail += 1
    return CriterionResult(7, "construction round trip and certificates",
                           round_trip_fail == 0 and verify_fail == 0,
                           {"schedules": 100, "round_trip_failures": round_trip_fail,
                            "verify_failures": verify_fail,
                            "stage_histogram": {str(k): stages.count(k) for k in sorted(set(stages))}})


# --------------------------------------------------------------------------- 8
def holder_schedule() -> ConstructionSchedule:
    """Single-stage d=1 schedule with M_1 from select_M(t=10, L=2, eps=1/2); W_1 is the whole window."""
    t, L, e = Fraction(10), Fraction(2), Fraction(1, 2)
    M = select_M(t, L, 1, e, 0)
    a, b = window_bounds(t, L, 1, 0, M)
    return ConstructionSchedule(t, L, 1, [e], [M], [[(v,) for v in range(a, b + 1)]],
                                seed=progression(2, 1).to_json()).certify()


def criterion_8(seed: int = 0) -> CriterionResult:
    sched = holder_schedule()
    sampler = odd_annulus_sampler(10, 2, 1)
    out, ok = {}, sched.certified
    for depth in (8, sched.M[0] + 8):
        r = empirical_holder(sched, sampler, depth, 0.9, 1000, seed=seed)
        ok &= r.stable(0.10)
        out[str(depth)] = {"C_1000": r.C_half, "C_2000": r.C, "relative_change": r.rel_change,
                           "skipped": r.skipped, "insertions_visible": depth > sched.M[0]}
    return CriterionResult(8, "empirical Hölder", bool(ok), {"M_1": sched.M[0], "W_1": [list(w) for w in sched.W[0]],
                                                            "depths": out})


# --------------------------------------------------------------------------- 9
def criterion_9(seed: int = 0) -> CriterionResult:
    rec = recovery_windows(naturals(), evens(), 2, Fraction(3, 2), 3)
    stage_ok = [abs(s.ratio - Fraction(1, 2)) <= Fraction(2, s.k) and s.ok for s in rec.stages]
    div = recovery_windows_div(full(2), Fraction(11, 10), Fraction(21, 20), 3)
    floors = []
    for s in div.stages:
        members = list(itertools.islice(s.window.iter_members(s.window.lo, s.window.hi), 2000))
        floors.append(s.window.floor == s.k and all(min(w) >= s.k for w in members))
    ok = (len(rec.stages) == 3 and all(stage_ok) and len(div.stages) == 3 and all(floors)
          and all(s.ok for s in div.stages))
    return CriterionResult(9, "density recovery", ok, {
        "relative": [{"k": s.k, "ratio": _f(s.ratio), "M_bits": s.M.bit_length()} for s in rec.stages],
        "divergence": [{"k": s.k, "ratio": _f(s.ratio), "floor": s.window.floor, "M": str(s.M)}
                       for s in div.stages],
        "floors_respected": floors,
    })


# -------------------------------------------------------------------------- 10
def _random_separated(rng: random.Random):
    d = rng.randint(1, 3)
    delta = Fraction(rng.randint(1, 20), rng.randint(1, 20))
    metric = rng.choice(("linf", "l2"))
    side = delta * rng.randint(1, 6)
    pts: list[tuple] = []
    for _ in range(rng.randint(1, 40)):
        cand = tuple(side * Fraction(rng.randint(0, 1000), 1000) for _ in range(d))
        far = all((max(abs(a - b) for a, b in zip(cand, p)) >= delta) if metric == "linf"
                  else sum((a - b) ** 2 for a, b in zip(cand, p)) >= delta * delta for p in pts)
        if far:
            pts.append(cand)
    return pts, delta, metric


def criterion_10(seed: int = 0) -> CriterionResult:
    rng = random.Random(seed)
    pack_fail = sib_fail = 0
    for _ in range(1000):
        pts, delta, metric = _random_separated(rng)
        if not packing_check(pts, delta, metric).ok:
            pack_fail += 1
    for _ in range(1000):
        d = rng.randint(1, 3)
        prefix = [tuple(rng.randint(1, 20) for _ in range(d)) for _ in range(rng.randint(0, 4))]
        v = tuple(rng.randint(1, 30) for _ in range(d))
        while True:
            w = tuple(rng.randint(1, 30) for _ in range(d))
            if max(abs(a - b) for a, b in zip(v, w)) >= 2:
                break
        if not sibling_separation_check(prefix, v, w, Fraction(1)).ok:
            sib_fail += 1
    return CriterionResult(10, "packing and sibling suites", pack_fail == 0 and sib_fail == 0,
                           {"packing_configs": 1000, "packing_failures": pack_fail,
                            "sibling_pairs": 1000, "sibling_failures": sib_fail})


# -------------------------------------------------------------------------- 11
SEEDED = (1, 7, 10)


def criterion_11(seed: int = 0) -> CriterionResult:
    """Re-run the seeded checks serially and in two worker processes and compare the bytes."""
    serial = [dumps(r.to_json()) for r in run_criteria(SEEDED, seed, jobs=1)]
    parallel = [dumps(r.to_json()) for r in run_criteria(SEEDED, seed, jobs=2)]
    again = [dumps(r.to_json()) for r in run_criteria(SEEDED, seed, jobs=1)]
    ok = serial == parallel == again
    return CriterionResult(11, "determinism", ok, {"criteria_compared": list(SEEDED),
                                                   "identical": ok})


CRITERIA: dict[int, Callable[[int], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11,
}


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _run_one(args) -> CriterionResult:
    cid, seed = args
    return CRITERIA[cid](seed)


def run_criteria(ids, seed: int = 0, jobs: int = 1) -> list[CriterionResult]:
    ids = list(ids)
    unknown = [i for i in ids if i not in CRITERIA]
    if unknown:
        from .errors import InvalidInput

        raise InvalidInput(f"unknown criterion ids {unknown}")
    if jobs <= 1 or len(ids) <= 1:
        return [CRITERIA[i](seed) for i in ids]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, [(i, seed) for i in ids]))


def report(results: list[CriterionResult], seed: int) -> dict:
    from .config import SCHEMA_VERSION

    return {"schema_version": SCHEMA_VERSION, "seed": seed,
            "all_passed": all(r.passed for r in results),
            "criteria": [r.to_json() for r in results]}
