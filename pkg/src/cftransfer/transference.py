"""Insertion/elimination constructions: factorial thinning, growth conditions, schedules,
digit streams, density-recovery windows and an empirical Hölder check."""

from __future__ import annotations

import itertools
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Callable, Iterable, Sequence

from mpmath import iv, mp

from .cf_core import as_rational, format_rational, prepend_digits
from .config import SCHEMA_VERSION, default_budget
from .cylinder_nd import as_vector, linf
from .digitset import (
    DifferenceSet,
    DigitSet,
    FilteredSet,
    NormWindow,
    ProductSet,
    iroot,
    progression,
    set_from_json,
)
from .errors import BudgetExceeded, CorruptionError, InvalidInput, PreconditionError, TruncationError
from .numerics import certainly_le, certainly_lt, iv_log, ivprec, ivq, to_float

DEFAULT_MAX_BITS = 4096
PRECISIONS = (128, 256, 512, 1024)


# ------------------------------------------------------------------- factorial blocks
def nu(xi) -> int:
    """The k with ``k! <= xi < (k+1)!``."""
    xi = as_rational(xi)
    if xi < 1:
        raise InvalidInput(f"nu is defined on [1, inf); got {xi}")
    k, fact = 1, 1
    while fact * (k + 1) <= xi:
        k += 1
        fact *= k
    return k


def _factorial(k: int) -> int:
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


def in_Q(n: int) -> bool:
    """Membership in ``Q = union_{k>=2} {k! + i k : 0 <= i < k!}``."""
    if n < 2:
        return False
    k = nu(n)
    return (n - _factorial(k)) % k == 0


@dataclass
class NuBoundRow:
    n: int
    nu: int
    log_scale: float  # n ln t
    slack: float | None  # (n ln t)^lambda - nu(t^n) at the chosen lambda


@dataclass
class NuBoundReport:
    t: Fraction
    lam: Fraction | None
    rows: list[NuBoundRow]
    per_n_min: list[Fraction | None]  # smallest grid value that works for each n alone

    @property
    def found(self) -> bool:
        return self.lam is not None


def _nu_ok(nu_val: int, n: int, lt, lam: Fraction):
    base = ivq(n) * lt
    val = iv.exp(ivq(lam) * iv.log(base))
    return certainly_le(ivq(nu_val), val), val


def nu_bound_check(t, n_max: int, grid: Sequence | None = None) -> NuBoundReport:
    """Smallest grid value λ with ``nu(t^n) <= (n ln t)^λ`` for all ``n <= n_max``."""
    t = as_rational(t)
    with ivprec(128):
        if not certainly_lt(iv.exp(iv.mpf(1)), ivq(t)):
            raise InvalidInput("the bound needs t > e")
        lt = iv_log(t)
        grid = [Fraction(i, 10) for i in range(11, 81)] if grid is None else [as_rational(g) for g in grid]
        nus = [nu(t ** n) for n in range(1, n_max + 1)]
        per_n: list[Fraction | None] = []
        for n, v in enumerate(nus, start=1):
            per_n.append(next((g for g in grid if _nu_ok(v, n, lt, g)[0]), None))
        lam = None
        if all(p is not None for p in per_n):
            lam = max(per_n)
            if not all(_nu_ok(v, n, lt, lam)[0] for n, v in enumerate(nus, start=1)):
                lam = next((g for g in grid if g >= lam and all(
                    _nu_ok(v, n, lt, g)[0] for n, v in enumerate(nus, start=1))), None)
        rows = []
        for n, v in enumerate(nus, start=1):
            slack = None
            if lam is not None:
                slack = to_float(_nu_ok(v, n, lt, lam)[1]) - v
            rows.append(NuBoundRow(n, v, float(n * to_float(lt)), slack))
    return NuBoundReport(t, lam, rows, per_n)


# --------------------------------------------------------------------- thin subsets
def is_two_separated(points: Iterable[Sequence[int]]) -> bool:
    """Whether distinct points are pairwise at sup-distance >= 2 (neighbour hashing)."""
    seen = set()
    offsets = None
    for p in points:
        p = tuple(p)
        if offsets is None:
            offsets = list(itertools.product((-1, 0, 1), repeat=len(p)))
        for off in offsets:
            if tuple(a + b for a, b in zip(p, off)) in seen:
                return False
        seen.add(p)
    return True


@dataclass
class Checkpoint:
    N: int
    count_S: int
    count_star: int
    nu: int
    ratio: Fraction
    lower: Fraction
    upper: Fraction

    @property
    def ok(self) -> bool:
        return self.lower <= self.ratio <= self.upper


@dataclass
class ThinSubsetResult:
    d: int
    horizon: int
    S_sep: list
    S_star: list
    positions: list[int]  # 1-based indices into S_sep, all in Q
    checkpoints: list[Checkpoint]

    @property
    def final_ok(self) -> bool:
        return bool(self.checkpoints) and self.checkpoints[-1].ok

    @property
    def first_failures(self) -> list[int]:
        return [c.N for c in self.checkpoints if not c.ok]


def thin_subset(S: DigitSet, R: int, checkpoints: Sequence[int] | None = None,
                budget: int | None = None) -> ThinSubsetResult:
    """Greedy 2-separation in canonical order, then keep the positions lying in Q."""
    if R < 1:
        raise InvalidInput("horizon must be positive")
    d = S.d
    offsets = [o for o in itertools.product((-1, 0, 1), repeat=d)]
    kept: set = set()
    sep = []
    all_norms = []
    for v in S.iter_members(1, R, budget):
        all_norms.append(max(v))
        if any(tuple(a + b for a, b in zip(v, o)) in kept for o in offsets):
            continue
        kept.add(v)
        sep.append(v)
    positions = [n for n in range(1, len(sep) + 1) if in_Q(n)]
    star = [sep[n - 1] for n in positions]
    star_norms = [max(v) for v in star]
    if checkpoints is None:
        checkpoints = sorted({2 ** i for i in range(1, R.bit_length()) if 2 ** i <= R} | {R})
    rows = []
    c1 = Fraction(1, 2 * 3 ** d)
    for N in checkpoints:
        if not 1 <= N <= R:
            raise InvalidInput(f"checkpoint {N} is outside [1, {R}]")
        cs = bisect_right(all_norms, N)
        if cs == 0:
            continue
        cstar = bisect_right(star_norms, N)
        k = nu(cs)
        rows.append(Checkpoint(N, cs, cstar, k, Fraction(cstar, cs), c1 / k, Fraction(4, k)))
    return ThinSubsetResult(d, R, sep, star, positions, rows)


# ----------------------------------------------------------------- growth conditions
@dataclass
class GrowthItem:
    name: str
    ok: bool
    certified: bool
    lhs: float
    rhs: float
    detail: str = ""


@dataclass
class GrowthReport:
    k: int | None
    items: dict[str, GrowthItem]

    @property
    def ok(self) -> bool:
        return all(i.ok for i in self.items.values())

    def flags(self) -> dict[str, bool]:
        return {name: item.ok for name, item in self.items.items()}


def _float(x) -> float:
    try:
        return float(x)
    except OverflowError:
        return float("inf")


def _exact_small(t: Fraction, M_prev: int, limit_bits: int = 50_000) -> bool:
    return M_prev * max(t.numerator.bit_length(), t.denominator.bit_length()) <= limit_bits


def _decide(compute):
    """Run ``compute()`` at increasing precision until it returns a decided verdict."""
    for bits in PRECISIONS:
        with ivprec(bits):
            verdict, lhs, rhs, detail = compute()
        if verdict is not None:
            return bool(verdict), True, lhs, rhs, detail
    return False, False, lhs, rhs, detail + " (undecided at maximal precision)"


def growth3_exponent(eps: Fraction, M: int) -> tuple[Fraction, int]:
    """Minimum over integers ``n >= M`` of ``(n+1)(n eps - 6)`` and a minimizer.

    The growth3 quotient equals ``t^((n+1)(n eps - 6))``; the quadratic in n is
    convex, so its integer minimum on ``[M, inf)`` is at M or next to the vertex.
    """
    eps = as_rational(eps)
    vertex = (6 - eps) / (2 * eps)
    cands = {M} | {n for n in (floor(vertex), floor(vertex) + 1) if n >= M}
    best = min(cands, key=lambda n: ((n + 1) * (n * eps - 6), n))
    return (best + 1) * (best * eps - 6), best


def growth3_direct_log(t, eps, n: int):
    """Log of the growth3 quotient at a single n, evaluated straight from the products."""
    t, eps = as_rational(t), as_rational(eps)
    lt = iv_log(t)
    log_num = -2 * sum(ivq(i + 2) for i in range(1, n + 2)) * lt
    log_P = -2 * ivq(n * (n + 1) // 2) * lt
    return log_num + ivq(3 * eps) * log_P - ivq(1 + 4 * eps) * log_P


def growth_check(t, L, d: int, M_prev: int, M: int, eps, W: Sequence | None = None,
                 k: int | None = None) -> GrowthReport:
    """Evaluate growth0-growth4 for one stage (growth4 only when W is given and non-empty)."""
    t, L, eps = as_rational(t), as_rational(L), as_rational(eps)
    if not (t > L > 1) or eps <= 0 or d < 1:
        raise InvalidInput("growth conditions need t > L > 1, eps > 0 and d >= 1")
    M_prev, M = int(M_prev), int(M)
    if M < 1 or M_prev < 0:
        raise InvalidInput("stage indices must satisfy M >= 1, M_prev >= 0")
    items: dict[str, GrowthItem] = {}
    exact = _exact_small(t, M_prev)
    X_exact = L * t ** M_prev if exact else None

    def logs():
        lt = iv_log(t)
        LX = iv_log(L) + ivq(M_prev) * lt
        X = iv.exp(LX)
        Y = iv.exp(iv_log(M) / (2 * d))
        return lt, LX, X, Y

    # growth0: L t^{M_prev} < M^{1/(2d)}
    if exact:
        lhs0 = X_exact ** (2 * d)
        items["growth0"] = GrowthItem("growth0", lhs0 < M, True, _float(lhs0), _float(M), "exact")
    else:
        def g0():
            lt, LX, X, Y = logs()
            return certainly_lt(2 * d * LX, iv_log(M)), to_float(2 * d * LX), to_float(iv_log(M)), "log domain"
        items["growth0"] = GrowthItem("growth0", *_decide(g0))

    # growth1: L t^{M_prev} + M^{1/(2d)} < t^M
    def g1():
        lt, LX, X, Y = logs()
        a, b = iv.log(X + Y), ivq(M) * lt
        return certainly_lt(a, b), to_float(a), to_float(b), "log domain"
    items["growth1"] = GrowthItem("growth1", *_decide(g1))

    # growth2: (X + Y + 1)^(-2^(d+1) sqrt M) >= t^(-3 eps (M + M_prev + 1)(M - M_prev))
    def g2():
        lt, LX, X, Y = logs()
        lhs = -(2 ** (d + 1)) * iv.sqrt(ivq(M)) * iv.log(X + Y + 1)
        rhs = -ivq(3 * eps) * ivq((M + M_prev + 1) * (M - M_prev)) * lt
        return certainly_le(rhs, lhs), to_float(lhs), to_float(rhs), "log domain"
    items["growth2"] = GrowthItem("growth2", *_decide(g2))

    # growth3 via the closed form t^((n+1)(n eps - 6))
    q, n_star = growth3_exponent(eps, M)

    def g3():
        lhs = ivq(q) * iv_log(t)
        rhs = iv_log(2)
        return certainly_le(rhs, lhs), to_float(lhs), to_float(rhs), f"infimum at n={n_star}"
    items["growth3"] = GrowthItem("growth3", *_decide(g3))

    if W:
        def g4():
            lhs = -2 * _log_int_product(max(w) + 1 for w in W)
            rhs = -ivq(3 * eps) * ivq((M + M_prev + 1) * (M - M_prev)) * iv_log(t)
            return certainly_le(rhs, lhs), to_float(lhs), to_float(rhs), f"|W|={len(W)}"
        items["growth4"] = GrowthItem("growth4", *_decide(g4))
    return GrowthReport(k, items)


def _log_int_product(values: Iterable[int], chunk: int = 512):
    """Enclosure of ``sum(log v)`` computed from exact chunked products."""
    total = iv.mpf(0)
    prod, n = 1, 0
    for v in values:
        prod *= int(v)
        n += 1
        if n == chunk:
            total += iv.log(iv.mpf(prod))
            prod, n = 1, 0
    if prod != 1:
        total += iv.log(iv.mpf(prod))
    return total


def _growth_ok(t, L, d, M_prev, M, eps) -> bool:
    return growth_check(t, L, d, M_prev, M, eps).ok


def select_M(t, L, d: int, eps, M_prev: int, max_bits: int = DEFAULT_MAX_BITS) -> int:
    """Smallest M passing growth0-growth3 (doubling, then bisection)."""
    t, L, eps = as_rational(t), as_rational(L), as_rational(eps)
    if not (t > L > 1):
        raise InvalidInput("need t > L > 1")
    if eps <= 0:
        raise InvalidInput("eps must be positive")
    if not _exact_small(t, M_prev):
        raise BudgetExceeded(f"growth0 alone needs M beyond 2^{max_bits} (M_prev={M_prev})")
    start = max(M_prev + 1, floor((L * t ** M_prev) ** (2 * d)) + 1)
    if start.bit_length() > max_bits:
        raise BudgetExceeded(f"growth0 needs M >= {start.bit_length()}-bit integer, beyond the cap")
    lo, hi = start - 1, start
    while not _growth_ok(t, L, d, M_prev, hi, eps):
        lo, hi = hi, 2 * hi
        if hi.bit_length() > max_bits:
            raise BudgetExceeded(f"no M below 2^{max_bits} passes growth0-growth3 "
                                 f"(t={t}, L={L}, d={d}, eps={eps}, M_prev={M_prev})")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid > M_prev and _growth_ok(t, L, d, M_prev, mid, eps):
            hi = mid
        else:
            lo = mid
    return hi


def window_bounds(t, L, d: int, M_prev: int, M: int) -> tuple[int, int]:
    """Integer sup-norm range of ``{L t^M_prev + 1 <= ||v|| <= L t^M_prev + M^(1/(2d))}``."""
    t, L = as_rational(t), as_rational(L)
    X = L * t ** M_prev
    f = floor(X)
    frac = X - f
    lo = f + 1 if frac == 0 else f + 2
    # largest j with j - frac <= M^(1/(2d))
    j = iroot(M, 2 * d)
    if j + 1 - frac <= 0 or (j + 1 - frac) ** (2 * d) <= M:
        j += 1
    return lo, f + j


@dataclass
class ProductBound:
    window: tuple[int, int]
    lhs_log: float
    rhs_log: float
    ok: bool


def wk_product_bound(t, L, d: int, M_prev: int, M: int, eps, check_preconditions: bool = True,
                     budget: int | None = None) -> ProductBound:
    """``prod_{w in I_k} ||w||^-2`` against ``(prod_{i=M_prev+1}^{M} t^-2i)^(3 eps)`` over the full window."""
    t, L, eps = as_rational(t), as_rational(L), as_rational(eps)
    if check_preconditions:
        rep = growth_check(t, L, d, M_prev, M, eps)
        if not (rep.items["growth0"].ok and rep.items["growth2"].ok):
            raise PreconditionError("growth0/growth2 fail for these data; see growth_check")
    a, b = window_bounds(t, L, d, M_prev, M)
    budget = default_budget() if budget is None else budget
    if b - a + 1 > budget:
        raise BudgetExceeded(f"window of {b - a + 1} norms exceeds the budget")

    def run():
        if a > b:
            lhs = iv.mpf(0)
        else:
            lhs = -2 * _log_int_product(
                itertools.chain.from_iterable(itertools.repeat(m, m ** d - (m - 1) ** d)
                                              for m in range(a, b + 1)))
        rhs = -ivq(3 * eps) * ivq((M + M_prev + 1) * (M - M_prev)) * iv_log(t)
        return certainly_le(rhs, lhs), to_float(lhs), to_float(rhs), ""

    ok, _, lhs, rhs, _ = _decide(run)
    return ProductBound((a, b), lhs, rhs, ok)


# ------------------------------------------------------------------------ schedules
def in_seed_annulus(t, L, m: int) -> bool:
    """Whether ``t^n <= m < L t^n`` for some n >= 1 (the norms a seed digit can take)."""
    import math

    t, L = as_rational(t), as_rational(L)
    if m < t:
        return False
    n0 = int(math.log(m) / math.log(t))
    return any(t ** n <= m < L * t ** n for n in range(max(1, n0 - 1), n0 + 2))


def _q(x) -> str:
    return format_rational(as_rational(x))


@dataclass
class ConstructionSchedule:
    """Stage data of an insertion construction; ``M`` and ``W`` are indexed from stage 1."""

    t: Fraction
    L: Fraction
    d: int
    eps: list[Fraction]
    M: list[int]
    W: list[list[tuple]]
    certificates: list[dict] = field(default_factory=list)
    seed: dict | None = None
    ambient: dict | None = None
    target: dict | None = None
    density: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.t, self.L = as_rational(self.t), as_rational(self.L)
        self.eps = [as_rational(e) for e in self.eps]
        self.M = [int(m) for m in self.M]
        self.W = [[as_vector(w, self.d) for w in block] for block in self.W]
        if not (len(self.eps) == len(self.M) == len(self.W)):
            raise InvalidInput("eps, M and W must have one entry per stage")

    @property
    def stages(self) -> int:
        return len(self.M)

    def M_prev(self, k: int) -> int:
        return 0 if k == 1 else self.M[k - 2]

    def compute_certificates(self) -> list[dict]:
        seed = set_from_json(self.seed) if self.seed else None
        out = []
        seen: set = set()
        for k in range(1, self.stages + 1):
            M, Mp, W = self.M[k - 1], self.M_prev(k), self.W[k - 1]
            cert = {"increasing": M > Mp,
                    "eps_decreasing": self.eps[k - 1] > 0 and (k == 1 or self.eps[k - 1] <= self.eps[k - 2])}
            if M > Mp:
                rep = growth_check(self.t, self.L, self.d, Mp, M, self.eps[k - 1], W, k)
                cert.update(rep.flags())
            else:
                cert.update({f"growth{i}": False for i in range(4)})
            cert["blocks_disjoint"] = len(set(W)) == len(W) and not (set(W) & seen)
            seen |= set(W)
            if seed is not None:
                cert["seed_disjoint"] = not any(
                    seed.contains(w) and in_seed_annulus(self.t, self.L, max(w)) for w in W)
            out.append(cert)
        return out

    def certify(self) -> "ConstructionSchedule":
        self.certificates = self.compute_certificates()
        return self

    @property
    def certified(self) -> bool:
        return bool(self.certificates) and len(self.certificates) == self.stages and all(
            all(v for v in c.values()) for c in self.certificates)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "t": _q(self.t),
            "L": _q(self.L),
            "d": self.d,
            "eps": [_q(e) for e in self.eps],
            "M": [str(m) for m in self.M],
            "W": [[list(w) for w in block] for block in self.W],
            "certificates": self.certificates,
            "seed": self.seed,
            "ambient": self.ambient,
            "target": self.target,
            "density": self.density,
            "notes": self.notes,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConstructionSchedule":
        try:
            return cls(as_rational(data["t"]), as_rational(data["L"]), int(data["d"]),
                       [as_rational(e) for e in data["eps"]], [int(m) for m in data["M"]],
                       [[tuple(w) for w in block] for block in data["W"]],
                       list(data.get("certificates", [])), data.get("seed"), data.get("ambient"),
                       data.get("target"), list(data.get("density", [])), list(data.get("notes", [])))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed schedule: {exc}") from None


@dataclass
class VerifyReport:
    ok: bool
    mismatches: list[str]
    failures: list[str]


def verify_schedule(data: dict | ConstructionSchedule) -> VerifyReport:
    """Recompute every certificate from the serialized schedule and compare."""
    sched = data if isinstance(data, ConstructionSchedule) else ConstructionSchedule.from_json(data)
    fresh = sched.compute_certificates()
    mismatches, failures = [], []
    if len(sched.certificates) != len(fresh):
        mismatches.append(f"{len(sched.certificates)} stored certificate sets for {len(fresh)} stages")
    for k, (old, new) in enumerate(itertools.zip_longest(sched.certificates, fresh, fillvalue={}), start=1):
        for key in sorted(set(old) | set(new)):
            if old.get(key) != new.get(key):
                mismatches.append(f"stage {k} {key}: stored {old.get(key)} recomputed {new.get(key)}")
        failures += [f"stage {k} {key}" for key, v in new.items() if not v]
    return VerifyReport(not mismatches and not failures, mismatches, failures)


# ---------------------------------------------------------------- witness searches
def _search_radius(r: int, m_min: int, ok: Callable[[int], bool], scan: int, max_bits: int) -> int | None:
    base = max(r + 2, r + m_min)
    while base.bit_length() <= max_bits:
        for R in range(base, base + scan):
            if ok(R):
                return R
        base *= 2
    return None


@dataclass
class RecoveryStage:
    k: int
    r_min: int
    radius: int  # L_{j_k} (or R_k)
    m: int
    M: int
    window: NormWindow
    count: int
    ratio: Fraction
    lower_target: Fraction

    @property
    def ok(self) -> bool:
        return self.ratio > self.lower_target

    def to_json(self) -> dict:
        return {"k": self.k, "r_min": str(self.r_min), "radius": str(self.radius), "m": str(self.m),
                "M": str(self.M), "count": str(self.count), "ratio": _q(self.ratio),
                "ratio_float": float(self.ratio), "lower_target": _q(self.lower_target),
                "floor": self.window.floor}


@dataclass
class RecoveryResult:
    target: Fraction
    stages: list[RecoveryStage]
    partial: bool
    notes: list[str] = field(default_factory=list)

    @property
    def M(self) -> list[int]:
        return [s.M for s in self.stages]

    def to_json(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "target": _q(self.target), "partial": self.partial,
                "stages": [s.to_json() for s in self.stages], "notes": self.notes}


def _estimate_relative(A2: DigitSet, A1: DigitSet, horizon: int, budget) -> Fraction:
    denom = A1.count_cube(horizon, budget)
    if denom == 0:
        raise InvalidInput("ambient set is empty at the estimation horizon")
    return Fraction(A2.count_cube(horizon, budget), denom)


def recovery_windows(A1: DigitSet, A2: DigitSet, t, L, stages: int, target=None,
                     estimate_horizon: int = 4096, scan: int = 64,
                     max_bits: int = DEFAULT_MAX_BITS, budget: int | None = None) -> RecoveryResult:
    """Stage windows ``W_k = A2 ∩ I_k`` whose union recovers the relative density of A2 in A1."""
    t, L = as_rational(t), as_rational(L)
    if not (t > L > 1):
        raise InvalidInput("need t > L > 1")
    if A1.d != A2.d:
        raise InvalidInput("sets have different dimensions")
    d = A1.d
    delta = _estimate_relative(A2, A1, estimate_horizon, budget) if target is None else as_rational(target)
    out, notes = [], []
    M_prev = 0
    prev_windows: list[NormWindow] = []
    for k in range(1, stages + 1):
        r = floor(L * t ** M_prev)
        base = A1.count_cube(r, budget)
        m_min = iroot(M_prev, 2 * d) + 1  # keeps M_k = m^(2d) > M_{k-1}
        tol = Fraction(1, k)

        def ok(R):
            den = A1.count_cube(R, budget)
            return den > 0 and abs(Fraction(A2.count_cube(R, budget), den) - delta) < tol \
                and Fraction(base, den) < tol

        R = _search_radius(r, m_min, ok, scan, max_bits)
        if R is None:
            notes.append(f"stage {k}: no witness radius found below 2^{max_bits}")
            return RecoveryResult(delta, out, True, notes)
        m = R - r
        window = NormWindow(A2, r + 1, R)
        count = window.count_cube(R, budget)
        union = count + sum(w.count_cube(R, budget) for w in prev_windows)
        ratio = Fraction(union, A1.count_cube(R, budget))
        if count == 0:
            notes.append(f"stage {k}: empty window")
        out.append(RecoveryStage(k, r, R, m, m ** (2 * d), window, count, ratio, delta - 2 * tol))
        prev_windows.append(window)
        M_prev = m ** (2 * d)
    return RecoveryResult(delta, out, False, notes)


def recovery_windows_div(A: DigitSet, t, L, stages: int, target=None, estimate_horizon: int = 1024,
                         scan: int = 64, max_bits: int = DEFAULT_MAX_BITS,
                         budget: int | None = None) -> RecoveryResult:
    """As ``recovery_windows`` against all of N^d, keeping only vectors with min coordinate >= k."""
    t, L = as_rational(t), as_rational(L)
    if not (t > L > 1):
        raise InvalidInput("need t > L > 1")
    d = A.d
    delta = (Fraction(A.count_cube(estimate_horizon, budget), estimate_horizon ** d)
             if target is None else as_rational(target))
    out, notes = [], []
    M_prev = 0
    prev: list[NormWindow] = []
    for k in range(1, stages + 1):
        r = floor(L * t ** M_prev)
        m_min = iroot(M_prev, 2 * d) + 1
        tol = Fraction(1, k)

        def ok(R):
            thick = A.count_rect((k,) * d, (R,) * d, budget)
            return abs(Fraction(thick, R ** d) - delta) < tol and Fraction(r ** d, R ** d) < tol

        R = _search_radius(r, m_min, ok, scan, max_bits)
        if R is None:
            notes.append(f"stage {k}: no witness radius found below 2^{max_bits}")
            return RecoveryResult(delta, out, True, notes)
        m = R - r
        window = NormWindow(A, r + 1, R, floor_=k)
        count = window.count_cube(R, budget)
        for i, w in enumerate(window.iter_members(r + 1, R, budget)):
            if i >= 1000:
                break
            if min(w) < k:
                raise CorruptionError(f"window member {w} violates the floor {k}")
        union = count + sum(w.count_cube(R, budget) for w in prev)
        if count == 0:
            notes.append(f"stage {k}: empty window")
        out.append(RecoveryStage(k, r, R, m, m ** (2 * d), window, count,
                                 Fraction(union, R ** d), delta - 2 * tol))
        prev.append(window)
        M_prev = m ** (2 * d)
    return RecoveryResult(delta, out, False, notes)


# ----------------------------------------------------------------------- construct
def default_seed(A1: DigitSet, A2: DigitSet) -> DigitSet:
    """Seed alphabet ``A1 minus A2`` (e.g. the odd numbers when A2 is the evens)."""
    return DifferenceSet(A1, A2)


def construct(A1: DigitSet, A2: DigitSet, t, L, stages: int, seed: DigitSet | None = None,
              eps: Sequence | None = None, target=None, estimate_horizon: int = 4096,
              max_bits: int = DEFAULT_MAX_BITS, block_cap: int = 100_000, scan: int = 64,
              budget: int | None = None) -> ConstructionSchedule:
    """Build a certified schedule: minimal growth M_k, then the density witness, as perfect powers.

    At stage k the growth-minimal ``M`` is rounded up to ``m^(2d)``, the
    window radius ``r + m`` is pushed out until both 1/k conditions hold, and
    growth0-growth3 are re-checked; ``W_k`` lists ``(A2 ∩ I_k) minus seed``
    in canonical order. Stages that cannot be materialised end the schedule.
    """
    t, L = as_rational(t), as_rational(L)
    if not (t > L > 1):
        raise InvalidInput("need t > L > 1")
    d = A1.d
    seed = default_seed(A1, A2) if seed is None else seed
    if isinstance(seed, DifferenceSet) and seed.removed is A2:
        pool = A2
    else:
        pool = FilteredSet(A2, lambda v: not seed.contains(v), "not-seed")
    delta = _estimate_relative(pool, A1, estimate_horizon, budget) if target is None else as_rational(target)
    eps_list = [as_rational(e) for e in eps] if eps is not None else [Fraction(1, k) for k in range(1, stages + 1)]
    Ms, Ws, used_eps, density, notes = [], [], [], [], []
    M_prev = 0
    windows: list[NormWindow] = []
    for k in range(1, stages + 1):
        e = eps_list[k - 1]
        try:
            M_g = select_M(t, L, d, e, M_prev, max_bits)
            if not _exact_small(t, M_prev):
                raise BudgetExceeded(f"window offset L t^{M_prev} is too large to materialise")
            r = floor(L * t ** M_prev)
            base = A1.count_cube(r, budget)
        except BudgetExceeded as exc:
            notes.append(f"stage {k} not built: {exc}")
            break
        tol = Fraction(1, k)
        m = iroot(M_g - 1, 2 * d) + 1

        def dens_ok(R):
            den = A1.count_cube(R, budget)
            return den > 0 and abs(Fraction(pool.count_cube(R, budget), den) - delta) < tol \
                and Fraction(base, den) < tol

        R = _search_radius(r, m, dens_ok, scan, max_bits)
        if R is None:
            notes.append(f"stage {k} not built: no density witness")
            break
        m = R - r
        while not _growth_ok(t, L, d, M_prev, m ** (2 * d), e):
            m += 1
            if not dens_ok(r + m):
                R2 = _search_radius(r + m, 1, dens_ok, scan, max_bits)
                if R2 is None:
                    break
                m = R2 - r
        M = m ** (2 * d)
        window = NormWindow(pool, r + 1, r + m)
        size = window.count_cube(r + m, budget)
        if size > block_cap:
            notes.append(f"stage {k} not built: block of {size} vectors exceeds the cap {block_cap}")
            break
        W = list(window.iter_members(r + 1, r + m, budget))
        union = size + sum(w.count_cube(r + m, budget) for w in windows)
        ratio = Fraction(union, A1.count_cube(r + m, budget))
        density.append({"k": k, "radius": str(r + m), "ratio": _q(ratio), "ratio_float": float(ratio),
                        "lower_target": _q(delta - 2 * tol), "ok": ratio > delta - 2 * tol})
        windows.append(window)
        Ms.append(M)
        Ws.append(W)
        used_eps.append(e)
        M_prev = M
    sched = ConstructionSchedule(t, L, d, used_eps, Ms, Ws, seed=seed.to_json(), ambient=A1.to_json(),
                                 target=A2.to_json(), density=density, notes=notes)
    return sched.certify()


def random_schedule(rng: random.Random, max_stages: int = 5, d: int | None = None,
                    max_bits: int = 600) -> ConstructionSchedule:
    """A random certified schedule; blocks are small random subsets of the insertion windows.

    Block vectors have an even coordinate and the seed alphabet is the
    all-odd vectors, so blocks never meet the seed.
    """
    d = d or rng.choice((1, 2))
    t = rng.choice((Fraction(11, 10), Fraction(11, 10), Fraction(6, 5), Fraction(3, 2), Fraction(2), Fraction(10)))
    L = 1 + (t - 1) * Fraction(rng.randint(1, 9), 10)
    n_stages = rng.randint(1, max_stages)
    eps, e = [], Fraction(rng.randint(1, 4), 2)
    for _ in range(n_stages):
        eps.append(e)
        e = e * Fraction(rng.randint(2, 4), 4)
    seed = ProductSet([progression(2, 1)] * d) if d > 1 else progression(2, 1)
    Ms, Ws = [], []
    M_prev = 0
    for k in range(n_stages):
        try:
            M = select_M(t, L, d, eps[k], M_prev, max_bits) + rng.randint(0, 3)
            if not _exact_small(t, M_prev, 4000):
                break
        except BudgetExceeded:
            break
        a, b = window_bounds(t, L, d, M_prev, M)
        W: list[tuple] = []
        if a <= b:
            for _ in range(rng.randint(0, 4)):
                v = [rng.randint(1, b) for _ in range(d)]
                v[rng.randrange(d)] = rng.randint(a, b)
                v = tuple(v)
                if not seed.contains(v) and v not in W:
                    W.append(v)
        Ms.append(M)
        Ws.append(W)
        M_prev = M
    n = len(Ms)
    return ConstructionSchedule(t, L, d, eps[:n], Ms, Ws, seed=seed.to_json()).certify()


# ---------------------------------------------------------------------- digit streams
@dataclass(frozen=True)
class DigitStream:
    """Finite run of digit vectors with a provenance tag per position.

    Tags are ``("seed", i)`` (the i-th seed vector, from 0) or
    ``("inserted", k, j)`` (the j-th vector of block k).
    """

    vectors: tuple
    tags: tuple

    def __post_init__(self):
        if len(self.vectors) != len(self.tags):
            raise InvalidInput("stream vectors and tags differ in length")

    def __len__(self) -> int:
        return len(self.vectors)

    @classmethod
    def from_seed(cls, vectors: Sequence) -> "DigitStream":
        vecs = tuple(tuple(v) for v in vectors)
        return cls(vecs, tuple(("seed", i) for i in range(len(vecs))))

    def prefix(self, n: int) -> "DigitStream":
        return DigitStream(self.vectors[:n], self.tags[:n])

    def is_injective(self) -> bool:
        return len(set(self.vectors)) == len(self.vectors)


def insert(seed: DigitStream, sched: ConstructionSchedule, strict: bool = False) -> DigitStream:
    """Place block W_k right after the M_k-th seed vector.

    Blocks lying beyond a short seed prefix are left out (the result is then
    a prefix of the infinite stream); with ``strict`` that is an error.
    """
    if any(tag != ("seed", i) for i, tag in enumerate(seed.tags)):
        raise CorruptionError("insert expects a pure seed stream")
    n = len(seed)
    vecs, tags = [], []
    pos = 0
    for k in range(1, sched.stages + 1):
        M = sched.M[k - 1]
        if M <= pos and k > 1:
            raise InvalidInput("stage indices must increase")
        if M > n:
            if strict:
                raise TruncationError(f"seed prefix of length {n} ends before M_{k}={M}; "
                                      f"last complete stage is {k - 1}")
            break
        vecs.extend(seed.vectors[pos:M])
        tags.extend(seed.tags[pos:M])
        for j, w in enumerate(sched.W[k - 1]):
            vecs.append(tuple(w))
            tags.append(("inserted", k, j))
        pos = M
    vecs.extend(seed.vectors[pos:])
    tags.extend(seed.tags[pos:])
    return DigitStream(tuple(vecs), tuple(tags))


def eliminate(x: DigitStream, sched: ConstructionSchedule) -> DigitStream:
    """Delete the inserted blocks, checking that every position matches the schedule."""
    out_v, out_t = [], []
    seen_seed = 0
    k = 1
    i = 0
    n = len(x)
    while i < n:
        if k <= sched.stages and seen_seed == sched.M[k - 1]:
            for j, w in enumerate(sched.W[k - 1]):
                if i >= n:
                    break
                if x.tags[i] != ("inserted", k, j) or tuple(x.vectors[i]) != tuple(w):
                    raise CorruptionError(f"position {i}: expected entry {j} of block {k}, "
                                          f"found {x.tags[i]} {x.vectors[i]}")
                i += 1
            k += 1
            continue
        if x.tags[i] != ("seed", seen_seed):
            raise CorruptionError(f"position {i}: expected seed vector {seen_seed}, found tag {x.tags[i]}")
        out_v.append(x.vectors[i])
        out_t.append(x.tags[i])
        seen_seed += 1
        i += 1
    return DigitStream(tuple(out_v), tuple(out_t))


ANCHOR = Fraction(1, 2)


def realize(vectors: Sequence[Sequence[int]], d: int, anchor=ANCHOR) -> tuple[Fraction, ...]:
    """Rational point with the given digit vectors followed by ``anchor`` in every coordinate."""
    if not vectors:
        return (as_rational(anchor),) * d
    return tuple(prepend_digits(anchor, [v[j] for v in vectors]) for j in range(d))


# ------------------------------------------------------------------- Hölder evidence
def odd_annulus_sampler(t, L, d: int) -> Callable[[random.Random, int], tuple]:
    """Uniform all-odd vector with sup-norm in ``[t^n, L t^n)``."""
    t, L = as_rational(t), as_rational(L)

    def sample(rng: random.Random, n: int) -> tuple:
        from math import ceil

        lo, hi = ceil(t ** n), ceil(L * t ** n) - 1
        odd_lo = lo if lo % 2 else lo + 1
        odd_hi = hi if hi % 2 else hi - 1
        if odd_lo > odd_hi:
            raise InvalidInput(f"annulus {n} has no odd values")
        while True:
            v = tuple(2 * rng.randint(0, (odd_hi - 1) // 2) + 1 for _ in range(d))
            j = rng.randrange(d)
            v = v[:j] + (2 * rng.randint((odd_lo - 1) // 2, (odd_hi - 1) // 2) + 1,) + v[j + 1:]
            if lo <= max(v) <= hi:
                return v

    return sample


@dataclass
class HolderReport:
    gamma: float
    depth: int
    C_half: float
    C: float
    rel_change: float
    margin: float  # largest second-half ratio minus the first-half fit
    pairs: int
    skipped: int
    worst_split: int | None  # common seed-prefix length of the worst pair

    @property
    def finite(self) -> bool:
        return self.C < float("inf")

    def stable(self, tol: float = 0.10) -> bool:
        return self.finite and self.rel_change < tol


def _log_fraction(x: Fraction):
    return mp.log(x.numerator) - mp.log(x.denominator)


def empirical_holder(sched: ConstructionSchedule, sampler: Callable[[random.Random, int], tuple],
                     depth: int, gamma: float, n_pairs: int, seed: int = 0) -> HolderReport:
    """Fit ``C = max |f(x1)-f(x2)| / |x1-x2|^gamma`` on n_pairs pairs and again on 2 n_pairs.

    Points are realized from depth-``depth`` prefixes of inserted streams;
    each pair shares a random number of leading seed vectors.
    """
    if not 0 < gamma < 1:
        raise InvalidInput("gamma must lie in (0, 1)")
    rng = random.Random(seed)
    d = sched.d
    n_seed = depth  # enough seed vectors to fill ``depth`` stream positions
    probe = insert(DigitStream.from_seed([(1,) * d] * n_seed), sched).prefix(depth)
    visible = sum(1 for tag in probe.tags if tag[0] == "seed")
    ratios: list[tuple[float, int]] = []
    skipped = 0
    old = mp.prec
    mp.prec = 80
    try:
        while len(ratios) < 2 * n_pairs:
            split = rng.randrange(visible)
            common = [sampler(rng, n) for n in range(1, split + 1)]
            a = common + [sampler(rng, n) for n in range(split + 1, n_seed + 1)]
            b = common + [sampler(rng, n) for n in range(split + 1, n_seed + 1)]
            xa = insert(DigitStream.from_seed(a), sched).prefix(depth)
            xb = insert(DigitStream.from_seed(b), sched).prefix(depth)
            pa, pb = realize(xa.vectors, d), realize(xb.vectors, d)
            dx = max(abs(u - v) for u, v in zip(pa, pb))
            if dx == 0:
                skipped += 1
                continue
            fa = realize(eliminate(xa, sched).vectors, d)
            fb = realize(eliminate(xb, sched).vectors, d)
            df = max(abs(u - v) for u, v in zip(fa, fb))
            if df == 0:
                ratios.append((0.0, split))
                continue
            ratios.append((float(mp.exp(_log_fraction(df) - gamma * _log_fraction(dx))), split))
    finally:
        mp.prec = old
    first = max(r for r, _ in ratios[:n_pairs])
    second = max(r for r, _ in ratios[n_pairs:])
    total = max(first, second)
    worst = max(ratios, key=lambda p: p[0])[1]
    change = (total - first) / first if first > 0 else (0.0 if total == 0 else float("inf"))
    return HolderReport(gamma, depth, first, total, change, second - first, len(ratios), skipped, worst)


def check_vector_injective(stream: DigitStream) -> bool:
    """No digit vector appears twice in the stream."""
    return stream.is_injective()


__all__ = [
    "ANCHOR", "Checkpoint", "ConstructionSchedule", "DigitStream", "GrowthItem", "GrowthReport",
    "HolderReport", "NuBoundReport", "ProductBound", "RecoveryResult", "RecoveryStage",
    "ThinSubsetResult", "VerifyReport", "check_vector_injective", "construct", "default_seed",
    "eliminate", "empirical_holder", "growth3_direct_log", "growth3_exponent", "growth_check",
    "in_Q", "in_seed_annulus", "insert", "is_two_separated", "nu", "nu_bound_check", "odd_annulus_sampler",
    "random_schedule", "realize", "recovery_windows", "recovery_windows_div", "select_M",
    "thin_subset", "verify_schedule", "window_bounds", "wk_product_bound",
]
