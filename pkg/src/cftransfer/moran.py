"""Moran constructions: the lower-bound ratio, packing counts, seed annuli and cylinder trees."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import Callable, Sequence

from mpmath import iv, mp

from .cf_core import Interval, as_rational, format_rational, golden_length_bound
from .config import SCHEMA_VERSION, default_budget
from .cylinder_nd import (
    CylinderND,
    box_distance_linf,
    cylinder_nd,
    diameter,
    linf,
    sibling_separation_check,
)
from .digitset import DigitSet
from .errors import BudgetExceeded, CheckFailure, InvalidInput
from .numerics import as_fraction, ivprec, ivq
from .numerics import lo as _lo


# ------------------------------------------------------------------ Moran specs
@dataclass
class MoranSpec:
    """Branching numbers ``r(n) >= 2`` and strictly decreasing gaps ``delta(n)`` for n >= 1."""

    d: int
    r: Callable[[int], int]
    delta: Callable[[int], Fraction]
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_lists(cls, d: int, r: Sequence[int], delta: Sequence, meta: dict | None = None) -> "MoranSpec":
        r = list(r)
        delta = [as_rational(x) for x in delta]
        if len(r) != len(delta):
            raise InvalidInput("branching and gap lists differ in length")

        def get(seq, n):
            if not 1 <= n <= len(seq):
                raise InvalidInput(f"level {n} is beyond the {len(seq)} stored levels")
            return seq[n - 1]

        out = cls(d, lambda n: get(r, n), lambda n: get(delta, n), dict(meta or {}))
        out.meta.setdefault("levels", len(r))
        return out

    @classmethod
    def cantor(cls) -> "MoranSpec":
        """Middle-third Cantor set: two children, gaps 3^-n."""
        return cls(1, lambda n: 2, lambda n: Fraction(1, 3 ** n), {"name": "cantor"})


@dataclass
class MoranRow:
    n: int
    L_n: float
    ratio: float
    tail_min: float = 0.0


@dataclass
class MoranReport:
    d: int
    rows: list[MoranRow]
    contraction_index: int | None  # first n with L_m < 1 for every stored m >= n
    max_ratio_after: float | None
    meta: dict = field(default_factory=dict)

    def ratio_at(self, n: int) -> float:
        for row in self.rows:
            if row.n == n:
                return row.ratio
        raise KeyError(n)

    def bounded_by(self, slack: float = 0.05) -> bool:
        return self.max_ratio_after is None or self.max_ratio_after <= self.d + slack

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "d": self.d,
            "contraction_index": self.contraction_index,
            "max_ratio_after": self.max_ratio_after,
            "rows": [{"n": r.n, "L_n": r.L_n, "ratio": r.ratio, "tail_min": r.tail_min}
                     for r in self.rows],
            "meta": self.meta,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "L_n", "ratio", "tail_min"])
        for r in self.rows:
            w.writerow([r.n, repr(r.L_n), repr(r.ratio), repr(r.tail_min)])
        return buf.getvalue()


def _log_q(x: Fraction):
    return mp.log(x.numerator) - mp.log(x.denominator)


def moran_lower_bound(spec: MoranSpec, n_max: int, precision_bits: int = 96) -> MoranReport:
    """``ratio_n = log(r_1 ... r_{n-1}) / -log(r_n^(1/d) delta_n)`` for 2 <= n <= n_max.

    Also returns the tail minima ``min_{n <= m <= n_max} ratio_m`` (the liminf
    proxy) and the largest ratio from the first index after which
    ``L_n = r_n^(1/d) delta_n < 1`` throughout.
    """
    if n_max < 2:
        raise InvalidInput("need n_max >= 2")
    d = spec.d
    old = mp.prec
    mp.prec = precision_bits
    try:
        rs = [int(spec.r(n)) for n in range(1, n_max + 1)]
        ds = [as_rational(spec.delta(n)) for n in range(1, n_max + 1)]
        for n, (r, delta) in enumerate(zip(rs, ds), start=1):
            if r < 2:
                raise InvalidInput(f"r_{n} = {r} is not a Moran branching (needs >= 2)")
            if delta <= 0:
                raise InvalidInput(f"delta_{n} is not positive")
            if n > 1 and not delta < ds[n - 2]:
                raise InvalidInput(f"gaps are not strictly decreasing at n={n}")
        log_prod = mp.mpf(0)
        rows = []
        logL = []
        for n in range(1, n_max + 1):
            r, delta = rs[n - 1], ds[n - 1]
            lL = mp.log(r) / d + _log_q(delta)
            logL.append(lL)
            if n >= 2:
                ratio = log_prod / (-lL) if lL < 0 else mp.inf
                rows.append(MoranRow(n, float(mp.exp(lL)), float(ratio)))
            log_prod += mp.log(r)
    finally:
        mp.prec = old
    m = float("inf")
    for row in reversed(rows):
        m = min(m, row.ratio)
        row.tail_min = m
    idx = None
    for n in range(n_max, 0, -1):
        if logL[n - 1] < 0:
            idx = n
        else:
            break
    after = [row.ratio for row in rows if idx is not None and row.n >= idx]
    return MoranReport(d, rows, idx, max(after) if after else None, dict(spec.meta))


# --------------------------------------------------------------------- packing
@dataclass
class PackingReport:
    count: int
    diameter: Fraction | float
    bound: float
    ok: bool


def packing_check(points: Sequence[Sequence], delta, metric: str = "linf") -> PackingReport:
    """Check ``#A <= 3^d (diam(A)/delta + 1)^d`` for a delta-separated finite set A."""
    pts = [tuple(as_rational(x) for x in p) for p in points]
    delta = as_rational(delta)
    if delta <= 0:
        raise InvalidInput("delta must be positive")
    if not pts:
        return PackingReport(0, Fraction(0), 0.0, True)
    d = len(pts[0])
    if any(len(p) != d for p in pts):
        raise InvalidInput("points have different dimensions")
    if metric not in ("linf", "l2"):
        raise InvalidInput(f"unknown metric {metric!r}")

    def dist_key(p, q):
        diffs = [abs(a - b) for a, b in zip(p, q)]
        return max(diffs) if metric == "linf" else sum(x * x for x in diffs)

    thresh = delta if metric == "linf" else delta * delta
    diam_key = Fraction(0)
    for p, q in itertools.combinations(pts, 2):
        k = dist_key(p, q)
        if k < thresh:
            raise CheckFailure(f"points {p} and {q} are closer than delta")
        diam_key = max(diam_key, k)
    n = len(pts)
    if metric == "linf":
        bound = 3 ** d * (diam_key / delta + 1) ** d
        return PackingReport(n, diam_key, float(bound), n <= bound)
    with ivprec(128):
        D = iv.sqrt(ivq(diam_key))
        bound = ivq(3) ** d * (D / ivq(delta) + 1) ** d
        ok = n <= _lo(bound)
    return PackingReport(n, float(mp.sqrt(diam_key.numerator) / mp.sqrt(diam_key.denominator)),
                         float(_lo(bound)), bool(ok))


# ------------------------------------------------------------------- seed sets
@dataclass
class SeedParams:
    t: Fraction
    L: Fraction
    K: DigitSet
    depth_cap: int = 64

    def __post_init__(self):
        self.t = as_rational(self.t)
        self.L = as_rational(self.L)
        if not (self.t > self.L > 1):
            raise InvalidInput("seed parameters need t > L > 1")

    def norm_range(self, n: int) -> tuple[int, int]:
        """Integer sup-norms in ``[t^n, L t^n)``."""
        a = ceil(self.t ** n)
        b = ceil(self.L * self.t ** n) - 1
        return a, b

    @property
    def d(self) -> int:
        return self.K.d


def seed_annuli(p: SeedParams, n_max: int, budget: int | None = None) -> list[int]:
    """Exact ``|A_n|`` for ``A_n = K ∩ {t^n <= ||v||_inf < L t^n}``, n = 1..n_max."""
    if n_max > p.depth_cap:
        raise InvalidInput(f"n_max exceeds the depth cap {p.depth_cap}")
    out = []
    for n in range(1, n_max + 1):
        a, b = p.norm_range(n)
        out.append(p.K.count_norm_between(a, b, 1, budget))
    return out


def seed_delta(p: SeedParams, n: int, c_prime=Fraction(1)) -> Fraction:
    """``c' (2L)^(-2n) t^(-n(n+1))``."""
    return as_rational(c_prime) / ((2 * p.L) ** (2 * n) * p.t ** (n * (n + 1)))


def seed_moran_spec(p: SeedParams, alpha_declared: float | None, n_max: int,
                    budget: int | None = None) -> MoranSpec:
    """Moran data of the seed fractal: annulus counts and the gaps ``(2L)^-2n t^-n(n+1)``."""
    r = seed_annuli(p, n_max, budget)
    for n, c in enumerate(r, start=1):
        if c < 2:
            raise InvalidInput(f"annulus {n} has {c} members; not a Moran branching")
    delta = [seed_delta(p, n) for n in range(1, n_max + 1)]
    meta = {"c_prime": "1", "t": format_rational(p.t), "L": format_rational(p.L)}
    if alpha_declared:
        meta["alpha_declared"] = alpha_declared
        meta["predicted_limit"] = p.d / (2 * alpha_declared)
    return MoranSpec.from_lists(p.d, r, delta, meta)


# ------------------------------------------------------------------ trees
@dataclass
class TreeNode:
    word: tuple
    parent: int | None
    cylinder: CylinderND


@dataclass
class LevelCertificate:
    level: int
    nodes: int
    branching: int
    annulus_count: int
    subsampled: bool
    nested: bool
    in_annulus: bool
    separated: bool
    separation_kind: str
    mesh: Fraction
    mesh_ok: bool

    @property
    def ok(self) -> bool:
        return self.nested and self.in_annulus and self.separated and self.mesh_ok


@dataclass
class CylinderTree:
    d: int
    levels: list[list[TreeNode]]
    certificates: list[LevelCertificate]
    truncated: bool
    branching_cap: int | None

    @property
    def node_count(self) -> int:
        return sum(len(level) for level in self.levels)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.certificates)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "d": self.d,
            "truncated": self.truncated,
            "branching_cap": self.branching_cap,
            "levels": [[{"word": [list(v) for v in n.word], "parent": n.parent,
                         "factors": [f.to_json() for f in n.cylinder.factors]} for n in level]
                       for level in self.levels],
            "certificates": [{**c.__dict__, "mesh": format_rational(c.mesh)} for c in self.certificates],
        }

    def leaf_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["word"]
        for j in range(self.d):
            header += [f"lo{j + 1}", f"hi{j + 1}"]
        w.writerow(header)
        for node in self.levels[-1]:
            row = [" ".join(",".join(map(str, v)) for v in node.word)]
            for f in node.cylinder.factors:
                row += [format_rational(f.lo), format_rational(f.hi)]
            w.writerow(row)
        return buf.getvalue()


def _disjoint(f: Interval, g: Interval) -> bool:
    if f.hi < g.lo or g.hi < f.lo:
        return True
    if f.hi == g.lo:
        return not (f.hi_closed and g.lo_closed)
    if g.hi == f.lo:
        return not (g.hi_closed and f.lo_closed)
    return False


def _inside(child: Interval, parent: Interval) -> bool:
    return parent.lo <= child.lo and child.hi <= parent.hi


def _choose_branching(counts: Sequence[int], budget: int) -> int | None:
    """Largest uniform cap b with 1 + sum_n prod_{i<=n} min(r_i, b) <= budget (None if b=1 fails)."""
    def size(b):
        total, prod = 1, 1
        for r in counts:
            prod *= min(r, b)
            total += prod
            if total > budget:
                return total
        return total

    if size(1) > budget:
        return None
    lo, hi = 1, max(counts) if counts else 1
    if size(hi) <= budget:
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if size(mid) <= budget:
            lo = mid
        else:
            hi = mid
    return lo


def enumerate_tree(p: SeedParams, depth: int, node_budget: int = 10_000, subsample: bool = True,
                   pair_cap: int = 2000, budget: int | None = None) -> CylinderTree:
    """Finite-depth tree of cylinders whose level-n digit vectors lie in ``A_n``.

    With ``subsample`` every node keeps the first ``b`` members of ``A_n`` in
    canonical order, ``b`` being the largest uniform branching that fits the
    node budget. Without it, levels are expanded fully until the budget runs
    out and the tree is flagged truncated.
    """
    if depth < 0:
        raise InvalidInput("depth must be non-negative")
    d = p.d
    root = TreeNode((), None, cylinder_nd((), d))
    counts = seed_annuli(p, depth, budget) if depth else []
    if any(c == 0 for c in counts):
        raise InvalidInput(f"annulus {counts.index(0) + 1} is empty")
    cap: int | None = None
    truncated = False
    if depth and subsample:
        cap = _choose_branching(counts, node_budget)
        if cap is None:
            raise BudgetExceeded("node budget cannot hold one path of the requested depth")
    levels = [[root]]
    certs = []
    used = 1
    with ivprec(120):
        for n in range(1, depth + 1):
            a, b = p.norm_range(n)
            width = counts[n - 1] if cap is None else min(counts[n - 1], cap)
            alphabet = list(itertools.islice(p.K.iter_members(a, b, default_budget()), width))
            parents = levels[-1]
            if cap is None and used + len(parents) * width > node_budget:
                truncated = True
                break
            level = []
            for i, par in enumerate(parents):
                for v in alphabet:
                    word = par.word + (v,)
                    level.append(TreeNode(word, i, cylinder_nd(word, d)))
            used += len(level)
            levels.append(level)
            certs.append(_certify_level(n, p, parents, level, alphabet, counts[n - 1], width, pair_cap))
    return CylinderTree(d, levels, certs, truncated, cap)


def _certify_level(n, p: SeedParams, parents, level, alphabet, count, width, pair_cap) -> LevelCertificate:
    lo_n, hi_n = p.norm_range(n)
    in_annulus = all(lo_n <= linf(v) <= hi_n and p.K.contains(v) for v in alphabet)
    nested = all(
        node.word[:-1] == parents[node.parent].word
        and all(_inside(c, q) for c, q in zip(node.cylinder.factors, parents[node.parent].cylinder.factors))
        for node in level
    )
    two_sep = all(linf([x - y for x, y in zip(v, w)]) >= 2 for v, w in itertools.combinations(alphabet, 2)) \
        if len(alphabet) <= 400 else False
    kind = "sibling-bound" if two_sep else "disjoint"
    separated = True
    by_parent: dict[int, list[TreeNode]] = {}
    for node in level:
        by_parent.setdefault(node.parent, []).append(node)
    for kids in by_parent.values():
        pairs = list(itertools.combinations(range(len(kids)), 2))
        if len(pairs) > pair_cap:
            pairs = [(i, i + 1) for i in range(len(kids) - 1)]
        for i, j in pairs:
            x, y = kids[i], kids[j]
            if two_sep:
                chk = sibling_separation_check(x.word[:-1], x.word[-1], y.word[-1])
                separated &= chk.ok
            else:
                separated &= any(_disjoint(f, g) for f, g in zip(x.cylinder.factors, y.cylinder.factors))
    mesh = max(diameter(node.cylinder).hi for node in level)
    mesh_ok = mesh <= as_fraction(_lo(golden_length_bound(n)))
    return LevelCertificate(n, len(level), width, count, width < count, nested, in_annulus,
                            bool(separated), kind, mesh, bool(mesh_ok))
