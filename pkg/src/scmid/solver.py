"""Verified real root finding for small polynomial systems.

Branch and prune over a box.  Interval evaluation discards boxes, projections
of equations that are linear (or purely quadratic) in one unknown contract
them, and a Krawczyk test proves existence and uniqueness of a root of a
square subsystem.  Gauss-Newton probes from box midpoints find roots early;
each verified root owns a uniqueness region that is cut out of the search.

Positive-dimensional solution sets are not enumerated.  A converged probe
with a rank-deficient Jacobian, or boxes that shrink below ``min_width``
without being decided, end the search with status ``ContinuumSuspected``.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Any, Hashable, Sequence

import numpy as np
import scipy.linalg

from . import config
from .interval import Interval, down, up
from .matrix import FLOAT, RATIONAL, Matrix
from .poly import Poly, fraction_str

__all__ = [
    "SolveConfig",
    "PolySystem",
    "Root",
    "SolveReport",
    "COMPLETE",
    "BUDGET_EXHAUSTED",
    "CONTINUUM_SUSPECTED",
    "solve",
    "jacobian",
    "numeric_rank",
]

COMPLETE = "Complete"
BUDGET_EXHAUSTED = "BudgetExhausted"
CONTINUUM_SUSPECTED = "ContinuumSuspected"

_EPS = 2.0 ** -53
_TINY = 1e-300
_KRAWCZYK_RADII = (0.25, 0.05, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8)


def _gamma(k: int) -> float:
    return k * _EPS / (1 - k * _EPS)


@dataclass(frozen=True)
class SolveConfig:
    """Search box and tolerances.

    ``box`` is either a half-width (every variable in ``[-box, box]``) or an
    explicit list of per-variable bounds.
    """

    box: float | tuple[tuple[float, float], ...] = config.BOX
    split_budget: int = config.SPLIT_BUDGET
    residual_tol: float = config.RESIDUAL_TOL
    dedup_tol: float = config.DEDUP_TOL
    rank_tol: float = config.RANK_TOL
    seeds: tuple[int, ...] = config.SEEDS
    min_width: float = config.MIN_WIDTH

    def __post_init__(self):
        for name in ("residual_tol", "dedup_tol", "rank_tol", "min_width"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.split_budget < 0:
            raise ValueError("split_budget must be non-negative")
        if isinstance(self.box, (int, float)):
            if not (math.isfinite(self.box) and self.box > 0):
                raise ValueError("box half-width must be finite and positive")
        else:
            bounds = tuple((float(lo), float(hi)) for lo, hi in self.box)
            if any(not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi) for lo, hi in bounds):
                raise ValueError("box bounds must be finite with lo <= hi")
            object.__setattr__(self, "box", bounds)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    def bounds(self, nvars: int) -> tuple[tuple[float, float], ...]:
        if isinstance(self.box, tuple):
            if len(self.box) != nvars:
                raise ValueError(f"box has {len(self.box)} bounds for {nvars} variables")
            return self.box
        b = float(self.box)
        return ((-b, b),) * nvars

    def scaled(self, factor: float) -> "SolveConfig":
        if isinstance(self.box, tuple):
            box = tuple(((lo + hi) / 2 - factor * (hi - lo) / 2, (lo + hi) / 2 + factor * (hi - lo) / 2) for lo, hi in self.box)
            return replace(self, box=box)
        return replace(self, box=float(self.box) * factor)

    def to_json(self) -> dict[str, Any]:
        d = asdict(self)
        d["box"] = self.box if isinstance(self.box, (int, float)) else [list(b) for b in self.box]
        d["seeds"] = list(self.seeds)
        return d


@dataclass(frozen=True)
class PolySystem:
    """Equations ``p = 0`` over ``variables``; roots where a ``nonzero``
    polynomial vanishes are discarded."""

    variables: tuple
    equations: tuple[Poly, ...]
    nonzero: tuple[Poly, ...] = ()
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "equations", tuple(self.equations))
        object.__setattr__(self, "nonzero", tuple(self.nonzero))
        known = set(self.variables)
        for p in self.equations + self.nonzero:
            extra = p.variables() - known
            if extra:
                raise ValueError(f"polynomial uses undeclared variables {sorted(map(str, extra))}")

    def name_of(self, k: int) -> str:
        return self.names[k] if self.names else str(self.variables[k])


@dataclass(frozen=True)
class Root:
    """A verified isolated root.

    ``center``/``radius`` describe a Krawczyk enclosure.  ``rational`` is a
    rational point inside it; ``exact`` is True when every equation vanishes
    there exactly, and ``residual`` is the exact max residual at that point.
    """

    center: tuple[float, ...]
    radius: tuple[float, ...]
    rational: tuple[Fraction, ...]
    exact: bool
    residual: float

    def values(self) -> tuple:
        return self.rational if self.exact else self.center

    def to_json(self, names: Sequence[str]) -> dict[str, Any]:
        out = {
            "midpoint": dict(zip(names, self.center)),
            "radius": dict(zip(names, self.radius)),
            "exact": self.exact,
            "residual": self.residual,
        }
        if self.exact:
            out["rational"] = {k: fraction_str(v) for k, v in zip(names, self.rational)}
        return out


@dataclass
class SolveReport:
    status: str
    roots: list[Root]
    variables: tuple
    names: tuple[str, ...]
    box: tuple[tuple[float, float], ...]
    continuum: list[dict[str, Any]] = field(default_factory=list)
    outside: list[tuple[float, ...]] = field(default_factory=list)
    filtered: int = 0
    stats: dict[str, Any] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.status == COMPLETE

    def root_dicts(self) -> list[dict[Hashable, Any]]:
        return [dict(zip(self.variables, r.values())) for r in self.roots]

    def to_json(self, timing: bool = False) -> dict[str, Any]:
        stats = {k: v for k, v in self.stats.items() if timing or k != "seconds"}
        return {
            "status": self.status,
            "box": [list(b) for b in self.box],
            "roots": [r.to_json(self.names) for r in self.roots],
            "continuum": [
                {"point": dict(zip(self.names, w["point"])), "jacobian_rank": w["rank"], "source": w["source"]}
                for w in self.continuum
            ],
            "outside_box": [dict(zip(self.names, p)) for p in self.outside],
            "filtered_by_side_conditions": self.filtered,
            "statistics": stats,
        }


# -- compiled polynomials -----------------------------------------------------


class _CompiledPoly:
    __slots__ = ("terms",)

    def __init__(self, poly: Poly, index: dict):
        self.terms = [
            (Interval.from_fraction(c), float(c), tuple((index[v], e) for v, e in m))
            for m, c in poly.items()
        ]

    def ival(self, box: Sequence[Interval]) -> Interval:
        lo = hi = 0.0
        for ci, _, mono in self.terms:
            t = ci
            for i, e in mono:
                t = t * (box[i] if e == 1 else box[i] ** e)
            lo = down(lo + t.lo)
            hi = up(hi + t.hi)
        return Interval(lo, hi)

    def fval(self, x: Sequence[float]) -> float:
        s = 0.0
        for _, c, mono in self.terms:
            t = c
            for i, e in mono:
                t *= x[i] if e == 1 else x[i] ** e
            s += t
        return s


class _Compiled:
    def __init__(self, system: PolySystem):
        self.system = system
        self.nv = len(system.variables)
        index = {v: k for k, v in enumerate(system.variables)}
        self.eqs = [_CompiledPoly(p, index) for p in system.equations]
        self.neq = len(self.eqs)
        self.nonzero = [_CompiledPoly(p, index) for p in system.nonzero]
        self.jac: list[list[tuple[int, _CompiledPoly]]] = []
        self.splits: list[list[tuple[int, int, _CompiledPoly, _CompiledPoly]]] = []
        for p in system.equations:
            row = []
            splits = []
            for v in sorted(p.variables(), key=lambda w: index[w]):
                row.append((index[v], _CompiledPoly(p.partial(v), index)))
                degrees = {e for m, _ in p.items() for w, e in m if w == v}
                if len(degrees) == 1:
                    k = degrees.pop()
                    if k in (1, 2):
                        a, b = _split_power(p, v, k)
                        splits.append((index[v], k, _CompiledPoly(a, index), _CompiledPoly(b, index)))
            self.jac.append(row)
            self.splits.append(splits)

    def f(self, x: np.ndarray) -> np.ndarray:
        xs = x.tolist()
        return np.array([e.fval(xs) for e in self.eqs], dtype=float)

    def J(self, x: np.ndarray) -> np.ndarray:
        xs = x.tolist()
        out = np.zeros((self.neq, self.nv))
        for r, row in enumerate(self.jac):
            for c, d in row:
                out[r, c] = d.fval(xs)
        return out

    def f_interval(self, box: Sequence[Interval], rows: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        vals = [self.eqs[r].ival(box) for r in rows]
        return np.array([v.lo for v in vals]), np.array([v.hi for v in vals])

    def J_interval(self, box: Sequence[Interval], rows: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        lo = np.zeros((len(rows), self.nv))
        hi = np.zeros((len(rows), self.nv))
        for k, r in enumerate(rows):
            for c, d in self.jac[r]:
                v = d.ival(box)
                lo[k, c], hi[k, c] = v.lo, v.hi
        return lo, hi


def _split_power(p: Poly, v: Hashable, k: int) -> tuple[Poly, Poly]:
    """``p = v**k * a + b`` where ``v`` does not occur in ``a`` or ``b``."""
    a: dict = {}
    b: dict = {}
    for mono, coef in p.items():
        exps = dict(mono)
        if v in exps:
            del exps[v]
            a[tuple(sorted(exps.items()))] = coef
        else:
            b[mono] = coef
    return Poly(a), Poly(b)


# -- box helpers --------------------------------------------------------------


def _box_arrays(box: Sequence[Interval]) -> tuple[np.ndarray, np.ndarray]:
    return np.array([b.lo for b in box]), np.array([b.hi for b in box])


def _box_from_arrays(lo: np.ndarray, hi: np.ndarray) -> list[Interval]:
    return [Interval(float(a), float(b)) for a, b in zip(lo, hi)]


def _max_width(box: Sequence[Interval]) -> float:
    return max((b.width for b in box), default=0.0)


def _inside(box: Sequence[Interval], region: Sequence[Interval]) -> bool:
    return all(b.subset_of(r) for b, r in zip(box, region))


def _overlap(box: Sequence[Interval], region: Sequence[Interval]) -> bool:
    return all(b.lo < r.hi and r.lo < b.hi for b, r in zip(box, region))


def _point_in(x: Sequence[float], box: Sequence[Interval], slack: float = 0.0) -> bool:
    return all(b.lo - slack <= xi <= b.hi + slack for xi, b in zip(x, box))


def _subtract(box: list[Interval], region: Sequence[Interval]) -> list[list[Interval]]:
    """Cover ``box \\ region`` by at most ``2n`` boxes."""
    pieces = []
    core = list(box)
    for d, r in enumerate(region):
        b = core[d]
        if b.lo < r.lo:
            piece = list(core)
            piece[d] = Interval(b.lo, r.lo)
            pieces.append(piece)
        if r.hi < b.hi:
            piece = list(core)
            piece[d] = Interval(r.hi, b.hi)
            pieces.append(piece)
        core[d] = Interval(max(b.lo, r.lo), min(b.hi, r.hi))
    return pieces


# -- the solver ---------------------------------------------------------------


@dataclass
class _Region:
    box: list[Interval]
    root: int | None


class _Search:
    def __init__(self, system: PolySystem, cfg: SolveConfig):
        self.cfg = cfg
        self.system = system
        self.c = _Compiled(system)
        self.bounds = cfg.bounds(self.c.nv)
        self.initial = [Interval(lo, hi) for lo, hi in self.bounds]
        self.roots: list[Root] = []
        self.regions: list[_Region] = []
        self.outside: list[tuple[float, ...]] = []
        self.continuum: list[dict[str, Any]] = []
        self.undecided: list[list[Interval]] = []
        self.filtered = 0
        self.boxes = 0
        self.splits = 0

    # -- local tools

    def newton(self, x0: np.ndarray, max_iter: int = 40) -> np.ndarray | None:
        c = self.c
        x = x0.astype(float)
        tol = self.cfg.residual_tol
        polish = 0
        for _ in range(max_iter):
            fx = c.f(x)
            res = float(np.max(np.abs(fx))) if fx.size else 0.0
            if not math.isfinite(res):
                return None
            if res <= 1e-3 * tol:
                polish += 1
                if polish > 2 or res == 0.0:
                    return x
            J = c.J(x)
            step = np.linalg.lstsq(J, fx, rcond=None)[0]
            x = x - step
            if not np.all(np.isfinite(x)) or np.max(np.abs(x), initial=0.0) > 1e8:
                return None
        fx = c.f(x)
        if fx.size and float(np.max(np.abs(fx))) > tol:
            return None
        return x

    def select_rows(self, J: np.ndarray) -> list[int] | None:
        nv = self.c.nv
        if J.shape[0] < nv or nv == 0:
            return None
        if J.shape[0] == nv:
            return list(range(nv))
        _, _, perm = scipy.linalg.qr(J.T, pivoting=True, mode="economic")
        return sorted(int(p) for p in perm[:nv])

    def krawczyk(self, box: list[Interval], y: np.ndarray, rows: list[int], C: np.ndarray):
        """Return the Krawczyk image ``(lo, hi)`` of ``box`` for the subsystem ``rows``."""
        c = self.c
        n = c.nv
        g = 2.0 * _gamma(n + 4)
        absC = np.abs(C)
        point = [Interval(float(v)) for v in y]
        fl, fu = c.f_interval(point, rows)
        fc = 0.5 * (fl + fu)
        fr = np.nextafter(np.maximum(fu - fc, fc - fl), np.inf)
        Cf_c = C @ fc
        Cf_r = absC @ fr + g * (absC @ np.abs(fc))

        Jl, Ju = c.J_interval(box, rows)
        Jc = 0.5 * (Jl + Ju)
        Jr = np.nextafter(np.maximum(Ju - Jc, Jc - Jl), np.inf)
        CJ = C @ Jc
        Mc = np.eye(n) - CJ
        Mr = (absC @ Jr) * (1 + g) + g * (absC @ np.abs(Jc)) + g * np.abs(Mc)

        xl, xu = _box_arrays(box)
        dl = np.nextafter(xl - y, -np.inf)
        du = np.nextafter(xu - y, np.inf)
        dc = 0.5 * (dl + du)
        dr = np.nextafter(np.maximum(du - dc, dc - dl), np.inf)
        absMc = np.abs(Mc)
        Md_c = Mc @ dc
        Md_r = absMc @ dr + Mr @ (np.abs(dc) + dr) + g * (absMc @ np.abs(dc))

        Kc = y - Cf_c + Md_c
        Kr = Cf_r + Md_r + g * (np.abs(y) + np.abs(Cf_c) + np.abs(Md_c))
        Kr = Kr * (1 + 4 * g) + _TINY
        if not (np.all(np.isfinite(Kc)) and np.all(np.isfinite(Kr))):
            return None
        return np.nextafter(Kc - Kr, -np.inf), np.nextafter(Kc + Kr, np.inf)

    def preconditioner(self, y: np.ndarray, rows: list[int]) -> np.ndarray | None:
        Jy = self.c.J(y)[rows]
        try:
            if np.linalg.cond(Jy) > 1e13:
                return None
            return np.linalg.inv(Jy)
        except np.linalg.LinAlgError:
            return None

    def tighten(self, box: list[Interval], rows: list[int]) -> list[Interval]:
        """Contract a box already known to hold a unique subsystem root."""
        for _ in range(60):
            xl, xu = _box_arrays(box)
            y = 0.5 * (xl + xu)
            C = self.preconditioner(y, rows)
            if C is None:
                break
            K = self.krawczyk(box, y, rows, C)
            if K is None:
                break
            lo = np.maximum(K[0], xl)
            hi = np.minimum(K[1], xu)
            if np.any(lo > hi):
                break
            shrink = np.max(hi - lo) >= 0.9 * np.max(xu - xl)
            box = _box_from_arrays(lo, hi)
            if shrink:
                break
        return box

    def contract(self, box: list[Interval]) -> list[Interval] | None:
        """Projection of each equation onto unknowns it is linear or square in."""
        c = self.c
        box = list(box)
        for _ in range(4):
            changed = False
            for e, eq in enumerate(c.eqs):
                if not eq.ival(box).contains_zero():
                    return None
                for v, k, a, b in c.splits[e]:
                    av = a.ival(box)
                    if av.contains_zero():
                        continue
                    q = (-b.ival(box)).divide(av)
                    cur = box[v]
                    if k == 1:
                        new = cur.intersect(q)
                    else:
                        new = _square_preimage(q, cur)
                    if new is None:
                        return None
                    if new.width < 0.95 * cur.width:
                        changed = True
                    box[v] = new
            if not changed:
                break
        return box

    def exact_point(self, center: np.ndarray, enclosure: list[Interval]) -> tuple[tuple[Fraction, ...], bool, float]:
        coords = []
        for x, b in zip(center.tolist(), enclosure):
            pick = None
            for denom in (1, 2, 3, 4, 6, 8, 10, 12, 100, 1000, 10**4, 10**5, 10**6, 10**8):
                cand = Fraction(x).limit_denominator(denom)
                if b.lo <= cand <= b.hi:
                    pick = cand
                    break
            coords.append(pick if pick is not None else Fraction(x))
        point = dict(zip(self.system.variables, coords))
        res = max((abs(p.evaluate(point)) for p in self.system.equations), default=Fraction(0))
        return tuple(coords), res == 0, float(res)

    def accept(self, enclosure: list[Interval], uniqueness: list[Interval]) -> None:
        """Record the unique subsystem root inside ``enclosure``."""
        c = self.c
        region = _Region(uniqueness, None)
        self.regions.append(region)
        if any(not eq.ival(enclosure).contains_zero() for eq in c.eqs):
            return
        xl, xu = _box_arrays(enclosure)
        center = 0.5 * (xl + xu)
        if not _overlap_closed(enclosure, self.initial):
            self.outside.append(tuple(center.tolist()))
            return
        for q in c.nonzero:
            if abs(q.fval(center.tolist())) <= self.cfg.residual_tol:
                self.filtered += 1
                return
        rational, exact, res = self.exact_point(center, enclosure)
        if not exact and res > 10 * self.cfg.residual_tol:
            return
        radius = tuple(float(up(0.5 * (b - a))) for a, b in zip(xl, xu))
        for k, r in enumerate(self.roots):
            if max(abs(a - b) for a, b in zip(r.center, center)) <= self.cfg.dedup_tol:
                region.root = k
                return
        region.root = len(self.roots)
        self.roots.append(Root(tuple(center.tolist()), radius, rational, exact, res))

    def verify_at(self, y: np.ndarray) -> bool:
        rows = self.select_rows(self.c.J(y))
        if rows is None:
            return False
        C = self.preconditioner(y, rows)
        if C is None:
            return False
        scale = max(1.0, float(np.max(np.abs(y), initial=0.0)))
        for rad in _KRAWCZYK_RADII:
            r = rad * scale
            box = [Interval(down(v - r), up(v + r)) for v in y.tolist()]
            K = self.krawczyk(box, y, rows, C)
            if K is None:
                continue
            xl, xu = _box_arrays(box)
            if np.all(K[0] > xl) and np.all(K[1] < xu):
                enclosure = self.tighten(_box_from_arrays(np.maximum(K[0], xl), np.minimum(K[1], xu)), rows)
                self.accept(enclosure, box)
                return True
        return False

    def probe(self, box: list[Interval]) -> bool:
        xl, xu = _box_arrays(box)
        return self.probe_from(0.5 * (xl + xu))

    def probe_from(self, x0: np.ndarray) -> bool:
        """Newton probe; False once a continuum is suspected."""
        c = self.c
        y = self.newton(x0)
        if y is None:
            return True
        if any(_point_in(y.tolist(), reg.box) for reg in self.regions):
            return True
        if c.neq < c.nv or numeric_rank(c.J(y), self.cfg.rank_tol) < c.nv:
            if _point_in(y.tolist(), self.initial):
                rank = numeric_rank(c.J(y), self.cfg.rank_tol) if c.neq else 0
                self.continuum.append({"point": tuple(y.tolist()), "rank": rank, "source": "rank-deficient root"})
                return False
            return True
        self.verify_at(y)
        return True

    def run(self) -> SolveReport:
        start = time.perf_counter()
        c = self.c
        status = COMPLETE
        if c.nv == 0:
            if all(p.is_zero() for p in self.system.equations):
                self.roots.append(Root((), (), (), True, 0.0))
            return self.report(status, start)

        # seeded starts before any pruning, so roots just outside the box
        # are still noticed
        xl, xu = _box_arrays(self.initial)
        starts = [0.5 * (xl + xu)]
        for seed in self.cfg.seeds:
            rng = np.random.default_rng(seed)
            starts.append(xl + rng.random(c.nv) * (xu - xl))
        stack = [list(self.initial)]
        for x0 in starts:
            if not self.probe_from(x0):
                status = CONTINUUM_SUSPECTED
                stack = []
                break
        while stack:
            box = stack.pop()
            hit = next((reg for reg in self.regions if _overlap(box, reg.box)), None)
            if hit is not None:
                if _inside(box, hit.box):
                    continue
                pieces = _subtract(box, hit.box)
                self.splits += 1
                stack.extend(reversed(pieces))
                continue
            box = self.contract(box)
            if box is None:
                continue
            self.boxes += 1
            if not self.probe(box):
                status = CONTINUUM_SUSPECTED
                break
            if any(_overlap(box, reg.box) for reg in self.regions):
                stack.append(box)
                continue
            if c.neq >= c.nv:
                verdict = self.box_krawczyk(box)
                if verdict == "empty" or verdict == "done":
                    continue
                if isinstance(verdict, list):
                    box = verdict
            if _max_width(box) < self.cfg.min_width:
                self.undecided.append(box)
                continue
            if self.splits >= self.cfg.split_budget:
                stack.append(box)
                status = BUDGET_EXHAUSTED
                break
            self.splits += 1
            d = max(range(c.nv), key=lambda k: box[k].width)
            m = box[d].mid
            left, right = list(box), list(box)
            left[d] = Interval(box[d].lo, m)
            right[d] = Interval(m, box[d].hi)
            stack.append(right)
            stack.append(left)

        if status == COMPLETE and self.undecided:
            status = CONTINUUM_SUSPECTED
            hull = self.undecided[0]
            for b in self.undecided[1:]:
                hull = [h.hull(x) for h, x in zip(hull, b)]
            mid = tuple(h.mid for h in hull)
            self.continuum.append({"point": mid, "rank": None, "source": f"{len(self.undecided)} undecided boxes"})
        return self.report(status, start)

    def box_krawczyk(self, box: list[Interval]):
        xl, xu = _box_arrays(box)
        y = 0.5 * (xl + xu)
        rows = self.select_rows(self.c.J(y))
        if rows is None:
            return None
        C = self.preconditioner(y, rows)
        if C is None:
            return None
        K = self.krawczyk(box, y, rows, C)
        if K is None:
            return None
        lo = np.maximum(K[0], xl)
        hi = np.minimum(K[1], xu)
        if np.any(lo > hi):
            return "empty"
        if np.all(K[0] > xl) and np.all(K[1] < xu):
            enclosure = self.tighten(_box_from_arrays(lo, hi), rows)
            self.accept(enclosure, box)
            return "done"
        if np.any(hi - lo < xu - xl):
            return _box_from_arrays(lo, hi)
        return None

    def report(self, status: str, start: float) -> SolveReport:
        order = sorted(range(len(self.roots)), key=lambda k: self.roots[k].center)
        names = tuple(self.system.name_of(k) for k in range(self.c.nv))
        return SolveReport(
            status=status,
            roots=[self.roots[k] for k in order],
            variables=self.system.variables,
            names=names,
            box=self.bounds,
            continuum=self.continuum,
            outside=sorted(self.outside),
            filtered=self.filtered,
            stats={"boxes": self.boxes, "splits": self.splits, "seconds": time.perf_counter() - start},
        )


def _overlap_closed(box: Sequence[Interval], region: Sequence[Interval]) -> bool:
    return all(b.lo <= r.hi and r.lo <= b.hi for b, r in zip(box, region))


def _square_preimage(q: Interval, cur: Interval) -> Interval | None:
    """Values ``v`` in ``cur`` with ``v**2`` in ``q``."""
    if q.hi < 0:
        return None
    s = Interval(max(q.lo, 0.0), q.hi).sqrt()
    pos = cur.intersect(s)
    neg = cur.intersect(-s)
    if pos is None:
        return neg
    if neg is None:
        return pos
    return pos.hull(neg)


def solve(system: PolySystem, cfg: SolveConfig | None = None) -> SolveReport:
    """All real roots of ``system`` inside the configured box.

    ``Complete`` means every root in the box is listed, each certified unique
    in its enclosure.  Anything short of that is stated in ``status``.
    """
    return _Search(system, cfg or SolveConfig()).run()


def jacobian(system: PolySystem, point: Sequence[Any]) -> Matrix:
    """Exact partial derivatives evaluated at ``point``.

    A rational point gives a rational matrix, a float point a float matrix.
    """
    values = dict(zip(system.variables, point))
    mode = FLOAT if any(isinstance(v, float) for v in point) else RATIONAL
    rows = []
    for p in system.equations:
        rows.append([p.partial(v).evaluate(values) for v in system.variables])
    if not rows:
        return Matrix.zeros(0, len(system.variables), mode)
    return Matrix(rows, mode)


def numeric_rank(m: Matrix | np.ndarray, rank_tol: float = 1e-8, max_iter: int = 500) -> int:
    """Count singular values above ``rank_tol`` times the largest.

    Singular values come from the unshifted QR iteration ``R <- qr(R^T).R``,
    which drives the triangular factor to diagonal form.
    """
    a = np.array(m.tolist() if isinstance(m, Matrix) else m, dtype=float)
    if a.ndim != 2 or a.size == 0:
        return 0
    if a.shape[0] < a.shape[1]:
        a = a.T
    r = np.linalg.qr(a, mode="r")
    for _ in range(max_iter):
        r = np.linalg.qr(r.T, mode="r")
        norm = np.linalg.norm(r)
        if norm == 0:
            return 0
        if np.linalg.norm(np.triu(r, 1)) <= 1e-15 * norm:
            break
    s = np.abs(np.diag(r))
    top = s.max()
    if top == 0:
        return 0
    return int(np.sum(s > rank_tol * top))
