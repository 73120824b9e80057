"""Identifiability deciders on top of the verified solver.

Numerical questions (one concrete covariance matrix) are answered by solving
the fiber system.  Generic questions are answered by sampling random rational
parameters, solving at each sample and checking the Jacobian rank; those
verdicts are sampled evidence, not proofs.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import config
from .graph import GraphError, MixedGraph
from .matrix import RATIONAL, Matrix, SingularMatrix, general_inverse
from .poly import fraction_str
from .scm import ParamPoint, edge_name, edge_project, fiber_system, phi
from .solver import BUDGET_EXHAUSTED, COMPLETE, SolveConfig, SolveReport, jacobian, numeric_rank, solve

__all__ = [
    "Verdict",
    "GenericVerdict",
    "check_numeric",
    "check_feasible",
    "check_generic",
    "check_edge_numeric",
    "check_edge_generic",
    "sample_parameters",
    "UNIQUE",
    "MULTIPLE",
    "INFEASIBLE",
    "FEASIBLE",
    "UNKNOWN",
    "GENERICALLY_IDENTIFIABLE",
    "NOT_GENERICALLY_IDENTIFIABLE",
    "INCONCLUSIVE",
]

UNIQUE = "Unique"
MULTIPLE = "Multiple"
INFEASIBLE = "Infeasible"
FEASIBLE = "Feasible"
UNKNOWN = "Unknown"

GENERICALLY_IDENTIFIABLE = "GenericallyIdentifiable"
NOT_GENERICALLY_IDENTIFIABLE = "NotGenericallyIdentifiable"
INCONCLUSIVE = "Inconclusive"

_EXIT = {
    UNIQUE: 0,
    FEASIBLE: 0,
    GENERICALLY_IDENTIFIABLE: 0,
    MULTIPLE: 1,
    NOT_GENERICALLY_IDENTIFIABLE: 1,
    UNKNOWN: 2,
    INCONCLUSIVE: 2,
    INFEASIBLE: 3,
}


def _value_json(v: Any) -> Any:
    return fraction_str(v) if isinstance(v, Fraction) else float(v)


@dataclass
class Verdict:
    """``count`` is the number of verified roots (or distinct edge values);
    ``continuum`` marks a suspected positive-dimensional fiber."""

    kind: str
    count: int | None = None
    continuum: bool = False
    reason: str | None = None
    roots: list[dict[tuple[int, int], Any]] = field(default_factory=list)
    report: SolveReport | None = None
    notes: list[str] = field(default_factory=list)
    edge: tuple[int, int] | None = None
    values: list[Any] = field(default_factory=list)

    @property
    def label(self) -> str:
        if self.kind == MULTIPLE:
            return f"Multiple({'Continuum' if self.continuum else self.count})"
        if self.kind == UNKNOWN:
            return f"Unknown({self.reason})"
        return self.kind

    @property
    def exit_code(self) -> int:
        return _EXIT[self.kind]

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "verdict": self.label,
            "kind": self.kind,
            "count": self.count,
            "continuum": self.continuum,
            "reason": self.reason,
            "roots": [{edge_name(k): _value_json(v) for k, v in r.items()} for r in self.roots],
            "notes": list(self.notes),
        }
        if self.edge is not None:
            out["edge"] = list(self.edge)
            out["edge_values"] = [_value_json(v) for v in self.values]
        if self.report is not None:
            out["solver"] = self.report.to_json()
        return out


def _cfg(cfg: SolveConfig | None) -> SolveConfig:
    return cfg if cfg is not None else SolveConfig()


def _solve_fiber(g: MixedGraph, sigma: Matrix, cfg: SolveConfig):
    fs = fiber_system(g, sigma)
    return fs, solve(fs.to_poly_system(), cfg)


def _roots(fs, report: SolveReport) -> list[dict[tuple[int, int], Any]]:
    return [dict(zip(fs.variables, r.values())) for r in report.roots]


def check_numeric(g: MixedGraph, sigma: Matrix, cfg: SolveConfig | None = None) -> Verdict:
    """Is the fiber of ``sigma`` a single point (inside the box)?

    ``sigma`` is promised to be in the image of the parametrization; an empty
    fiber gives ``Unknown(promise-violated)``.
    """
    cfg = _cfg(cfg)
    fs, rep = _solve_fiber(g, sigma, cfg)
    roots = _roots(fs, rep)
    if rep.status == BUDGET_EXHAUSTED:
        return Verdict(UNKNOWN, reason="budget", roots=roots, report=rep)
    if rep.status != COMPLETE:
        return Verdict(MULTIPLE, continuum=True, roots=roots, report=rep, notes=["positive-dimensional fiber suspected"])
    if rep.outside:
        return Verdict(UNKNOWN, reason="box", roots=roots, report=rep, notes=[f"{len(rep.outside)} fiber point(s) outside the box"])
    if not roots:
        return Verdict(UNKNOWN, reason="promise-violated", report=rep, notes=["no fiber point in the box"])
    if len(roots) == 1:
        return Verdict(UNIQUE, count=1, roots=roots, report=rep)
    return Verdict(MULTIPLE, count=len(roots), roots=roots, report=rep)


def check_feasible(g: MixedGraph, sigma: Matrix, cfg: SolveConfig | None = None) -> Verdict:
    """Is ``sigma`` in the image of the parametrization?  Box-relative."""
    cfg = _cfg(cfg)
    fs, rep = _solve_fiber(g, sigma, cfg)
    roots = _roots(fs, rep)
    if roots:
        return Verdict(FEASIBLE, count=len(roots), roots=roots[:1], report=rep)
    for w in rep.continuum:
        witness = _exact_witness(fs, w["point"])
        if witness is not None:
            return Verdict(FEASIBLE, continuum=True, roots=[witness], report=rep, notes=["witness on a positive-dimensional fiber"])
    if rep.status == BUDGET_EXHAUSTED:
        return Verdict(UNKNOWN, reason="budget", report=rep)
    if rep.status != COMPLETE:
        return Verdict(UNKNOWN, reason="continuum", report=rep)
    if rep.outside:
        return Verdict(UNKNOWN, reason="box", report=rep, notes=[f"{len(rep.outside)} fiber point(s) outside the box"])
    return Verdict(INFEASIBLE, count=0, report=rep, notes=[f"no real fiber point in the box {rep.box[0] if rep.box else ()}"])


def _exact_witness(fs, point: Sequence[float]) -> dict | None:
    """Rational rounding of a numerical root, if it satisfies the system exactly."""
    for denom in (1, 2, 3, 4, 6, 12, 100, 10**4, 10**6):
        vals = {v: Fraction(x).limit_denominator(denom) for v, x in zip(fs.variables, point)}
        if all(eq.evaluate(vals) == 0 for eq in fs.equations) and all(q.evaluate(vals) != 0 for q in fs.nonzero):
            return vals
    return None


def _null_space(J: np.ndarray, rank: int) -> np.ndarray:
    """Orthonormal basis of the kernel of ``J`` via a full QR of its transpose."""
    nv = J.shape[1]
    if J.shape[0] == 0:
        return np.eye(nv)
    q, _ = np.linalg.qr(J.T, mode="complete")
    return q[:, rank:]


def check_edge_numeric(g: MixedGraph, sigma: Matrix, edge: tuple[int, int], cfg: SolveConfig | None = None) -> Verdict:
    """Is the weight of ``edge`` the same at every fiber point?"""
    if tuple(edge) not in g.directed:
        raise GraphError(f"{edge[0]} -> {edge[1]} is not an edge")
    edge = tuple(edge)
    cfg = _cfg(cfg)
    fs, rep = _solve_fiber(g, sigma, cfg)
    roots = _roots(fs, rep)
    values = edge_project(roots, *edge, tol=cfg.dedup_tol)
    base = dict(roots=roots, report=rep, edge=edge, values=values)
    if rep.status == BUDGET_EXHAUSTED:
        return Verdict(UNKNOWN, reason="budget", **base)
    if rep.status != COMPLETE:
        k = fs.variables.index(edge)
        moving = False
        for w in rep.continuum:
            if w["rank"] is None:
                moving = True
                continue
            J = np.array(jacobian(fs.to_poly_system(), tuple(float(x) for x in w["point"])).tolist(), dtype=float)
            J = J.reshape(len(fs.equations), len(fs.variables))
            basis = _null_space(J, w["rank"])
            if basis.size and np.max(np.abs(basis[k])) > 1e-8:
                moving = True
        if moving:
            return Verdict(UNKNOWN, reason="continuum", **base, notes=["the free directions of the fiber move this edge"])
        return Verdict(UNIQUE, count=1, **base, notes=["local: the suspected continuum leaves this edge fixed"])
    if len(values) >= 2:
        return Verdict(MULTIPLE, count=len(values), **base)
    if rep.outside:
        return Verdict(UNKNOWN, reason="box", **base)
    if not values:
        return Verdict(UNKNOWN, reason="promise-violated", **base)
    return Verdict(UNIQUE, count=1, **base)


# -- generic questions ----------------------------------------------------------


def _grid_value(rng: random.Random) -> Fraction:
    num = rng.randint(1, config.SAMPLE_NUMERATOR_MAX) * rng.choice((-1, 1))
    return Fraction(num, rng.randint(1, config.SAMPLE_DENOMINATOR_MAX))


def sample_parameters(g: MixedGraph, seed: int) -> ParamPoint:
    """Random rational parameters on the sampling grid.

    Edge weights and error covariances are drawn from ``±(1..5)/(1..3)``;
    the error variances are ``1 + sum |omega_ij|``, so the error covariance
    is strictly diagonally dominant.  Cyclic graphs are resampled until
    ``I - L`` is invertible.
    """
    rng = random.Random(seed)
    n = g.n
    while True:
        lam = [[Fraction(0)] * n for _ in range(n)]
        for i, j in g.edges():
            lam[i - 1][j - 1] = _grid_value(rng)
        om = [[Fraction(0)] * n for _ in range(n)]
        for i, j in sorted(g.bidirected):
            om[i - 1][j - 1] = om[j - 1][i - 1] = _grid_value(rng)
        for i in range(n):
            om[i][i] = 1 + sum(abs(om[i][j]) for j in range(n) if j != i)
        lam_m = Matrix(lam, RATIONAL)
        if g.cyclic:
            try:
                general_inverse(Matrix.identity(n, RATIONAL) - lam_m)
            except SingularMatrix:
                continue
        return ParamPoint(lam_m, Matrix(om, RATIONAL))


@dataclass
class GenericVerdict:
    kind: str
    samples: list[dict[str, Any]]
    edge: tuple[int, int] | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def label(self) -> str:
        return self.kind

    @property
    def exit_code(self) -> int:
        return _EXIT[self.kind]

    def agreement(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for s in self.samples:
            out[s["verdict"]] = out.get(s["verdict"], 0) + 1
        return out

    @property
    def unanimous(self) -> bool:
        return len(self.agreement()) == 1

    def to_json(self) -> dict[str, Any]:
        out = {
            "verdict": self.kind,
            "method": "sampled generic points (evidence, not proof)",
            "agreement": self.agreement(),
            "samples": self.samples,
            "notes": list(self.notes),
        }
        if self.edge is not None:
            out["edge"] = list(self.edge)
        return out


def _sample_task(args) -> dict[str, Any]:
    g, seed, cfg, edge = args
    p = sample_parameters(g, seed)
    sigma = phi(g, p)
    fs = fiber_system(g, sigma)
    lam0 = tuple(p.lam[i - 1, j - 1] for i, j in fs.variables)
    J = jacobian(fs.to_poly_system(), tuple(float(v) for v in lam0))
    rank = numeric_rank(np.array(J.tolist(), dtype=float).reshape(len(fs.equations), len(fs.variables)), cfg.rank_tol)
    v = check_numeric(g, sigma, cfg) if edge is None else check_edge_numeric(g, sigma, edge, cfg)
    return {
        "seed": seed,
        "verdict": v.label,
        "kind": v.kind,
        "continuum": v.continuum or v.reason == "continuum",
        "jacobian_rank": rank,
        "parameters": len(fs.variables),
        "lambda0": {edge_name(e): fraction_str(x) for e, x in zip(fs.variables, lam0)},
    }


def _seeds(cfg: SolveConfig, samples: int) -> list[int]:
    seeds = list(cfg.seeds)
    k = max(seeds, default=-1) + 1
    while len(seeds) < samples:
        seeds.append(k)
        k += 1
    return seeds[:samples]


def _run_samples(g: MixedGraph, cfg: SolveConfig, samples: int, edge) -> list[dict[str, Any]]:
    tasks = [(g, s, cfg, edge) for s in _seeds(cfg, samples)]
    workers = min(config.threads(), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sample_task, tasks))
    return [_sample_task(t) for t in tasks]


def _aggregate(results: list[dict[str, Any]], identified, non_identified) -> str:
    if not results:
        return INCONCLUSIVE
    if all(identified(r) for r in results):
        return GENERICALLY_IDENTIFIABLE
    if sum(non_identified(r) for r in results) * 2 > len(results):
        return NOT_GENERICALLY_IDENTIFIABLE
    return INCONCLUSIVE


def check_generic(g: MixedGraph, cfg: SolveConfig | None = None, samples: int = config.SAMPLES) -> GenericVerdict:
    """Sampled generic identifiability of all edge weights.

    Identifiable when every sample has a unique fiber point and a Jacobian of
    full column rank; not identifiable when a strict majority of samples show
    several fiber points or a continuum.
    """
    cfg = _cfg(cfg)
    results = _run_samples(g, cfg, samples, None)
    kind = _aggregate(
        results,
        lambda r: r["kind"] == UNIQUE and r["jacobian_rank"] == r["parameters"],
        lambda r: r["kind"] == MULTIPLE,
    )
    notes = {
        GENERICALLY_IDENTIFIABLE: "every sampled fiber is a single point in the box with a full-rank Jacobian",
        NOT_GENERICALLY_IDENTIFIABLE: "most sampled fibers have several points or a continuum",
        INCONCLUSIVE: "samples disagree or were undecided",
    }
    return GenericVerdict(kind, results, notes=[notes[kind]])


def check_edge_generic(
    g: MixedGraph, edge: tuple[int, int], cfg: SolveConfig | None = None, samples: int = config.SAMPLES
) -> GenericVerdict:
    if tuple(edge) not in g.directed:
        raise GraphError(f"{edge[0]} -> {edge[1]} is not an edge")
    cfg = _cfg(cfg)
    edge = tuple(edge)
    results = _run_samples(g, cfg, samples, edge)
    kind = _aggregate(
        results,
        lambda r: r["kind"] == UNIQUE,
        lambda r: r["kind"] == MULTIPLE or r["continuum"],
    )
    return GenericVerdict(kind, results, edge=edge)
