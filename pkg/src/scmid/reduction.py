"""Compile a product/affine constraint system into a mixed graph and a
covariance matrix whose fiber is in bijection with the system's solutions.

Node layout (1-based):

* ``1..n``: one bottom node per variable, each with the single edge ``l -> r``;
* ``r = n + 1``: the node collecting the variable values;
* per constraint, in order: one top node ``i`` for an affine row, or
  ``i', j', i, j`` (edges ``i' -> i`` and ``j' -> j``) for a product.

All pairs are bidirected except the designated missing pairs, so the fiber
equations are exactly one per gadget pair.  Off-diagonal covariances lie in
{-1, 0, 1} and the diagonal equals the node count, so the matrix is strictly
diagonally dominant.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Any, Mapping, Sequence

from .graph import MixedGraph, graph_from_json
from .matrix import FLOAT, RATIONAL, Matrix, NotPositiveDefinite, cholesky, is_strictly_diagonally_dominant
from .poly import Poly, fraction_str
from .quad import Affine, ConstraintSystem, Mul, NormalizedSystem, evaluate, lower_to_unit, plant_solution
from .scm import (
    ParamPoint,
    PatternError,
    congruence_entry,
    lambda_from_values,
    omega_pattern_ok,
    phi,
    recover_omega,
)

__all__ = [
    "Gadget",
    "ReductionLayout",
    "ReducedInstance",
    "ReductionError",
    "Pipeline",
    "compile_system",
    "embed_witness",
    "pull_back",
    "reduce_pipeline",
    "write_bundle",
    "read_bundle",
    "verify_bundle",
    "Certificate",
    "expected_node_count",
    "bundle_json",
    "gadget_checks",
]

BUNDLE_FORMAT = "scmid-reduction/1"


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class Gadget:
    """Nodes and missing pairs of one constraint.

    For a product ``x_a * x_b = x_c``, ``i'``/``i`` copy ``x_b`` into the
    weight of ``i' -> i``; ``j'``/``j`` carry the same value and multiply it
    with ``x_a`` at the pair ``(r, j)``.
    """

    index: int
    kind: str
    nodes: Mapping[str, int]
    missing: tuple[tuple[int, int], ...]
    orientation: Mapping[str, int] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "constraint": self.index,
            "kind": self.kind,
            "nodes": dict(self.nodes),
            "missing": [list(p) for p in self.missing],
            "orientation": dict(self.orientation),
        }

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> "Gadget":
        return cls(
            int(d["constraint"]),
            d["kind"],
            {k: int(v) for k, v in d["nodes"].items()},
            tuple((int(a), int(b)) for a, b in d["missing"]),
            {k: int(v) for k, v in d.get("orientation", {}).items()},
        )


@dataclass(frozen=True)
class ReductionLayout:
    graph: MixedGraph
    root: int
    num_vars: int
    gadgets: tuple[Gadget, ...]

    @property
    def total_nodes(self) -> int:
        return self.graph.n

    def var_edge(self, k: int) -> tuple[int, int]:
        return (k, self.root)

    def missing(self) -> list[tuple[int, int]]:
        return sorted(p for g in self.gadgets for p in g.missing)

    def bottom_nodes(self) -> list[int]:
        nodes = list(range(1, self.num_vars + 1))
        for g in self.gadgets:
            if g.kind == "mul":
                nodes += [g.nodes["i'"], g.nodes["j'"]]
        return sorted(nodes)

    def to_json(self) -> dict[str, Any]:
        return {
            "root": self.root,
            "num_vars": self.num_vars,
            "total_nodes": self.total_nodes,
            "gadgets": [g.to_json() for g in self.gadgets],
        }


@dataclass(frozen=True)
class ReducedInstance:
    layout: ReductionLayout
    sigma: Matrix
    source: ConstraintSystem

    @property
    def graph(self) -> MixedGraph:
        return self.layout.graph


def expected_node_count(cs: ConstraintSystem) -> int:
    k = sum(isinstance(c, Affine) for c in cs.constraints)
    return 1 + cs.n + k + 4 * (cs.m - k)


class _SigmaWriter:
    def __init__(self, size: int):
        self.entries: dict[tuple[int, int], Fraction] = {}
        self.size = size

    def set(self, a: int, b: int, value: Any) -> None:
        key = (min(a, b), max(a, b))
        if a == b:
            raise ReductionError(f"gadget tried to write diagonal entry {a}")
        if key in self.entries:
            raise ReductionError(f"covariance entry {key} written twice")
        self.entries[key] = Fraction(value)

    def matrix(self) -> Matrix:
        n = self.size
        rows = [[Fraction(n) if i == j else Fraction(0) for j in range(1, n + 1)] for i in range(1, n + 1)]
        for (a, b), v in self.entries.items():
            rows[a - 1][b - 1] = v
            rows[b - 1][a - 1] = v
        return Matrix(rows, RATIONAL)


def _lam(a: int, b: int) -> Poly:
    return Poly.var((a, b))


def intended_equations(layout: ReductionLayout, source: ConstraintSystem) -> dict[tuple[int, int], tuple[str, Poly]]:
    """The polynomial each missing pair should encode, up to a constant factor."""
    r = layout.root
    out: dict[tuple[int, int], tuple[str, Poly]] = {}
    for g in layout.gadgets:
        c = source.constraints[g.index]
        if g.kind == "affine":
            p = Poly.const(c.rhs)
            for ell in c.indices():
                p = p - _lam(ell, r) * c.coeffs[ell - 1]
            out[g.missing[0]] = ("affine", p)
        else:
            i_, j_, i, j = (g.nodes[k] for k in ("i'", "j'", "i", "j"))
            out[(r, i)] = ("copy", _lam(i_, i) - _lam(c.b, r))
            out[(i, j)] = ("link", _lam(j_, j) - _lam(i_, i))
            out[(r, j)] = ("product", _lam(c.c, r) - _lam(c.a, r) * _lam(j_, j))
    return out


def proportional(p: Poly, q: Poly) -> Fraction | None:
    """``s`` with ``p == s * q`` and ``s != 0``, else None."""
    if q.is_zero():
        return Fraction(1) if p.is_zero() else None
    mono, coef = next(iter(q.items()))
    s = p.coefficient(mono) / coef
    if s == 0 or p != q * s:
        return None
    return s


def gadget_checks(graph: MixedGraph, sigma: Matrix, layout: ReductionLayout, source: ConstraintSystem) -> list[tuple[str, bool, str]]:
    """Compare every missing-pair equation with the constraint it should encode."""
    checks = []
    for pair, (role, want) in sorted(intended_equations(layout, source).items()):
        got = congruence_entry(graph, sigma, *pair)
        s = proportional(got, want)
        detail = f"factor {fraction_str(s)}" if s is not None else f"got {got.pretty()} want multiple of {want.pretty()}"
        checks.append((f"gadget {role} {pair}", s is not None, detail))
    return checks


def compile_system(cs: ConstraintSystem) -> ReducedInstance:
    """Build the graph and covariance matrix for a reduction-ready system."""
    if not cs.is_reduction_ready():
        bad = [type(c).__name__ for c in cs.constraints if not (isinstance(c, Mul) or isinstance(c, Affine))]
        raise ReductionError(
            "compile needs products and unit-coefficient affine rows only"
            + (f"; found {sorted(set(bad))}" if bad else "; run lower_to_unit first")
        )
    n = cs.n
    r = n + 1
    total = expected_node_count(cs)
    directed = {(ell, r) for ell in range(1, n + 1)}
    gadgets: list[tuple[int, str, dict[str, int], tuple]] = []
    nxt = r + 1
    for idx, c in enumerate(cs.constraints):
        if isinstance(c, Affine):
            gadgets.append((idx, "affine", {"i": nxt}, ((r, nxt),)))
            nxt += 1
        else:
            i_, j_, i, j = nxt, nxt + 1, nxt + 2, nxt + 3
            nxt += 4
            directed |= {(i_, i), (j_, j)}
            gadgets.append((idx, "mul", {"i'": i_, "j'": j_, "i": i, "j": j}, ((r, i), (i, j), (r, j))))
    assert nxt - 1 == total
    missing = {p for *_, miss in gadgets for p in miss}
    bidirected = {p for p in combinations(range(1, total + 1), 2) if p not in missing}
    graph = MixedGraph(total, frozenset(directed), frozenset(bidirected))

    w = _SigmaWriter(total)
    for idx, kind, nodes, _ in gadgets:
        c = cs.constraints[idx]
        if kind == "affine":
            i = nodes["i"]
            w.set(r, i, c.rhs)
            for ell in c.indices():
                w.set(ell, i, c.coeffs[ell - 1])
        else:
            i_, j_, i, j = nodes["i'"], nodes["j'"], nodes["i"], nodes["j"]
            # copy chain: weight of i' -> i equals x_b
            w.set(r, i, 0)
            w.set(r, i_, -1)
            w.set(c.b, i, 1)
            w.set(i, j, 0)
            w.set(i_, j_, 0)
            w.set(i_, j, 1)
            w.set(i, j_, -1)
            # product row: x_c = x_a * (weight of j' -> j)
            w.set(r, j, 0)
            w.set(r, j_, 0)
            w.set(c.c, j, 1)
            w.set(c.a, j_, 1)
    sigma = w.matrix()

    provisional = ReductionLayout(graph, r, n, tuple(Gadget(i, k, nd, m) for i, k, nd, m in gadgets))
    factors: dict[tuple[int, int], int] = {}
    for pair, (role, want) in intended_equations(provisional, cs).items():
        s = proportional(congruence_entry(graph, sigma, *pair), want)
        if s is None:
            raise ReductionError(f"gadget self-check failed at pair {pair} ({role})")
        factors[pair] = 1 if s > 0 else -1
    final = tuple(
        Gadget(g.index, g.kind, g.nodes, g.missing, {f"{a},{b}": factors[(a, b)] for a, b in g.missing})
        for g in provisional.gadgets
    )
    return ReducedInstance(ReductionLayout(graph, r, n, final), sigma, cs)


def embed_witness(ri: ReducedInstance, values: Sequence[Any]) -> ParamPoint:
    """Parameters in the fiber that encode a satisfying assignment."""
    cs = ri.source
    if len(values) != cs.n:
        raise ReductionError(f"witness has {len(values)} values for {cs.n} variables")
    exact = all(isinstance(v, (int, Fraction)) for v in values)
    res = evaluate(cs, values)
    if any(abs(v) > (0 if exact else 1e-9) for v in res):
        raise ReductionError("witness does not satisfy the source system")
    r = ri.layout.root
    lam: dict[tuple[int, int], Any] = {(k, r): values[k - 1] for k in range(1, cs.n + 1)}
    for g in ri.layout.gadgets:
        if g.kind == "mul":
            c = cs.constraints[g.index]
            lam[(g.nodes["i'"], g.nodes["i"])] = values[c.b - 1]
            lam[(g.nodes["j'"], g.nodes["j"])] = values[c.b - 1]
    mode = RATIONAL if exact else FLOAT
    lam_m = lambda_from_values(ri.graph, lam, mode)
    sigma = ri.sigma if mode == ri.sigma.mode else ri.sigma.to_float()
    omega = recover_omega(ri.graph, sigma, lam_m)
    tol = 0 if mode == RATIONAL else 1e-9
    if not omega_pattern_ok(ri.graph, omega, tol):
        raise PatternError("recovered error covariance is nonzero at a missing pair")
    if mode == RATIONAL:
        point = ParamPoint(lam_m, omega)
        if phi(ri.graph, point) != sigma:
            raise ReductionError("witness parameters do not reproduce sigma")
        return point
    zeros = {}
    for a, b in ri.graph.missing_pairs():
        zeros[(a - 1, b - 1)] = zeros[(b - 1, a - 1)] = 0.0
    point = ParamPoint(lam_m, omega.replace(zeros))
    if phi(ri.graph, point).max_abs_diff(sigma) > 1e-8:
        raise ReductionError("witness parameters do not reproduce sigma")
    return point


def pull_back(ri: ReducedInstance, lam: Matrix | Mapping[tuple[int, int], Any], tol: float = 1e-9) -> tuple:
    """Read the assignment ``x_l = weight of l -> r`` off a fiber point."""
    r = ri.layout.root
    if isinstance(lam, Matrix):
        values = tuple(lam[k - 1, r - 1] for k in range(1, ri.source.n + 1))
    else:
        values = tuple(lam[(k, r)] for k in range(1, ri.source.n + 1))
    res = evaluate(ri.source, values)
    worst = max((abs(v) for v in res), default=0)
    if worst > tol:
        raise ReductionError(f"fiber point does not satisfy the source system (residual {float(worst):.3g})")
    return values


@dataclass(frozen=True)
class Pipeline:
    """All stages of ``normalize -> plant -> lower -> compile``.

    ``offset`` is the index shift of the original variables inside the
    compiled system (1 when planted: the selector comes first).
    """

    original: ConstraintSystem
    planted: NormalizedSystem | None
    lowered: NormalizedSystem
    instance: ReducedInstance

    @property
    def offset(self) -> int:
        return 1 if self.planted is not None else 0

    def original_values(self, compiled_values: Sequence[Any]) -> tuple:
        return tuple(compiled_values[self.offset : self.offset + self.original.n])

    def selector(self, compiled_values: Sequence[Any]) -> Any | None:
        return compiled_values[0] if self.planted is not None else None

    def lift(self, values: Sequence[Any]) -> tuple:
        """A solution of the original system as a solution of the compiled one
        (selector ``y = 0`` when planted)."""
        if len(values) != self.original.n:
            raise ValueError(f"expected {self.original.n} values, got {len(values)}")
        values = tuple(values)
        if self.planted is not None:
            values = self.planted.extend(dict(zip(self.planted.variables, (0,) + values)))
        return self.lowered.extend(dict(zip(self.lowered.variables, values)))


def reduce_pipeline(cs: ConstraintSystem, plant: bool = False) -> Pipeline:
    planted = plant_solution(cs) if plant else None
    base = planted.system if planted is not None else cs
    lowered = lower_to_unit(base)
    return Pipeline(cs, planted, lowered, compile_system(lowered.system))


# -- bundles ------------------------------------------------------------------


def bundle_json(ri: ReducedInstance, extra: Mapping[str, Any] | None = None) -> dict[str, Any]:
    data = {
        "format": BUNDLE_FORMAT,
        "graph": ri.graph.to_json(),
        "sigma": ri.sigma.to_json(),
        "source": ri.source.to_json(),
        "layout": ri.layout.to_json(),
        "provenance": {
            "source_sha256": ri.source.digest(),
            "node_count_formula": "1 + n + k + 4(m - k)",
            "orientation": {f"{a},{b}": s for g in ri.layout.gadgets for (a, b), s in _orient(g)},
        },
    }
    if extra:
        data["provenance"].update(extra)
    return data


def _orient(g: Gadget):
    for key, s in g.orientation.items():
        a, b = key.split(",")
        yield (int(a), int(b)), s


def _bundle_file(path: str | os.PathLike) -> Path:
    p = Path(path)
    if p.suffix.lower() == ".json":
        return p
    return p / "bundle.json"


def write_bundle(ri: ReducedInstance, path: str | os.PathLike, extra: Mapping[str, Any] | None = None) -> Path:
    target = _bundle_file(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(bundle_json(ri, extra), indent=1, sort_keys=True) + "\n")
    return target


def read_bundle(path: str | os.PathLike) -> dict[str, Any]:
    data = json.loads(_bundle_file(path).read_text())
    if data.get("format") != BUNDLE_FORMAT:
        raise ReductionError(f"not a reduction bundle (format {data.get('format')!r})")
    return data


@dataclass
class Certificate:
    checks: list[tuple[str, bool, str]]

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def failures(self) -> list[str]:
        return [name for name, ok, _ in self.checks if not ok]

    def to_json(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "checks": [{"name": n, "ok": ok, "detail": d} for n, ok, d in self.checks],
        }

    def text(self) -> str:
        lines = [f"{'PASS' if ok else 'FAIL'}  {n}  {d}" for n, ok, d in self.checks]
        lines.append("certificate: " + ("all checks passed" if self.ok else f"{len(self.failures())} check(s) failed"))
        return "\n".join(lines)


def verify_bundle(bundle: str | os.PathLike | Mapping[str, Any], witness: Sequence[Any] | None = None) -> Certificate:
    """Re-check a bundle from scratch: entries, dominance, Cholesky, gadgets,
    layout, and optionally a witness embedding."""
    data = bundle if isinstance(bundle, Mapping) else read_bundle(bundle)
    checks: list[tuple[str, bool, str]] = []

    def add(name: str, ok: bool, detail: str = "") -> None:
        checks.append((name, bool(ok), detail))

    graph, _ = graph_from_json(data["graph"])
    sigma = Matrix.from_json(data["sigma"])
    source = ConstraintSystem.from_json(data["source"])
    lay = data["layout"]
    gadgets = tuple(Gadget.from_json(g) for g in lay["gadgets"])
    layout = ReductionLayout(graph, int(lay["root"]), int(lay["num_vars"]), gadgets)
    total = graph.n

    add("source hash", source.digest() == data["provenance"].get("source_sha256"), source.digest()[:16])
    expected = expected_node_count(source)
    add("node count 1+n+k+4(m-k)", total == expected, f"{total} nodes, formula gives {expected}")
    add("sigma shape", sigma.shape == (total, total), f"{sigma.shape}")
    if sigma.shape != (total, total):
        return Certificate(checks)
    add("sigma symmetric", sigma.is_symmetric())
    add("sigma exact rational", sigma.mode == RATIONAL)
    diag_ok = all(sigma[i, i] == total for i in range(total))
    add("diagonal equals node count", diag_ok, f"{total}")
    off_ok = all(sigma[i, j] in (-1, 0, 1) for i in range(total) for j in range(total) if i != j)
    add("off-diagonal entries in {-1,0,1}", off_ok)
    add("strictly diagonally dominant", is_strictly_diagonally_dominant(sigma))
    try:
        cholesky(sigma)
        add("cholesky", True, "positive definite")
    except (NotPositiveDefinite, ValueError) as exc:
        add("cholesky", False, str(exc))

    miss = {p for g in gadgets for p in g.missing}
    add("missing pairs are exactly the gadget pairs", set(graph.missing_pairs()) == miss, f"{len(miss)} pairs")
    outdeg: dict[int, int] = {}
    for a, _ in graph.directed:
        outdeg[a] = outdeg.get(a, 0) + 1
    bottom = layout.bottom_nodes()
    add("bottom layer has outdegree one", all(outdeg.get(v, 0) == 1 for v in bottom) and set(outdeg) == set(bottom))
    try:
        fresh = compile_system(source)
        add("recompiled sigma matches", fresh.sigma == sigma)
        add("recompiled graph matches", fresh.graph == graph)
    except ReductionError as exc:
        add("recompile", False, str(exc))
    for name, ok, detail in gadget_checks(graph, sigma, layout, source):
        add(name, ok, detail)

    if witness is not None:
        ri = ReducedInstance(layout, sigma, source)
        try:
            point = embed_witness(ri, witness)
            from .scm import fiber_system, residual

            res = residual(fiber_system(graph, sigma), point.lam)
            add("witness embedding residual", res == 0, f"residual {res}")
        except (ReductionError, PatternError, ValueError) as exc:
            add("witness embedding", False, str(exc))
    return Certificate(checks)
