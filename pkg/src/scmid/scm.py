"""Parametrization map, covariance recovery and fiber equation systems."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .graph import GraphError, MixedGraph, missing_pairs
from .matrix import (
    FLOAT,
    RATIONAL,
    Matrix,
    NotPositiveDefinite,
    SingularMatrix,
    cholesky,
    congruence,
    general_inverse,
    unit_upper_inverse,
)
from .poly import Poly

__all__ = [
    "ParamPoint",
    "PatternError",
    "FiberSystem",
    "phi",
    "recover_omega",
    "fiber_system",
    "feasibility_system",
    "residual",
    "edge_project",
    "check_covariance",
    "lambda_from_values",
    "lambda_values",
    "edge_name",
    "parse_edge_name",
]


class PatternError(ValueError):
    """A matrix has a nonzero entry the graph does not allow."""


def edge_name(edge: tuple[int, int]) -> str:
    return f"{edge[0]},{edge[1]}"


def parse_edge_name(name: str) -> tuple[int, int]:
    i, j = name.split(",")
    return int(i), int(j)


def check_lambda(g: MixedGraph, lam: Matrix) -> None:
    if lam.shape != (g.n, g.n):
        raise PatternError(f"lambda must be {g.n}x{g.n}, got {lam.shape}")
    for i in range(g.n):
        for j in range(g.n):
            if lam[i, j] != 0 and (i + 1, j + 1) not in g.directed:
                raise PatternError(f"lambda[{i + 1},{j + 1}] is nonzero but {i + 1} -> {j + 1} is not an edge")


def check_omega(g: MixedGraph, omega: Matrix) -> None:
    if omega.shape != (g.n, g.n):
        raise PatternError(f"omega must be {g.n}x{g.n}, got {omega.shape}")
    if not omega.is_symmetric():
        raise PatternError("omega must be symmetric")
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if omega[i, j] != 0 and (i + 1, j + 1) not in g.bidirected:
                raise PatternError(f"omega[{i + 1},{j + 1}] is nonzero but {i + 1} <-> {j + 1} is not an edge")
    cholesky(omega)


def check_covariance(sigma: Matrix) -> Matrix:
    """Return ``sigma`` if it is symmetric positive definite, else raise."""
    if not sigma.is_square() or not sigma.is_symmetric():
        raise ValueError("covariance matrix must be square and symmetric")
    cholesky(sigma)
    return sigma


def _i_minus(lam: Matrix) -> Matrix:
    return Matrix.identity(lam.rows, lam.mode) - lam


def _inverse_of_i_minus(g: MixedGraph, lam: Matrix) -> Matrix:
    m = _i_minus(lam)
    if g.cyclic:
        return general_inverse(m)
    return unit_upper_inverse(m)


@dataclass(frozen=True)
class ParamPoint:
    lam: Matrix
    omega: Matrix

    def validate(self, g: MixedGraph) -> "ParamPoint":
        check_lambda(g, self.lam)
        check_omega(g, self.omega)
        if g.cyclic:
            general_inverse(_i_minus(self.lam))
        return self

    def to_json(self) -> dict[str, Any]:
        return {"lambda": self.lam.to_json(), "omega": self.omega.to_json()}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "ParamPoint":
        return cls(Matrix.from_json(data["lambda"]), Matrix.from_json(data["omega"]))


def phi(g: MixedGraph, p: ParamPoint) -> Matrix:
    """Covariance ``(I - L)^-T W (I - L)^-1`` implied by the parameters."""
    p.validate(g)
    inv = _inverse_of_i_minus(g, p.lam)
    return congruence(p.omega, inv)


def recover_omega(g: MixedGraph, sigma: Matrix, lam: Matrix) -> Matrix:
    """The unique error covariance with ``phi(lam, omega) == sigma``.

    No zero-pattern check is made on the result.
    """
    check_lambda(g, lam)
    m = _i_minus(lam)
    if g.cyclic:
        general_inverse(m)
    if sigma.mode != lam.mode:
        sigma, m = sigma.to_float(), m.to_float()
    return congruence(sigma, m)


def lambda_from_values(g: MixedGraph, values: Mapping[tuple[int, int], Any], mode: str | None = None) -> Matrix:
    entries = [[0] * g.n for _ in range(g.n)]
    for (i, j), v in values.items():
        if (i, j) not in g.directed:
            raise PatternError(f"{i} -> {j} is not an edge")
        entries[i - 1][j - 1] = v
    if mode is None:
        mode = FLOAT if any(isinstance(v, float) for v in values.values()) else RATIONAL
    return Matrix(entries, mode)


def lambda_values(g: MixedGraph, lam: Matrix) -> dict[tuple[int, int], Any]:
    return {(i, j): lam[i - 1, j - 1] for i, j in g.edges()}


def congruence_entry(g: MixedGraph, sigma: Matrix, i: int, j: int) -> Poly:
    """Entry ``(i, j)`` of ``(I - L)^T S (I - L)`` as a polynomial in edge weights.

    Column ``k`` of ``I - L`` is ``e_k - sum_{a in pa(k)} l_{a,k} e_a``.
    """
    def column(k: int) -> list[tuple[int, Poly]]:
        col = [(k, Poly.const(1))]
        col += [(a, -Poly.var((a, k))) for a in g.parents(k)]
        return col

    total = Poly()
    for a, pa in column(i):
        for b, pb in column(j):
            s = sigma[a - 1, b - 1]
            if s:
                total = total + pa * pb * Fraction(s)
    return total


def determinant_poly(g: MixedGraph) -> Poly:
    """``det(I - L)`` as a polynomial, by cofactor expansion with memoization."""
    n = g.n
    entry: dict[tuple[int, int], Poly] = {}
    for i in range(1, n + 1):
        entry[(i, i)] = Poly.const(1)
    for i, j in g.directed:
        entry[(i, j)] = -Poly.var((i, j))
    memo: dict[frozenset, Poly] = {}

    def minor(row: int, cols: frozenset) -> Poly:
        if row > n:
            return Poly.const(1)
        if cols in memo:
            return memo[cols]
        total = Poly()
        ordered = sorted(cols)
        for pos, c in enumerate(ordered):
            e = entry.get((row, c))
            if e is None:
                continue
            sub = minor(row + 1, cols - {c})
            term = e * sub
            total = total + (term if pos % 2 == 0 else -term)
        memo[cols] = total
        return total

    return minor(1, frozenset(range(1, n + 1)))


@dataclass(frozen=True)
class FiberSystem:
    """One equation per missing bidirected pair; unknowns are the edge weights.

    In cyclic mode ``nonzero`` holds ``det(I - L)``; roots where it vanishes
    are not part of the fiber.
    """

    graph: MixedGraph
    sigma: Matrix
    pairs: tuple[tuple[int, int], ...]
    equations: tuple[Poly, ...]
    variables: tuple[tuple[int, int], ...]
    nonzero: tuple[Poly, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.equations)

    def equation(self, pair: tuple[int, int]) -> Poly:
        return self.equations[self.pairs.index(pair)]

    def evaluate(self, lam: Matrix) -> list[Any]:
        point = lambda_values(self.graph, lam)
        return [eq.evaluate(point) for eq in self.equations]

    def to_poly_system(self):
        from .solver import PolySystem

        return PolySystem(
            variables=self.variables,
            equations=self.equations,
            nonzero=self.nonzero,
            names=tuple(edge_name(v) for v in self.variables),
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "graph": self.graph.to_json(),
            "variables": [edge_name(v) for v in self.variables],
            "equations": [
                {"pair": list(p), "terms": eq.to_json(edge_name)}
                for p, eq in zip(self.pairs, self.equations)
            ],
            "nonzero": [q.to_json(edge_name) for q in self.nonzero],
        }


def fiber_system(g: MixedGraph, sigma: Matrix) -> FiberSystem:
    check_covariance(sigma)
    if sigma.shape != (g.n, g.n):
        raise ValueError(f"sigma must be {g.n}x{g.n}")
    pairs = tuple(missing_pairs(g))
    eqs = tuple(congruence_entry(g, sigma, i, j) for i, j in pairs)
    nonzero = (determinant_poly(g),) if g.cyclic else ()
    return FiberSystem(g, sigma, pairs, eqs, tuple(g.edges()), nonzero)


def feasibility_system(g: MixedGraph, sigma: Matrix) -> FiberSystem:
    """Sigma lies in the image of phi iff this system has a real root.

    Positive definiteness of the recovered omega needs no equation: it is a
    congruence of a positive definite sigma.
    """
    return fiber_system(g, sigma)


def residual(fs: FiberSystem, lam: Matrix | Mapping[tuple[int, int], Any]) -> Any:
    """Largest absolute equation value; exact when ``lam`` is rational."""
    point = lam if isinstance(lam, Mapping) else lambda_values(fs.graph, lam)
    values = [abs(eq.evaluate(point)) for eq in fs.equations]
    if not values:
        return Fraction(0)
    return max(values)


def edge_project(
    solutions: Iterable[Matrix | Mapping[tuple[int, int], Any]],
    i: int,
    j: int,
    tol: float = 1e-6,
    graph: MixedGraph | None = None,
) -> list[Any]:
    """Distinct values of the ``i -> j`` weight across fiber points."""
    if graph is not None and (i, j) not in graph.directed:
        raise GraphError(f"{i} -> {j} is not an edge")
    values: list[Any] = []
    for sol in solutions:
        v = sol[(i, j)] if isinstance(sol, Mapping) else sol[i - 1, j - 1]
        if not any(abs(float(v) - float(w)) <= tol for w in values):
            values.append(v)
    return sorted(values, key=float)


def omega_pattern_ok(g: MixedGraph, omega: Matrix, tol: float = 0.0) -> bool:
    """True when omega vanishes (within ``tol``) at every missing pair."""
    return all(abs(omega[i - 1, j - 1]) <= tol for i, j in missing_pairs(g))


def safe_is_pd(m: Matrix) -> bool:
    try:
        cholesky(m)
    except (NotPositiveDefinite, ValueError):
        return False
    return True


def is_regular(g: MixedGraph, lam: Matrix) -> bool:
    try:
        _inverse_of_i_minus(g, lam)
    except (SingularMatrix, ValueError):
        return False
    return True


def matrices_close(a: Matrix, b: Matrix, tol: float) -> bool:
    return a.max_abs_diff(b) <= tol


def zero_lambda(g: MixedGraph, mode: str = RATIONAL) -> Matrix:
    return Matrix.zeros(g.n, g.n, mode)
