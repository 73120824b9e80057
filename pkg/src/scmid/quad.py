"""Polynomial constraint systems in product/affine normal form.

Variables are ``x1..xn`` (1-based indices).  Each constraint is one of::

    Mul(a, b, c)    x_a * x_b - x_c = 0
    Add(a, b, c)    x_a + x_b - x_c = 0
    Eq(a, b)        x_a - x_b = 0
    One(a)          x_a - 1 = 0
    Zero(a)         x_a = 0
    Affine(α, β)    sum_l α_l x_l - β = 0
"""

from __future__ import annotations

import ast
import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Hashable, Iterable, Mapping, Sequence, Union

from .poly import Poly, fraction_str, to_fraction

__all__ = [
    "Mul",
    "Add",
    "Eq",
    "One",
    "Zero",
    "Affine",
    "Constraint",
    "ConstraintSystem",
    "NormalizedSystem",
    "Overflow",
    "evaluate",
    "normalize",
    "parse_polynomial",
    "plant_solution",
    "lower_to_unit",
    "brute_solutions",
    "is_unit_affine",
]


class Overflow(RuntimeError):
    """The brute-force oracle could not produce a complete solution list."""

    def __init__(self, reason: str, report=None):
        super().__init__(reason)
        self.reason = reason
        self.report = report


def _x(k: int) -> Poly:
    return Poly.var(k)


@dataclass(frozen=True)
class Mul:
    a: int
    b: int
    c: int

    def poly(self, n: int) -> Poly:
        return _x(self.a) * _x(self.b) - _x(self.c)

    def indices(self) -> tuple[int, ...]:
        return (self.a, self.b, self.c)

    def to_json(self) -> dict:
        return {"op": "mul", "a": self.a, "b": self.b, "c": self.c}


@dataclass(frozen=True)
class Add:
    a: int
    b: int
    c: int

    def poly(self, n: int) -> Poly:
        return _x(self.a) + _x(self.b) - _x(self.c)

    def indices(self) -> tuple[int, ...]:
        return (self.a, self.b, self.c)

    def to_json(self) -> dict:
        return {"op": "add", "a": self.a, "b": self.b, "c": self.c}


@dataclass(frozen=True)
class Eq:
    a: int
    b: int

    def poly(self, n: int) -> Poly:
        return _x(self.a) - _x(self.b)

    def indices(self) -> tuple[int, ...]:
        return (self.a, self.b)

    def to_json(self) -> dict:
        return {"op": "eq", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class One:
    a: int

    def poly(self, n: int) -> Poly:
        return _x(self.a) - 1

    def indices(self) -> tuple[int, ...]:
        return (self.a,)

    def to_json(self) -> dict:
        return {"op": "one", "a": self.a}


@dataclass(frozen=True)
class Zero:
    a: int

    def poly(self, n: int) -> Poly:
        return _x(self.a)

    def indices(self) -> tuple[int, ...]:
        return (self.a,)

    def to_json(self) -> dict:
        return {"op": "zero", "a": self.a}


@dataclass(frozen=True)
class Affine:
    coeffs: tuple[Fraction, ...]
    rhs: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(to_fraction(c) for c in self.coeffs))
        object.__setattr__(self, "rhs", to_fraction(self.rhs))

    @classmethod
    def sparse(cls, n: int, coeffs: Mapping[int, Any], rhs: Any = 0) -> "Affine":
        dense = [Fraction(0)] * n
        for k, c in coeffs.items():
            dense[k - 1] += to_fraction(c)
        return cls(tuple(dense), rhs)

    def poly(self, n: int) -> Poly:
        p = Poly.const(-self.rhs)
        for k, c in enumerate(self.coeffs, start=1):
            if c:
                p = p + _x(k) * c
        return p

    def indices(self) -> tuple[int, ...]:
        return tuple(k for k, c in enumerate(self.coeffs, start=1) if c)

    def padded(self, n: int) -> "Affine":
        return Affine(self.coeffs + (Fraction(0),) * (n - len(self.coeffs)), self.rhs)

    def to_json(self) -> dict:
        return {"op": "affine", "coeffs": [fraction_str(c) for c in self.coeffs], "rhs": fraction_str(self.rhs)}


Constraint = Union[Mul, Add, Eq, One, Zero, Affine]

_OPS = {"mul": Mul, "add": Add, "eq": Eq, "one": One, "zero": Zero}


def is_unit_affine(c: Affine) -> bool:
    return all(v in (-1, 0, 1) for v in c.coeffs) and c.rhs in (-1, 0, 1)


@dataclass(frozen=True)
class ConstraintSystem:
    n: int
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.n < 0:
            raise ValueError("variable count must be non-negative")
        for c in self.constraints:
            if isinstance(c, Affine) and len(c.coeffs) != self.n:
                raise ValueError(f"affine constraint has {len(c.coeffs)} coefficients for {self.n} variables")
            for k in c.indices():
                if not 1 <= k <= self.n:
                    raise ValueError(f"variable index {k} out of range 1..{self.n}")

    def __len__(self) -> int:
        return len(self.constraints)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def polynomials(self) -> list[Poly]:
        return [c.poly(self.n) for c in self.constraints]

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.constraints:
            key = type(c).__name__
            out[key] = out.get(key, 0) + 1
        return out

    def is_reduction_ready(self) -> bool:
        """Only products and affine rows with coefficients in {-1, 0, 1}."""
        return all(isinstance(c, Mul) or (isinstance(c, Affine) and is_unit_affine(c)) for c in self.constraints)

    def to_poly_system(self):
        from .solver import PolySystem

        return PolySystem(
            variables=tuple(range(1, self.n + 1)),
            equations=tuple(self.polynomials()),
            names=tuple(f"x{k}" for k in range(1, self.n + 1)),
        )

    def to_json(self) -> dict:
        return {"n": self.n, "constraints": [c.to_json() for c in self.constraints]}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "ConstraintSystem":
        n = int(data["n"])
        out = []
        for item in data.get("constraints", []):
            op = item.get("op")
            if op == "affine":
                out.append(Affine(tuple(to_fraction(c) for c in item["coeffs"]), to_fraction(item.get("rhs", 0))))
            elif op in _OPS:
                kind = _OPS[op]
                fields = [k for k in ("a", "b", "c") if k in kind.__dataclass_fields__]
                out.append(kind(*(int(item[k]) for k in fields)))
            else:
                raise ValueError(f"unknown constraint op {op!r}")
        return cls(n, tuple(out))

    def digest(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def evaluate(cs: ConstraintSystem, values: Sequence[Any]) -> list[Any]:
    """Per-constraint residuals; exact for rational values."""
    if len(values) != cs.n:
        raise ValueError(f"assignment has {len(values)} values for {cs.n} variables")
    point = {k: v for k, v in enumerate(values, start=1)}
    return [p.evaluate(point) for p in cs.polynomials()]


# -- infix reader -------------------------------------------------------------


def parse_polynomial(text: str) -> Poly:
    """Read ``x1*x2 + 3*x3**2 - 1/2`` or ``lhs = rhs`` into a polynomial.

    ``^`` is accepted as a power.  Variables are keyed by their identifier string.
    """
    if text.count("=") == 1:
        lhs, rhs = text.split("=")
        return parse_polynomial(lhs) - parse_polynomial(rhs)
    try:
        tree = ast.parse(text.strip().replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse polynomial {text!r}: {exc.msg}") from exc
    return _from_ast(tree.body)


def _from_ast(node: ast.AST) -> Poly:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return Poly.const(to_fraction(str(node.value)) if isinstance(node.value, float) else node.value)
    if isinstance(node, ast.Name):
        return Poly.var(node.id)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        p = _from_ast(node.operand)
        return -p if isinstance(node.op, ast.USub) else p
    if isinstance(node, ast.BinOp):
        left = _from_ast(node.left)
        if isinstance(node.op, ast.Pow):
            right = _from_ast(node.right)
            if not right.is_constant() or right.constant_term.denominator != 1 or right.constant_term < 0:
                raise ValueError("exponents must be non-negative integer constants")
            return left ** int(right.constant_term)
        right = _from_ast(node.right)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            if not right.is_constant() or right.is_zero():
                raise ValueError("division only by nonzero constants")
            return left * (1 / right.constant_term)
    raise ValueError(f"unsupported expression element {ast.dump(node)}")


# -- flattening ---------------------------------------------------------------


@dataclass(frozen=True)
class NormalizedSystem:
    """A normal-form system whose first ``len(variables)`` unknowns are the
    original variables; the rest are auxiliaries determined by them."""

    system: ConstraintSystem
    variables: tuple[Hashable, ...]
    aux: tuple[str, ...] = field(default=())

    def restrict(self, values: Sequence[Any]) -> dict[Hashable, Any]:
        return {v: values[k] for k, v in enumerate(self.variables)}

    def extend(self, original: Mapping[Hashable, Any]) -> tuple:
        """Complete an assignment of the original variables with auxiliaries."""
        values: dict[int, Any] = {k + 1: original[v] for k, v in enumerate(self.variables)}
        pending = list(self.system.constraints)
        while len(values) < self.system.n and pending:
            progress = False
            for c in list(pending):
                if isinstance(c, Mul) and c.a in values and c.b in values and c.c not in values:
                    values[c.c] = values[c.a] * values[c.b]
                elif isinstance(c, Affine):
                    unknown = [k for k in c.indices() if k not in values]
                    if len(unknown) != 1:
                        continue
                    k = unknown[0]
                    rest = sum((c.coeffs[j - 1] * values[j] for j in c.indices() if j != k), Fraction(0))
                    values[k] = (c.rhs - rest) / c.coeffs[k - 1]
                else:
                    continue
                pending.remove(c)
                progress = True
            if not progress:
                break
        if len(values) < self.system.n:
            raise ValueError("auxiliary variables are not determined by the originals")
        return tuple(values[k] for k in range(1, self.system.n + 1))


class _Flattener:
    def __init__(self, base: int):
        self.n = base
        self.products: dict[tuple[int, ...], int] = {}
        self.muls: list[Mul] = []
        self.aux: list[str] = []

    def monomial(self, factors: tuple[int, ...]) -> int:
        """Variable equal to the product of ``factors`` (sorted, with repeats)."""
        if len(factors) == 1:
            return factors[0]
        if factors in self.products:
            return self.products[factors]
        head = self.monomial(factors[:-1])
        self.n += 1
        t = self.n
        self.muls.append(Mul(head, factors[-1], t))
        self.products[factors] = t
        self.aux.append("*".join(f"x{f}" for f in factors))
        return t


def _flatten(polys: Sequence[Poly], nvars: int) -> tuple[ConstraintSystem, list[str]]:
    """Polynomials over ``1..nvars`` to products plus affine rows."""
    fl = _Flattener(nvars)
    rows: list[tuple[dict[int, Fraction], Fraction]] = []
    order: list[tuple[str, int]] = []
    for p in polys:
        coeffs: dict[int, Fraction] = {}
        const = Fraction(0)
        for mono, c in p.items():
            if not mono:
                const += c
                continue
            factors = tuple(v for v, e in mono for _ in range(e))
            before = len(fl.muls)
            t = fl.monomial(factors)
            order.extend(("mul", k) for k in range(before, len(fl.muls)))
            coeffs[t] = coeffs.get(t, Fraction(0)) + c
        order.append(("row", len(rows)))
        rows.append(({k: v for k, v in coeffs.items() if v}, -const))
    constraints: list[Constraint] = []
    for kind, k in order:
        if kind == "mul":
            constraints.append(fl.muls[k])
        else:
            coeffs, rhs = rows[k]
            constraints.append(Affine.sparse(fl.n, coeffs, rhs))
    return ConstraintSystem(fl.n, tuple(constraints)), fl.aux


def normalize(polys: Iterable[Poly | str], variables: Sequence[Hashable] | None = None) -> NormalizedSystem:
    """Flatten arbitrary polynomials into products and affine rows.

    Every monomial of degree two or more gets an auxiliary variable, built
    left to right and shared between polynomials; each polynomial then
    becomes one affine row.  Auxiliaries are functions of the originals, so
    solutions correspond one to one.
    """
    plist = [parse_polynomial(p) if isinstance(p, str) else p for p in polys]
    if variables is None:
        seen: list[Hashable] = []
        for p in plist:
            for mono, _ in sorted(p.items(), key=lambda t: [str(v) for v, _ in t[0]]):
                for v, _ in mono:
                    if v not in seen:
                        seen.append(v)
        try:
            variables = sorted(seen)
        except TypeError:
            variables = seen
    variables = tuple(variables)
    index = {v: k + 1 for k, v in enumerate(variables)}
    missing = set().union(*(p.variables() for p in plist)) - set(index) if plist else set()
    if missing:
        raise ValueError(f"undeclared variables {sorted(map(str, missing))}")
    indexed = [p.map_vars(index.__getitem__) for p in plist]
    system, aux = _flatten(indexed, len(variables))
    return NormalizedSystem(system, variables, tuple(aux))


def plant_solution(cs: ConstraintSystem) -> NormalizedSystem:
    """Add a selector ``y`` so the system gains exactly the solution ``y=1, x=0``.

    The new unknowns are ``y`` (index 1) followed by ``x1..xn`` (indices
    2..n+1); the constraints ``y(y-1)``, ``y x_i`` and ``(y-1) p_j`` are
    flattened back into normal form.
    """
    y = Poly.var(1)
    shift = lambda k: k + 1  # noqa: E731
    polys = [y * y - y]
    polys += [y * Poly.var(shift(k)) for k in range(1, cs.n + 1)]
    polys += [(y - 1) * p.map_vars(shift) for p in cs.polynomials()]
    system, aux = _flatten(polys, cs.n + 1)
    names = ("y",) + tuple(f"x{k}" for k in range(1, cs.n + 1))
    return NormalizedSystem(system, names, tuple(aux))


def lower_to_unit(cs: ConstraintSystem) -> NormalizedSystem:
    """Rewrite into products and affine rows with coefficients in {-1, 0, 1}.

    Integer multiples ``c * x`` are spelled as sums of doubling chains
    ``d_0 = x``, ``d_{t+1} = d_t + e_t`` with copies ``e_t = d_t``; constants
    use a variable pinned to one.  The original unknowns keep their indices.
    """
    n = cs.n
    out: list[Any] = []  # Mul or (sparse coeffs, rhs)
    chains: dict[int, list[int]] = {}
    aux: list[str] = []
    one_var: list[int] = []

    def fresh(label: str) -> int:
        aux.append(label)
        return n + len(aux)

    def chain(v: int, length: int) -> list[int]:
        d = chains.setdefault(v, [v])
        while len(d) < length:
            e = fresh(f"copy of 2^{len(d) - 1} * x{v}")
            nxt = fresh(f"2^{len(d)} * x{v}")
            out.append(({e: 1, d[-1]: -1}, 0))
            out.append(({nxt: 1, d[-1]: -1, e: -1}, 0))
            d.append(nxt)
        return d

    def one() -> int:
        if not one_var:
            one_var.append(fresh("1"))
            out.append(({one_var[0]: 1}, 1))
        return one_var[0]

    for c in cs.constraints:
        if isinstance(c, Mul):
            out.append(c)
            continue
        p = c.poly(n)
        coeffs = {mono[0][0]: coef for mono, coef in p.items() if mono}
        rhs = -p.constant_term
        scale = 1
        for v in list(coeffs.values()) + [rhs]:
            scale = scale * v.denominator // math.gcd(scale, v.denominator)
        ints = {k: int(v * scale) for k, v in coeffs.items() if v}
        b = int(rhs * scale)
        terms = list(ints.items())
        if abs(b) > 1:
            terms.append((one(), -b))
            b = 0
        unit: dict[int, int] = {}
        for v, k in terms:
            bits = bin(abs(k))[2:][::-1]
            d = chain(v, len(bits))
            sign = 1 if k > 0 else -1
            for t, bit in enumerate(bits):
                if bit == "1":
                    unit[d[t]] = unit.get(d[t], 0) + sign
        out.append(({k: v for k, v in unit.items() if v}, b))

    total = n + len(aux)
    constraints = [c if isinstance(c, Mul) else Affine.sparse(total, c[0], c[1]) for c in out]
    system = ConstraintSystem(total, tuple(constraints))
    return NormalizedSystem(system, tuple(f"x{k}" for k in range(1, n + 1)), tuple(aux))


def brute_solutions(cs: ConstraintSystem, box: float = 10.0, budget: int = 1_000_000, cfg=None) -> list[tuple]:
    """Every isolated real solution in ``[-box, box]^n``, verified.

    Raises Overflow when the solver cannot certify a complete list, in
    particular when a positive-dimensional solution set is suspected.
    """
    from .solver import COMPLETE, SolveConfig, solve

    if cfg is None:
        cfg = SolveConfig(box=box, split_budget=budget)
    report = solve(cs.to_poly_system(), cfg)
    if report.status != COMPLETE:
        raise Overflow(report.status, report)
    if report.outside:
        raise Overflow("box", report)
    return [r.values() for r in report.roots]
