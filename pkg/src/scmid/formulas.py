"""Quantified real-arithmetic sentences about mixed graphs.

Sentences are built as a small formula tree over polynomials with string
variable names, then rendered as SMT-LIB 2 or as plain text.  The SMT-LIB
form is read back by :func:`parse_smt2`, so ``emit -> parse -> emit`` is a
fixed point.

Rendering conventions: free matrix symbols are ``declare-fun`` constants, an
outermost existential block becomes ``declare-const`` constants, and any
remaining quantifiers are explicit ``forall``/``exists`` binders.  Dimension
predicates (``dim S >= d``) have no executable semantics and are emitted as
declared Boolean constants with their meaning in comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Sequence, Union

from .graph import MixedGraph, missing_pairs
from .matrix import Matrix
from .poly import Poly
from .scm import determinant_poly

__all__ = [
    "Rel",
    "BoolConst",
    "BoolVar",
    "And",
    "Or",
    "Not",
    "Implies",
    "Quant",
    "Call",
    "Definition",
    "QuantifiedSentence",
    "emit_pd_membership",
    "emit_numeric_identifiability",
    "emit_feasibility",
    "emit_generic_identifiability",
    "to_smt2",
    "to_text",
    "parse_smt2",
    "unbound_variables",
]


# -- formula tree -------------------------------------------------------------


@dataclass(frozen=True)
class Rel:
    op: str  # one of = != < <= > >=
    lhs: Poly
    rhs: Poly = field(default_factory=Poly)


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class BoolVar:
    name: str


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    item: "Formula"


@dataclass(frozen=True)
class Implies:
    premise: "Formula"
    conclusion: "Formula"


@dataclass(frozen=True)
class Quant:
    kind: str  # exists | forall
    names: tuple[str, ...]
    body: "Formula"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[Poly, ...]


Formula = Union[Rel, BoolConst, BoolVar, And, Or, Not, Implies, Quant, Call]


@dataclass(frozen=True)
class Definition:
    name: str
    params: tuple[str, ...]
    body: Formula
    comment: str = ""


@dataclass(frozen=True)
class QuantifiedSentence:
    """``prefix`` is a list of ``(kind, names)`` blocks applied to ``matrix``.

    ``parameters`` are free real symbols (entries of a matrix the sentence is
    about); ``booleans`` are opaque propositional atoms with a description.
    """

    prefix: tuple[tuple[str, tuple[str, ...]], ...]
    matrix: Formula
    parameters: tuple[str, ...] = ()
    booleans: tuple[tuple[str, str], ...] = ()
    definitions: tuple[Definition, ...] = ()
    provenance: str = ""
    comments: tuple[str, ...] = ()

    def variables(self) -> list[str]:
        return [v for _, names in self.prefix for v in names]


def unbound_variables(s: QuantifiedSentence) -> set[str]:
    """Real symbols of the sentence bound neither by a quantifier nor as a parameter."""

    def free(f: Formula, bound: frozenset) -> set[str]:
        if isinstance(f, Rel):
            return (f.lhs.variables() | f.rhs.variables()) - bound
        if isinstance(f, Call):
            return set().union(*(a.variables() for a in f.args)) - bound
        if isinstance(f, (And, Or)):
            return set().union(*(free(x, bound) for x in f.items))
        if isinstance(f, Not):
            return free(f.item, bound)
        if isinstance(f, Implies):
            return free(f.premise, bound) | free(f.conclusion, bound)
        if isinstance(f, Quant):
            return free(f.body, bound | set(f.names))
        return set()

    out = free(s.matrix, frozenset(s.variables()) | set(s.parameters))
    for d in s.definitions:
        out |= free(d.body, frozenset(d.params))
    return out


def _walk(f: Formula):
    yield f
    if isinstance(f, (And, Or)):
        for x in f.items:
            yield from _walk(x)
    elif isinstance(f, Not):
        yield from _walk(f.item)
    elif isinstance(f, Implies):
        yield from _walk(f.premise)
        yield from _walk(f.conclusion)
    elif isinstance(f, Quant):
        yield from _walk(f.body)


def _conj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    if not items:
        return BoolConst(True)
    return items[0] if len(items) == 1 else And(items)


def _disj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    if not items:
        return BoolConst(False)
    return items[0] if len(items) == 1 else Or(items)


def _eq(a: Poly, b: Poly) -> Rel:
    return Rel("=", a, b)


# -- building blocks ------------------------------------------------------------


def _v(name: str) -> Poly:
    return Poly.var(name)


def _sym(prefix: str, i: int, j: int) -> str:
    return f"{prefix}_{min(i, j)}_{max(i, j)}"


def _cholesky_block(n: int, entry: Callable[[int, int], Poly], aux: str) -> tuple[list[str], list[Formula]]:
    """Compact factor ``C`` (lower triangle only) with ``A = C C^T`` and positive diagonal."""
    names = [f"{aux}_{i}_{j}" for i in range(1, n + 1) for j in range(1, i + 1)]
    atoms: list[Formula] = []
    for i in range(1, n + 1):
        for j in range(1, i + 1):
            s = Poly()
            for k in range(1, j + 1):
                s = s + _v(f"{aux}_{i}_{k}") * _v(f"{aux}_{j}_{k}")
            atoms.append(_eq(entry(i, j), s))
    atoms += [Rel(">", _v(f"{aux}_{i}_{i}")) for i in range(1, n + 1)]
    return names, atoms


def _omega_names(g: MixedGraph, prefix: str) -> list[str]:
    pairs = [(i, i) for i in g.nodes] + sorted(g.bidirected)
    return [f"{prefix}_{i}_{j}" for i, j in sorted(pairs)]


def _omega_entry(g: MixedGraph, prefix: str) -> Callable[[int, int], Poly]:
    def entry(i: int, j: int) -> Poly:
        a, b = min(i, j), max(i, j)
        if a == b or (a, b) in g.bidirected:
            return _v(f"{prefix}_{a}_{b}")
        return Poly()

    return entry


def _lambda_names(g: MixedGraph, prefix: str) -> list[str]:
    return [f"{prefix}_{i}_{j}" for i, j in g.edges()]


def _congruence(g: MixedGraph, sigma: Callable[[int, int], Poly], lam: str, i: int, j: int) -> Poly:
    """Entry ``(i, j)`` of ``(I - L)^T S (I - L)`` with ``L`` named ``lam``."""

    def column(k: int) -> list[tuple[int, Poly]]:
        return [(k, Poly.const(1))] + [(a, -_v(f"{lam}_{a}_{k}")) for a in g.parents(k)]

    total = Poly()
    for a, pa in column(i):
        for b, pb in column(j):
            s = sigma(a, b)
            if not s.is_zero():
                total = total + pa * pb * s
    return total


def _numeric_sigma(sigma: Matrix) -> Callable[[int, int], Poly]:
    return lambda a, b: Poly.const(Fraction(sigma[a - 1, b - 1]))


def _parametrization(g: MixedGraph, sigma: Callable[[int, int], Poly], lam: str, omega: str) -> list[Formula]:
    """``Omega = (I - L)^T S (I - L)`` entrywise on the upper triangle; zeros off B."""
    entry = _omega_entry(g, omega)
    return [_eq(entry(i, j), _congruence(g, sigma, lam, i, j)) for i in g.nodes for j in g.nodes if i <= j]


def _regular(g: MixedGraph, lam: str) -> list[Formula]:
    if not g.cyclic:
        return []
    det = determinant_poly(g).map_vars(lambda e: f"{lam}_{e[0]}_{e[1]}")
    return [Rel("!=", det)]


# -- emitters -------------------------------------------------------------------


def emit_pd_membership(n: int, bidirected: Iterable[tuple[int, int]] = (), existential: bool = True) -> QuantifiedSentence:
    """Is the symmetric matrix ``A`` (entries ``a_i_j``, ``i <= j``) positive
    definite with zeros outside ``bidirected``?

    Existential form: a full matrix ``L`` with ``A = L L^T`` entrywise in
    row-major order, positive diagonal, zero strict upper triangle.
    Universal form: ``x != 0 => x^T A x > 0``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    B = {(min(i, j), max(i, j)) for i, j in bidirected}
    params = tuple(f"a_{i}_{j}" for i in range(1, n + 1) for j in range(i, n + 1))
    pattern = [_eq(_v(_sym("a", i, j)), Poly()) for i, j in combinations(range(1, n + 1), 2) if (i, j) not in B]
    if existential:
        names = tuple(f"l_{i}_{j}" for i in range(1, n + 1) for j in range(1, n + 1))
        atoms: list[Formula] = []
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                s = Poly()
                for k in range(1, n + 1):
                    s = s + _v(f"l_{i}_{k}") * _v(f"l_{j}_{k}")
                atoms.append(_eq(_v(_sym("a", i, j)), s))
        atoms += [Rel(">", _v(f"l_{i}_{i}")) for i in range(1, n + 1)]
        atoms += [_eq(_v(f"l_{i}_{j}"), Poly()) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        return QuantifiedSentence(
            (("exists", names),),
            _conj(atoms + pattern),
            parameters=params,
            provenance="positive-definite membership with zero pattern, Cholesky form",
        )
    xs = tuple(f"x_{i}" for i in range(1, n + 1))
    quad = Poly()
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            quad = quad + _v(_sym("a", i, j)) * _v(f"x_{i}") * _v(f"x_{j}")
    nonzero = Not(_conj(_eq(_v(x), Poly()) for x in xs))
    body: Formula = Implies(nonzero, Rel(">", quad))
    if pattern:
        body = And((body,) + tuple(pattern))
    return QuantifiedSentence(
        (("forall", xs),),
        body,
        parameters=params,
        provenance="positive-definite membership with zero pattern, quadratic-form definition",
    )


def emit_numeric_identifiability(g: MixedGraph, sigma: Matrix) -> QuantifiedSentence:
    """True iff every two parameter pairs in the fiber of ``sigma`` coincide."""
    s = _numeric_sigma(sigma)
    names: list[str] = []
    premise: list[Formula] = []
    for k in (1, 2):
        lam, om, ch = f"l{k}", f"w{k}", f"c{k}"
        names += _lambda_names(g, lam)
        names += _omega_names(g, om)
        chol_names, chol = _cholesky_block(g.n, _omega_entry(g, om), ch)
        names += chol_names
        premise += chol + _parametrization(g, s, lam, om) + _regular(g, lam)
    same = [_eq(_v(f"l1_{i}_{j}"), _v(f"l2_{i}_{j}")) for i, j in g.edges()]
    same += [_eq(_v(a), _v("w2" + a[2:])) for a in _omega_names(g, "w1")]
    return QuantifiedSentence(
        (("forall", tuple(names)),),
        Implies(_conj(premise), _conj(same)),
        provenance="numerical identifiability: all fiber elements coincide",
        comments=(
            "l<k>_i_j: edge weights, w<k>_i_j: error covariances, c<k>_i_j: Cholesky factor of w<k>",
            "the negation is satisfiable iff the fiber has more than one element",
            "quantified sentence: needs a back end with nonlinear quantifier support",
        ),
    )


def emit_feasibility(g: MixedGraph, sigma: Matrix) -> QuantifiedSentence:
    """True iff ``sigma`` is in the image of the parametrization."""
    s = _numeric_sigma(sigma)
    chol_names, chol = _cholesky_block(g.n, _omega_entry(g, "w"), "c")
    names = _lambda_names(g, "l") + _omega_names(g, "w") + chol_names
    atoms = chol + _parametrization(g, s, "l", "w") + _regular(g, "l")
    return QuantifiedSentence(
        (("exists", tuple(names)),),
        _conj(atoms),
        provenance="membership of a covariance matrix in the image of the parametrization",
        comments=("l_i_j: edge weights, w_i_j: error covariances, c_i_j: Cholesky factor of w",),
    )


def _in_s_g(g: MixedGraph, edge: tuple[int, int] | None) -> Definition:
    """Pairs (L, W) whose fiber has another element (differing at ``edge`` if given)."""
    params = tuple(_lambda_names(g, "l") + _omega_names(g, "w"))
    sig = lambda a, b: _v(_sym("s", a, b))  # noqa: E731
    c_names, c_atoms = _cholesky_block(g.n, _omega_entry(g, "w"), "c")
    d_names, d_atoms = _cholesky_block(g.n, _omega_entry(g, "v"), "d")
    s_names = [f"s_{i}_{j}" for i in g.nodes for j in g.nodes if i <= j]
    inner = s_names + _lambda_names(g, "m") + _omega_names(g, "v") + c_names + d_names
    atoms = c_atoms + d_atoms + _parametrization(g, sig, "l", "w") + _parametrization(g, sig, "m", "v")
    atoms += _regular(g, "l") + _regular(g, "m")
    if edge is None:
        differ = [Rel("!=", _v(f"l_{i}_{j}"), _v(f"m_{i}_{j}")) for i, j in g.edges()]
        differ += [Rel("!=", _v(w), _v("v" + w[1:])) for w in _omega_names(g, "w")]
    else:
        differ = [Rel("!=", _v(f"l_{edge[0]}_{edge[1]}"), _v(f"m_{edge[0]}_{edge[1]}"))]
    body = Quant("exists", tuple(inner), _conj(atoms + [_disj(differ)]))
    what = "the whole parameter" if edge is None else f"the weight of {edge[0]} -> {edge[1]}"
    return Definition("in_S_G", params, body, f"(l, w) has a second fiber element differing in {what}")


def emit_generic_identifiability(g: MixedGraph, edge: tuple[int, int] | None = None) -> QuantifiedSentence:
    """Disjunction over dimension bounds: some ``d1 <= dim R^D`` and
    ``d2 <= dim PD(B)`` with ``dim S_G < d1 + d2``.

    ``dim X >= d`` is an opaque Boolean atom (a coordinate projection of
    ``X`` of dimension ``d`` has nonempty interior, and none of dimension
    ``d + 1`` does); ``S_G`` is given by the ``in_S_G`` definition.
    """
    if edge is not None and tuple(edge) not in g.directed:
        raise ValueError(f"{edge[0]} -> {edge[1]} is not an edge")
    if not g.directed:
        return QuantifiedSentence(
            (),
            BoolConst(True),
            provenance="generic identifiability: no edge weights, trivially identifiable",
        )
    top = g.n * g.n
    booleans: list[tuple[str, str]] = []
    seen: set[str] = set()

    def atom(set_name: str, d: int, meaning: str) -> BoolVar:
        name = f"dim_ge__{set_name}__{d}"
        if name not in seen:
            seen.add(name)
            booleans.append((name, f"dim {meaning} >= {d}"))
        return BoolVar(name)

    disjuncts = []
    for d1 in range(top + 1):
        for d2 in range(top + 1):
            disjuncts.append(
                And(
                    (
                        atom("R_D", d1, "R^D"),
                        atom("PD_B", d2, "PD(B)"),
                        Not(atom("S_G", d1 + d2, "{(l, w) : in_S_G(l, w)}")),
                    )
                )
            )
    booleans.sort(key=lambda b: (b[0].split("__")[1], int(b[0].split("__")[2])))
    kind = "" if edge is None else f" of edge {edge[0]} -> {edge[1]}"
    return QuantifiedSentence(
        (),
        Or(tuple(disjuncts)),
        booleans=tuple(booleans),
        definitions=(_in_s_g(g, None if edge is None else tuple(edge)),),
        provenance=f"generic identifiability{kind} as a disjunction over dimension bounds",
        comments=(
            "dim_ge__X__d: some coordinate projection of X of dimension d has nonempty interior",
            "the dimension of the product R^D x PD(B) is the sum d1 + d2",
            "dimension atoms have no SMT semantics; they are placeholders for a DIM oracle",
        ),
    )


# -- SMT-LIB rendering ----------------------------------------------------------


def _num(c: Fraction) -> str:
    c = Fraction(c)
    if c < 0:
        return f"(- {_num(-c)})"
    if c.denominator == 1:
        return f"{c.numerator}.0"
    return f"(/ {c.numerator}.0 {c.denominator}.0)"


def _smt_poly(p: Poly) -> str:
    terms = []
    for mono, c in p.items():
        factors = [str(v) for v, e in mono for _ in range(e)]
        if not factors:
            terms.append(_num(c))
            continue
        prod = factors[0] if len(factors) == 1 else f"(* {' '.join(factors)})"
        if c == 1:
            terms.append(prod)
        elif c == -1:
            terms.append(f"(- {prod})")
        else:
            terms.append(f"(* {_num(c)} {' '.join(factors)})")
    if not terms:
        return "0.0"
    return terms[0] if len(terms) == 1 else f"(+ {' '.join(terms)})"


_SMT_REL = {"=": "=", "!=": "distinct", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


def _smt_flat(f: Formula) -> str:
    if isinstance(f, Rel):
        return f"({_SMT_REL[f.op]} {_smt_poly(f.lhs)} {_smt_poly(f.rhs)})"
    if isinstance(f, BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, BoolVar):
        return f.name
    if isinstance(f, And):
        return f"(and {' '.join(_smt_flat(x) for x in f.items)})"
    if isinstance(f, Or):
        return f"(or {' '.join(_smt_flat(x) for x in f.items)})"
    if isinstance(f, Not):
        return f"(not {_smt_flat(f.item)})"
    if isinstance(f, Implies):
        return f"(=> {_smt_flat(f.premise)} {_smt_flat(f.conclusion)})"
    if isinstance(f, Quant):
        binders = " ".join(f"({v} Real)" for v in f.names)
        return f"({f.kind} ({binders}) {_smt_flat(f.body)})"
    if isinstance(f, Call):
        return f"({f.name} {' '.join(_smt_poly(a) for a in f.args)})"
    raise TypeError(f"not a formula: {f!r}")


def _smt_pretty(f: Formula, indent: int = 0, width: int = 100) -> str:
    flat = _smt_flat(f)
    if len(flat) + indent <= width:
        return flat
    pad = " " * (indent + 2)
    if isinstance(f, (And, Or)):
        head = "and" if isinstance(f, And) else "or"
        inner = "\n".join(pad + _smt_pretty(x, indent + 2, width) for x in f.items)
        return f"({head}\n{inner})"
    if isinstance(f, Not):
        return f"(not\n{pad}{_smt_pretty(f.item, indent + 2, width)})"
    if isinstance(f, Implies):
        return f"(=>\n{pad}{_smt_pretty(f.premise, indent + 2, width)}\n{pad}{_smt_pretty(f.conclusion, indent + 2, width)})"
    if isinstance(f, Quant):
        binders = "\n".join(f"{pad}  ({v} Real)" for v in f.names)
        return f"({f.kind} (\n{binders})\n{pad}{_smt_pretty(f.body, indent + 2, width)})"
    return flat


def _has_quantifier(f: Formula) -> bool:
    return any(isinstance(x, Quant) for x in _walk(f))


def to_smt2(s: QuantifiedSentence) -> str:
    prefix = list(s.prefix)
    declared: tuple[str, ...] = ()
    if prefix and prefix[0][0] == "exists":
        declared = prefix.pop(0)[1]
    body = s.matrix
    for kind, names in reversed(prefix):
        body = Quant(kind, names, body)
    quantified = _has_quantifier(body) or any(_has_quantifier(d.body) for d in s.definitions)
    lines = []
    if s.provenance:
        lines.append(f"; {s.provenance}")
    lines += [f"; {c}" for c in s.comments]
    lines.append(f"(set-logic {'NRA' if quantified else 'QF_NRA'})")
    lines += [f"(declare-fun {p} () Real)" for p in s.parameters]
    lines += [f"(declare-const {v} Real)" for v in declared]
    for name, comment in s.booleans:
        lines.append(f"; {comment}")
        lines.append(f"(declare-const {name} Bool)")
    for d in s.definitions:
        if d.comment:
            lines.append(f"; {d.comment}")
        params = " ".join(f"({p} Real)" for p in d.params)
        lines.append(f"(define-fun {d.name} ({params}) Bool\n  {_smt_pretty(d.body, 2)})")
    lines.append(f"(assert\n  {_smt_pretty(body, 2)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# -- text rendering -------------------------------------------------------------


_TEXT_REL = {"=": "=", "!=": "≠", "<": "<", "<=": "≤", ">": ">", ">=": "≥"}


def _text_poly(p: Poly) -> str:
    return p.pretty(str)


def _text(f: Formula, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(f, Rel):
        return f"{pad}{_text_poly(f.lhs)} {_TEXT_REL[f.op]} {_text_poly(f.rhs)}"
    if isinstance(f, BoolConst):
        return pad + ("true" if f.value else "false")
    if isinstance(f, BoolVar):
        return pad + f.name
    if isinstance(f, (And, Or)):
        op = "∧" if isinstance(f, And) else "∨"
        return f"{pad}{op}\n" + "\n".join(_text(x, indent + 1) for x in f.items)
    if isinstance(f, Not):
        return f"{pad}¬\n{_text(f.item, indent + 1)}"
    if isinstance(f, Implies):
        return f"{pad}⇒\n{_text(f.premise, indent + 1)}\n{_text(f.conclusion, indent + 1)}"
    if isinstance(f, Quant):
        sym = "∃" if f.kind == "exists" else "∀"
        return f"{pad}{sym} {', '.join(f.names)}:\n{_text(f.body, indent + 1)}"
    if isinstance(f, Call):
        return f"{pad}{f.name}({', '.join(_text_poly(a) for a in f.args)})"
    raise TypeError(f"not a formula: {f!r}")


def to_text(s: QuantifiedSentence) -> str:
    lines = []
    if s.provenance:
        lines.append(f"# {s.provenance}")
    lines += [f"# {c}" for c in s.comments]
    if s.parameters:
        lines.append(f"free: {', '.join(s.parameters)}")
    for name, comment in s.booleans:
        lines.append(f"atom {name}: {comment}")
    for d in s.definitions:
        lines.append(f"{d.name}({', '.join(d.params)}) :⇔")
        lines.append(_text(d.body, 1))
    for kind, names in s.prefix:
        sym = "∃" if kind == "exists" else "∀"
        lines.append(f"{sym} {', '.join(names)}")
    lines.append(_text(s.matrix))
    return "\n".join(lines) + "\n"


# -- SMT-LIB reader -------------------------------------------------------------


_TOKEN = re.compile(r"\s*(?:(;[^\n]*)|(\()|(\))|([^\s()]+))")


def _tokenize(text: str):
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise ValueError(f"unexpected input at offset {pos}")
            break
        pos = m.end()
        comment, lp, rp, atom = m.groups()
        if comment is not None:
            yield ("comment", comment[1:].strip())
        elif lp:
            yield ("(", None)
        elif rp:
            yield (")", None)
        elif atom is not None:
            yield ("atom", atom)


def _read(tokens: list, i: int):
    kind, val = tokens[i]
    if kind == "(":
        out = []
        i += 1
        while tokens[i][0] != ")":
            if tokens[i][0] == "comment":
                i += 1
                continue
            item, i = _read(tokens, i)
            out.append(item)
        return out, i + 1
    if kind == "atom":
        return val, i + 1
    raise ValueError("unbalanced parentheses")


def _term(x) -> Poly:
    if isinstance(x, str):
        if re.fullmatch(r"-?\d+(\.\d+)?", x):
            return Poly.const(Fraction(x))
        return Poly.var(x)
    head, *args = x
    vals = [_term(a) for a in args]
    if head == "+":
        out = Poly()
        for v in vals:
            out = out + v
        return out
    if head == "-":
        if len(vals) == 1:
            return -vals[0]
        out = vals[0]
        for v in vals[1:]:
            out = out - v
        return out
    if head == "*":
        out = Poly.const(1)
        for v in vals:
            out = out * v
        return out
    if head == "/":
        if len(vals) != 2 or not vals[1].is_constant() or vals[1].is_zero():
            raise ValueError("division only by nonzero constants")
        return vals[0] * (1 / vals[1].constant_term)
    raise ValueError(f"unknown arithmetic operator {head!r}")


_REL_OF = {v: k for k, v in _SMT_REL.items()}


def _formula(x, defined: set[str]) -> Formula:
    if isinstance(x, str):
        if x in ("true", "false"):
            return BoolConst(x == "true")
        return BoolVar(x)
    head, *args = x
    if head in _REL_OF:
        return Rel(_REL_OF[head], _term(args[0]), _term(args[1]))
    if head == "and":
        return And(tuple(_formula(a, defined) for a in args))
    if head == "or":
        return Or(tuple(_formula(a, defined) for a in args))
    if head == "not":
        return Not(_formula(args[0], defined))
    if head == "=>":
        return Implies(_formula(args[0], defined), _formula(args[1], defined))
    if head in ("forall", "exists"):
        return Quant(head, tuple(b[0] for b in args[0]), _formula(args[1], defined))
    if head in defined:
        return Call(head, tuple(_term(a) for a in args))
    raise ValueError(f"unknown connective {head!r}")


def parse_smt2(text: str) -> QuantifiedSentence:
    """Read a sentence rendered by :func:`to_smt2`."""
    tokens = list(_tokenize(text))
    header: list[str] = []
    pending: list[str] = []
    params: list[str] = []
    declared: list[str] = []
    booleans: list[tuple[str, str]] = []
    definitions: list[Definition] = []
    defined: set[str] = set()
    body = None
    seen_logic = False
    i = 0
    while i < len(tokens):
        kind, val = tokens[i]
        if kind == "comment":
            (pending if seen_logic else header).append(val)
            i += 1
            continue
        cmd, i = _read(tokens, i)
        op = cmd[0]
        if op == "set-logic":
            seen_logic = True
        elif op == "declare-fun":
            params.append(cmd[1])
        elif op == "declare-const":
            if cmd[2] == "Bool":
                booleans.append((cmd[1], pending[-1] if pending else ""))
            else:
                declared.append(cmd[1])
        elif op == "define-fun":
            defined.add(cmd[1])
            definitions.append(
                Definition(cmd[1], tuple(p[0] for p in cmd[2]), _formula(cmd[4], defined), pending[-1] if pending else "")
            )
        elif op == "assert":
            body = _formula(cmd[1], defined)
        elif op == "check-sat":
            pass
        else:
            raise ValueError(f"unsupported command {op!r}")
        pending = []
    if body is None:
        raise ValueError("no assertion found")
    prefix: list[tuple[str, tuple[str, ...]]] = []
    if declared:
        prefix.append(("exists", tuple(declared)))
    while isinstance(body, Quant):
        prefix.append((body.kind, body.names))
        body = body.body
    return QuantifiedSentence(
        tuple(prefix),
        body,
        parameters=tuple(params),
        booleans=tuple(booleans),
        definitions=tuple(definitions),
        provenance=header[0] if header else "",
        comments=tuple(header[1:]),
    )
