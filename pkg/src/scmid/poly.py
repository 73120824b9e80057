"""Sparse multivariate polynomials with exact rational coefficients.

A monomial is a tuple of ``(variable, exponent)`` pairs sorted by variable.
Variables may be any hashable, mutually comparable keys (ints for constraint
systems, ``(i, j)`` tuples for edge coefficients, strings for formulas).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping

Monomial = tuple  # tuple[tuple[Hashable, int], ...]

__all__ = ["Poly", "Monomial", "to_fraction", "fraction_str"]


def to_fraction(value: Any) -> Fraction:
    """Coerce ints, floats, Fractions and ``"p/q"`` / decimal strings."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, (int, float, str)):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def fraction_str(value: Fraction) -> str:
    return str(Fraction(value))


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    exps = dict(m1)
    for v, e in m2:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


class Poly:
    """Immutable sparse polynomial; the zero polynomial has no terms."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, Any] | None = None):
        clean: dict[Monomial, Fraction] = {}
        if terms:
            for mono, coef in terms.items():
                c = to_fraction(coef)
                if c:
                    clean[mono] = clean.get(mono, Fraction(0)) + c
                    if not clean[mono]:
                        del clean[mono]
        self._terms = clean

    @classmethod
    def _raw(cls, terms: dict[Monomial, Fraction]) -> "Poly":
        p = cls.__new__(cls)
        p._terms = terms
        return p

    @classmethod
    def const(cls, c: Any) -> "Poly":
        return cls({(): c})

    @classmethod
    def var(cls, v: Hashable) -> "Poly":
        return cls._raw({((v, 1),): Fraction(1)})

    @classmethod
    def monomial(cls, exps: Mapping[Hashable, int], coef: Any = 1) -> "Poly":
        mono = tuple(sorted((v, e) for v, e in exps.items() if e))
        return cls({mono: coef})

    # -- arithmetic ---------------------------------------------------------

    @staticmethod
    def _coerce(other: Any) -> "Poly":
        if isinstance(other, Poly):
            return other
        return Poly.const(other)

    def __add__(self, other: Any) -> "Poly":
        other = Poly._coerce(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Poly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: Any) -> "Poly":
        return self + (-Poly._coerce(other))

    def __rsub__(self, other: Any) -> "Poly":
        return Poly._coerce(other) - self

    def __mul__(self, other: Any) -> "Poly":
        if not isinstance(other, Poly):
            c = to_fraction(other)
            if not c:
                return Poly()
            return Poly._raw({m: v * c for m, v in self._terms.items()})
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return Poly._raw(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative exponent")
        result = Poly.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Poly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Poly.const(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    # -- inspection ---------------------------------------------------------

    def items(self) -> Iterator[tuple[Monomial, Fraction]]:
        return iter(sorted(self._terms.items(), key=_term_order))

    def __len__(self) -> int:
        return len(self._terms)

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(mono, Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not m for m in self._terms)

    @property
    def constant_term(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self._terms), default=0)

    def degree_in(self, v: Hashable) -> int:
        return max((e for m in self._terms for w, e in m if w == v), default=0)

    def variables(self) -> set:
        return {v for m in self._terms for v, _ in m}

    # -- calculus and evaluation -------------------------------------------

    def evaluate(self, point: Mapping[Hashable, Any]) -> Any:
        """Evaluate with whatever scalar type ``point`` holds (Fraction or float)."""
        total: Any = 0
        for mono, coef in self._terms.items():
            term: Any = coef
            for v, e in mono:
                term = term * point[v] ** e
            total = total + term
        return total

    def partial(self, v: Hashable) -> "Poly":
        out: dict[Monomial, Fraction] = {}
        for mono, coef in self._terms.items():
            for idx, (w, e) in enumerate(mono):
                if w == v:
                    rest = mono[:idx] + (((w, e - 1),) if e > 1 else ()) + mono[idx + 1:]
                    out[rest] = out.get(rest, 0) + coef * e
                    break
        return Poly(out)

    def split_linear(self, v: Hashable) -> tuple["Poly", "Poly"]:
        """Return ``(a, b)`` with ``self == v*a + b``; requires degree 1 in ``v``."""
        a: dict[Monomial, Fraction] = {}
        b: dict[Monomial, Fraction] = {}
        for mono, coef in self._terms.items():
            exps = dict(mono)
            e = exps.get(v, 0)
            if e == 0:
                b[mono] = coef
            elif e == 1:
                del exps[v]
                a[tuple(sorted(exps.items()))] = coef
            else:
                raise ValueError(f"degree of {v!r} exceeds one")
        return Poly._raw(a), Poly._raw(b)

    def substitute(self, values: Mapping[Hashable, Any]) -> "Poly":
        """Replace some variables by constants."""
        out = Poly()
        for mono, coef in self._terms.items():
            term = Poly.const(coef)
            rest = {}
            for v, e in mono:
                if v in values:
                    term = term * (to_fraction(values[v]) ** e)
                else:
                    rest[v] = e
            out = out + term * Poly.monomial(rest)
        return out

    def map_vars(self, f: Callable[[Hashable], Hashable]) -> "Poly":
        out: dict[Monomial, Fraction] = {}
        for mono, coef in self._terms.items():
            exps: dict = {}
            for v, e in mono:
                w = f(v)
                exps[w] = exps.get(w, 0) + e
            m = tuple(sorted(exps.items()))
            out[m] = out.get(m, 0) + coef
        return Poly(out)

    # -- serialization ------------------------------------------------------

    def to_json(self, name: Callable[[Hashable], str] = str) -> list[dict]:
        return [
            {"coef": fraction_str(c), "vars": [[name(v), e] for v, e in m]}
            for m, c in self.items()
        ]

    @classmethod
    def from_json(cls, data: Iterable[dict], parse: Callable[[str], Hashable] = str) -> "Poly":
        terms: dict[Monomial, Fraction] = {}
        for term in data:
            exps: dict = {}
            for name, e in term["vars"]:
                v = parse(name)
                exps[v] = exps.get(v, 0) + int(e)
            m = tuple(sorted(exps.items()))
            terms[m] = terms.get(m, 0) + to_fraction(term["coef"])
        return cls(terms)

    def __repr__(self) -> str:
        return f"Poly({self.pretty()})"

    def pretty(self, name: Callable[[Hashable], str] = str) -> str:
        if not self._terms:
            return "0"
        parts = []
        for mono, coef in self.items():
            factors = [name(v) if e == 1 else f"{name(v)}^{e}" for v, e in mono]
            mag = abs(coef)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = f"{mag}*" + "*".join(factors)
            parts.append(("- " if coef < 0 else "+ ") + body)
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]


def _term_order(item: tuple[Monomial, Fraction]) -> tuple:
    mono = item[0]
    return (-sum(e for _, e in mono), [(v, -e) for v, e in mono])
