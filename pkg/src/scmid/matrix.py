"""Small dense matrices over exact rationals or float64.

Indices are 0-based here; graph code converts from node labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .poly import fraction_str, to_fraction

RATIONAL = "rational"
FLOAT = "float"

SYMMETRY_RTOL = 1e-12

__all__ = [
    "Matrix",
    "RATIONAL",
    "FLOAT",
    "CholeskyFactor",
    "NotPositiveDefinite",
    "SingularMatrix",
    "cholesky",
    "is_positive_definite",
    "is_strictly_diagonally_dominant",
    "unit_upper_inverse",
    "general_inverse",
    "congruence",
    "determinant",
]


class NotPositiveDefinite(ValueError):
    """Raised by :func:`cholesky`; ``minor`` is the 1-based failing leading minor."""

    def __init__(self, minor: int):
        super().__init__(f"not positive definite: leading minor {minor} is not positive")
        self.minor = minor


class SingularMatrix(ValueError):
    pass


class Matrix:
    """Immutable dense matrix with a uniform number mode."""

    __slots__ = ("rows", "cols", "mode", "_data")

    def __init__(self, entries: Iterable[Iterable[Any]], mode: str | None = None, cols: int | None = None):
        data = [list(row) for row in entries]
        rows = len(data)
        if rows:
            cols = len(data[0])
        elif cols is None:
            cols = 0
        if any(len(r) != cols for r in data):
            raise ValueError("ragged matrix")
        if mode is None:
            mode = FLOAT if any(isinstance(x, float) for r in data for x in r) else RATIONAL
        if mode == RATIONAL:
            data = [[to_fraction(x) for x in r] for r in data]
        elif mode == FLOAT:
            data = [[float(x) for x in r] for r in data]
        else:
            raise ValueError(f"unknown mode {mode!r}")
        self.rows, self.cols, self.mode = rows, cols, mode
        self._data = tuple(tuple(r) for r in data)

    @classmethod
    def identity(cls, n: int, mode: str = RATIONAL) -> "Matrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], mode)

    @classmethod
    def zeros(cls, rows: int, cols: int | None = None, mode: str = RATIONAL) -> "Matrix":
        cols = rows if cols is None else cols
        return cls([[0] * cols for _ in range(rows)], mode, cols=cols)

    @classmethod
    def from_function(cls, rows: int, cols: int, f, mode: str = RATIONAL) -> "Matrix":
        return cls([[f(i, j) for j in range(cols)] for i in range(rows)], mode)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, idx: tuple[int, int]) -> Any:
        i, j = idx
        return self._data[i][j]

    def row(self, i: int) -> tuple:
        return self._data[i]

    def tolist(self) -> list[list[Any]]:
        return [list(r) for r in self._data]

    def replace(self, updates: dict[tuple[int, int], Any]) -> "Matrix":
        data = self.tolist()
        for (i, j), v in updates.items():
            data[i][j] = v
        return Matrix(data, self.mode)

    @property
    def T(self) -> "Matrix":
        return Matrix([[r[j] for r in self._data] for j in range(self.cols)], self.mode, cols=self.rows)

    def to_float(self) -> "Matrix":
        return self if self.mode == FLOAT else Matrix(self._data, FLOAT)

    def to_rational(self) -> "Matrix":
        return self if self.mode == RATIONAL else Matrix(self._data, RATIONAL)

    def _result_mode(self, other: "Matrix") -> str:
        return RATIONAL if self.mode == other.mode == RATIONAL else FLOAT

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check_same_shape(other)
        return Matrix(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self._data, other._data)],
            self._result_mode(other),
        )

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._check_same_shape(other)
        return Matrix(
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self._data, other._data)],
            self._result_mode(other),
        )

    def __neg__(self) -> "Matrix":
        return Matrix([[-a for a in r] for r in self._data], self.mode)

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise ValueError(f"dimension mismatch {self.shape} @ {other.shape}")
        zero = Fraction(0) if self._result_mode(other) == RATIONAL else 0.0
        cols = list(zip(*other._data)) if other.rows else [()] * other.cols
        out = []
        for r in self._data:
            nz = [(k, a) for k, a in enumerate(r) if a]
            out.append([sum((a * c[k] for k, a in nz), zero) for c in cols])
        return Matrix(out, self._result_mode(other))

    def scale(self, c: Any) -> "Matrix":
        return Matrix([[a * c for a in r] for r in self._data], self.mode)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.shape == other.shape and self._data == other._data

    def __hash__(self) -> int:
        return hash((self.shape, self._data))

    def _check_same_shape(self, other: "Matrix") -> None:
        if self.shape != other.shape:
            raise ValueError(f"dimension mismatch {self.shape} vs {other.shape}")

    def max_abs_diff(self, other: "Matrix") -> float:
        self._check_same_shape(other)
        return max(
            (abs(float(a - b)) for r1, r2 in zip(self._data, other._data) for a, b in zip(r1, r2)),
            default=0.0,
        )

    def is_symmetric(self, rtol: float = SYMMETRY_RTOL) -> bool:
        if not self.is_square():
            return False
        if self.mode == RATIONAL:
            return all(self._data[i][j] == self._data[j][i] for i in range(self.rows) for j in range(i))
        scale = max((abs(x) for r in self._data for x in r), default=0.0)
        tol = rtol * max(1.0, scale)
        return all(abs(self._data[i][j] - self._data[j][i]) <= tol for i in range(self.rows) for j in range(i))

    def __repr__(self) -> str:
        body = "; ".join(" ".join(str(x) for x in r) for r in self._data)
        return f"Matrix[{self.mode}]({body})"

    def to_json(self) -> dict[str, Any]:
        if self.mode == RATIONAL:
            entries = [[fraction_str(x) for x in r] for r in self._data]
        else:
            entries = [list(r) for r in self._data]
        return {"mode": self.mode, "rows": self.rows, "cols": self.cols, "entries": entries}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Matrix":
        mode = data.get("mode", RATIONAL)
        entries = data["entries"]
        if mode == FLOAT:
            entries = [[float(to_fraction(x)) if isinstance(x, str) else float(x) for x in r] for r in entries]
        m = cls(entries, mode)
        if "rows" in data and (m.rows, m.cols) != (data["rows"], data.get("cols", m.cols)):
            raise ValueError("matrix JSON dimensions do not match entries")
        return m


def _require_square(a: Matrix) -> None:
    if not a.is_square():
        raise ValueError(f"square matrix required, got {a.shape}")


@dataclass(frozen=True)
class CholeskyFactor:
    """``lower`` is the float Cholesky factor.

    In rational mode the exact decomposition ``A = U D U^T`` is kept as
    ``unit_lower`` and ``pivots``; ``lower`` is ``unit_lower * sqrt(D)``.
    """

    lower: Matrix
    pivots: tuple
    unit_lower: Matrix | None = None


def cholesky(a: Matrix) -> CholeskyFactor:
    """Factor a symmetric matrix; raises :class:`NotPositiveDefinite` otherwise."""
    _require_square(a)
    if not a.is_symmetric():
        raise ValueError("cholesky needs a symmetric matrix")
    n = a.rows
    if a.mode == RATIONAL:
        # exact LDL^T: pivots are ratios of consecutive leading minors
        unit = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        d: list[Fraction] = []
        for j in range(n):
            dj = a[j, j] - sum((unit[j][k] ** 2 * d[k] for k in range(j)), Fraction(0))
            if dj <= 0:
                raise NotPositiveDefinite(j + 1)
            d.append(dj)
            for i in range(j + 1, n):
                s = a[i, j] - sum((unit[i][k] * unit[j][k] * d[k] for k in range(j)), Fraction(0))
                unit[i][j] = s / dj
        roots = [math.sqrt(x) for x in d]
        lower = Matrix([[float(unit[i][j]) * roots[j] for j in range(n)] for i in range(n)], FLOAT)
        return CholeskyFactor(lower, tuple(d), Matrix(unit, RATIONAL))
    low = [[0.0] * n for _ in range(n)]
    for j in range(n):
        dj = a[j, j] - sum(low[j][k] ** 2 for k in range(j))
        if not dj > 0:
            raise NotPositiveDefinite(j + 1)
        low[j][j] = math.sqrt(dj)
        for i in range(j + 1, n):
            low[i][j] = (a[i, j] - sum(low[i][k] * low[j][k] for k in range(j))) / low[j][j]
    return CholeskyFactor(Matrix(low, FLOAT), tuple(low[i][i] ** 2 for i in range(n)))


def is_positive_definite(a: Matrix) -> bool:
    try:
        cholesky(a)
    except NotPositiveDefinite:
        return False
    return True


def is_strictly_diagonally_dominant(a: Matrix) -> bool:
    _require_square(a)
    for i in range(a.rows):
        off = sum((abs(a[i, j]) for j in range(a.cols) if j != i), Fraction(0) if a.mode == RATIONAL else 0.0)
        if not abs(a[i, i]) > off:
            return False
    return True


def unit_upper_inverse(u: Matrix) -> Matrix:
    """Inverse of a unit-diagonal upper-triangular matrix by back-substitution."""
    _require_square(u)
    n = u.rows
    for i in range(n):
        if u[i, i] != 1 or any(u[i, j] != 0 for j in range(i)):
            raise ValueError("matrix is not unit upper-triangular")
    zero = Fraction(0) if u.mode == RATIONAL else 0.0
    inv = [[zero] * n for _ in range(n)]
    for j in range(n):
        inv[j][j] = zero + 1
        for i in range(j - 1, -1, -1):
            inv[i][j] = -sum((u[i, k] * inv[k][j] for k in range(i + 1, j + 1)), zero)
    return Matrix(inv, u.mode)


def general_inverse(a: Matrix) -> Matrix:
    """Gauss-Jordan inverse: exact over rationals, partial pivoting in float."""
    _require_square(a)
    n = a.rows
    aug = [list(a.row(i)) + [type(a[0, 0])(int(i == j)) for j in range(n)] for i in range(n)] if n else []
    for col in range(n):
        if a.mode == RATIONAL:
            piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        else:
            piv = max(range(col, n), key=lambda r: abs(aug[r][col]))
            scale = max(abs(x) for x in a.row(piv)) or 1.0
            if abs(aug[piv][col]) <= 1e-14 * scale * n:
                piv = None
        if piv is None:
            raise SingularMatrix("matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return Matrix([row[n:] for row in aug], a.mode)


def determinant(a: Matrix) -> Any:
    _require_square(a)
    n = a.rows
    m = a.tolist()
    det: Any = Fraction(1) if a.mode == RATIONAL else 1.0
    for col in range(n):
        if a.mode == RATIONAL:
            piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        else:
            piv = max(range(col, n), key=lambda r: abs(m[r][col]))
            if m[piv][col] == 0:
                piv = None
        if piv is None:
            return det * 0
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det = det * m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            if f:
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return det


def congruence(s: Matrix, m: Matrix) -> Matrix:
    """``m^T s m``; the float result is explicitly symmetrized."""
    if not s.is_square() or s.rows != m.rows:
        raise ValueError(f"dimension mismatch for congruence {s.shape}, {m.shape}")
    out = m.T @ s @ m
    if out.mode == FLOAT:
        n = out.rows
        out = Matrix([[(out[i, j] + out[j, i]) / 2 for j in range(n)] for i in range(n)], FLOAT)
    return out


def as_matrix(entries: Sequence[Sequence[Any]] | Matrix, mode: str | None = None) -> Matrix:
    return entries if isinstance(entries, Matrix) else Matrix(entries, mode)
