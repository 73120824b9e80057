"""Independent oracles shared by the solver and acceptance tests."""

from fractions import Fraction
from itertools import combinations
from random import Random

import numpy as np

from scmid.matrix import Matrix, SingularMatrix, general_inverse
from scmid.poly import Poly
from scmid.solver import PolySystem


def random_system(rng: Random, nv: int) -> PolySystem:
    """Square system with integer coefficients, degree at most two."""
    xs = [Poly.var(k) for k in range(nv)]
    eqs = []
    for _ in range(nv):
        p = Poly.const(rng.randint(-3, 3))
        for i in range(nv):
            if rng.random() < 0.6:
                p = p + rng.randint(-3, 3) * xs[i]
        for i, j in combinations(range(nv), 2):
            if rng.random() < 0.4:
                p = p + rng.randint(-2, 2) * xs[i] * xs[j]
        for i in range(nv):
            if rng.random() < 0.2:
                p = p + rng.randint(-2, 2) * xs[i] * xs[i]
        eqs.append(p)
    return PolySystem(tuple(range(nv)), tuple(eqs))


def exact_newton(system: PolySystem, start, steps: int = 4):
    """Newton iteration in exact rational arithmetic from ``start``."""
    x = [Fraction(v) for v in start]
    jac = [[p.partial(v) for v in system.variables] for p in system.equations]
    for _ in range(steps):
        pt = dict(zip(system.variables, x))
        f = [p.evaluate(pt) for p in system.equations]
        if all(v == 0 for v in f):
            break
        J = Matrix([[d.evaluate(pt) for d in row] for row in jac])
        try:
            inv = general_inverse(J)
        except SingularMatrix:
            break
        dx = [sum(inv[i, k] * f[k] for k in range(len(f))) for i in range(len(x))]
        x = [Fraction(float(a - d)) for a, d in zip(x, dx)]  # keep denominators bounded
    pt = dict(zip(system.variables, x))
    return x, max((abs(p.evaluate(pt)) for p in system.equations), default=Fraction(0))


def float_eval(system: PolySystem):
    polys = [[(float(c), [(system.variables.index(v), e) for v, e in mono]) for mono, c in p.items()] for p in system.equations]

    def f(X):
        out = []
        for terms in polys:
            acc = np.zeros_like(X[0], dtype=float)
            for c, mono in terms:
                t = np.full_like(X[0], c, dtype=float)
                for k, e in mono:
                    t = t * X[k] ** e
                acc = acc + t
            out.append(acc)
        return np.array(out)

    return f


def grid_roots(system: PolySystem, box: float = 10.0, points: int = 401, tol: float = 1e-10) -> list[np.ndarray]:
    """Roots of a 1- or 2-variable system found by a dense grid scan:
    local minima of |F| seed a Newton polish with finite-difference-free
    exact Jacobians evaluated in floats."""
    nv = len(system.variables)
    f = float_eval(system)
    axis = np.linspace(-box, box, points)
    grids = np.meshgrid(*([axis] * nv), indexing="ij")
    norm = np.sqrt((f(grids) ** 2).sum(axis=0))
    seeds = []
    it = np.nditer(norm, flags=["multi_index"])
    for val in it:
        idx = it.multi_index
        lo = tuple(max(0, i - 1) for i in idx)
        hi = tuple(min(points, i + 2) for i in idx)
        window = norm[tuple(slice(a, b) for a, b in zip(lo, hi))]
        if val <= window.min():
            seeds.append(np.array([axis[i] for i in idx]))
    jac = [[float_eval(PolySystem(system.variables, (p.partial(v),))) for v in system.variables] for p in system.equations]
    found: list[np.ndarray] = []
    for x in seeds:
        for _ in range(60):
            X = [np.array(v) for v in x]
            F = f(X).reshape(-1)
            J = np.array([[d(X)[0] for d in row] for row in jac], dtype=float).reshape(len(F), nv)
            step, *_ = np.linalg.lstsq(J, F, rcond=None)
            x = x - step
            if np.linalg.norm(step) < 1e-14:
                break
        X = [np.array(v) for v in x]
        if np.linalg.norm(f(X)) < tol and np.all(np.abs(x) <= box):
            if not any(np.linalg.norm(x - r) < 1e-6 for r in found):
                found.append(x)
    return found
