from fractions import Fraction
from random import Random

import numpy as np
import pytest

from conftest import BOW, IV, graph, iv_point
from helpers import exact_newton, grid_roots, random_system
from scmid.matrix import Matrix
from scmid.poly import Poly
from scmid.scm import ParamPoint, fiber_system, phi
from scmid.solver import (
    BUDGET_EXHAUSTED,
    COMPLETE,
    CONTINUUM_SUSPECTED,
    PolySystem,
    SolveConfig,
    jacobian,
    numeric_rank,
    solve,
)

x, y = Poly.var("x"), Poly.var("y")


def test_square_roots():
    r = solve(PolySystem(("x",), (x * x - 1,)))
    assert r.status == COMPLETE
    assert sorted(root.rational[0] for root in r.roots) == [-1, 1]
    assert all(root.exact and root.residual == 0 for root in r.roots)


def test_irrational_roots_certified():
    r = solve(PolySystem(("x",), (x * x - 2,)))
    assert r.status == COMPLETE and len(r.roots) == 2
    for root in r.roots:
        assert not root.exact
        assert abs(abs(root.center[0]) - 2**0.5) <= root.radius[0] + 1e-15
        assert root.residual < 1e-9


def test_iv_fiber_unique_root():
    g = graph(IV)
    p = iv_point()
    fs = fiber_system(g, phi(g, p))
    r = solve(fs.to_poly_system())
    assert r.status == COMPLETE and len(r.roots) == 1
    assert r.root_dicts()[0] == {(1, 2): 2, (2, 3): 3}


def test_bow_fiber_continuum():
    g = graph(BOW)
    s = phi(g, ParamPoint(Matrix([[0, 1], [0, 0]]), Matrix([[2, 1], [1, 2]])))
    r = solve(fiber_system(g, s).to_poly_system())
    assert r.status == CONTINUUM_SUSPECTED
    assert r.continuum and r.continuum[0]["rank"] == 0


def test_line_of_roots_is_continuum():
    r = solve(PolySystem(("x", "y"), (x - y,)))
    assert r.status == CONTINUUM_SUSPECTED


def test_no_roots():
    r = solve(PolySystem(("x",), (x * x + 1,)))
    assert r.status == COMPLETE and r.roots == []


def test_roots_outside_box_reported():
    r = solve(PolySystem(("x",), (x - 50,)), SolveConfig(box=10.0))
    assert r.roots == [] and r.outside and abs(r.outside[0][0] - 50) < 1e-9


def test_budget_exhaustion_is_reported():
    p = (x * x - 2) * (x * x - 3) * (x - Fraction(1, 7))
    r = solve(PolySystem(("x",), (p,)), SolveConfig(split_budget=1, seeds=()))
    assert r.status in (BUDGET_EXHAUSTED, COMPLETE)
    if r.status == COMPLETE:
        assert len(r.roots) == 5


def test_nonzero_side_condition_filters_roots():
    r = solve(PolySystem(("x",), (x * x - 1,), nonzero=(x - 1,)))
    assert [root.rational[0] for root in r.roots] == [-1]
    assert r.filtered == 1


def test_undeclared_variable_rejected():
    with pytest.raises(ValueError):
        PolySystem(("x",), (x * y,))


def test_report_json_is_deterministic_and_untimed():
    s = PolySystem(("x", "y"), (x * y - 1, x - y))
    a, b = solve(s).to_json(), solve(s).to_json()
    assert a == b
    assert "seconds" not in a["statistics"]
    assert set(a) == {"status", "box", "roots", "continuum", "outside_box", "filtered_by_side_conditions", "statistics"}


def test_jacobian_examples():
    assert jacobian(PolySystem(("x",), (x * x - 1,)), (1,)) == Matrix([[2]])
    aff = PolySystem(("x", "y"), (3 * x - y + 1, x + 2 * y))
    assert jacobian(aff, (Fraction(5), Fraction(-7))) == Matrix([[3, -1], [1, 2]])
    assert jacobian(PolySystem(("x", "y"), ()), (0, 0)).shape == (0, 2)


@pytest.mark.parametrize("seed", range(10))
def test_jacobian_matches_finite_differences(seed):
    rng = Random(seed)
    s = random_system(rng, rng.randint(1, 4))
    pt = np.array([rng.uniform(-3, 3) for _ in s.variables])
    J = np.array(jacobian(s, tuple(pt)).tolist(), dtype=float)
    h = 1e-5
    for k in range(len(pt)):
        e = np.zeros_like(pt)
        e[k] = h
        fp = np.array([float(p.evaluate(dict(zip(s.variables, pt + e)))) for p in s.equations])
        fm = np.array([float(p.evaluate(dict(zip(s.variables, pt - e)))) for p in s.equations])
        fd = (fp - fm) / (2 * h)
        assert np.allclose(J[:, k], fd, rtol=1e-6, atol=1e-6)


def test_numeric_rank_examples():
    assert numeric_rank(Matrix.identity(4).to_float()) == 4
    u, v = np.array([1.0, 2.0, 3.0]), np.array([4.0, -1.0, 0.5])
    assert numeric_rank(np.outer(u, v)) == 1
    assert numeric_rank(np.zeros((3, 2))) == 0
    g = graph(IV)
    fs = fiber_system(g, phi(g, iv_point()))
    J = jacobian(fs.to_poly_system(), (2.0, 3.0))
    assert numeric_rank(J) == 2


@pytest.mark.parametrize("seed", range(6))
def test_numeric_rank_matches_svd(seed):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(0, 4))
    m = rng.normal(size=(5, r)) @ rng.normal(size=(r, 4)) if r else np.zeros((5, 4))
    assert numeric_rank(m) == np.linalg.matrix_rank(m) == r


def test_roots_separated_and_verified_on_random_systems():
    rng = Random(11)
    for _ in range(25):
        s = random_system(rng, rng.randint(1, 3))
        r = solve(s)
        centers = [np.array(root.center) for root in r.roots]
        for a in range(len(centers)):
            for b in range(a):
                assert np.max(np.abs(centers[a] - centers[b])) > 1e-6
        for root in r.roots:
            _, res = exact_newton(s, root.center)
            assert res < 1e-8


@pytest.mark.parametrize("seed", range(8))
def test_grid_scan_finds_no_missed_roots(seed):
    rng = Random(100 + seed)
    s = random_system(rng, rng.randint(1, 2))
    r = solve(s)
    if r.status != COMPLETE:
        pytest.skip("positive-dimensional or undecided system")
    reported = [np.array(root.center) for root in r.roots]
    for g in grid_roots(s):
        assert any(np.max(np.abs(g - c)) < 1e-6 for c in reported), (g, reported)
