import json
from fractions import Fraction
from random import Random

import pytest

from scmid.matrix import Matrix, cholesky, is_strictly_diagonally_dominant
from scmid.quad import Affine, ConstraintSystem, Mul, Overflow, brute_solutions, evaluate, normalize
from scmid.reduction import (
    ReductionError,
    _SigmaWriter,
    compile_system,
    embed_witness,
    expected_node_count,
    gadget_checks,
    pull_back,
    read_bundle,
    reduce_pipeline,
    verify_bundle,
    write_bundle,
)
from scmid.scm import fiber_system, residual
from scmid.solver import COMPLETE, CONTINUUM_SUSPECTED, solve

SQUARE = normalize(["x1**2 - 1"]).system  # x1*x1 = x2, x2 = 1


def fiber_roots(ri):
    rep = solve(fiber_system(ri.graph, ri.sigma).to_poly_system())
    assert rep.status == COMPLETE
    return rep.root_dicts()


def random_satisfied_system(rng: Random):
    """Tiny unit-coefficient system built around a known integer solution."""
    n = rng.randint(1, 3)
    sol = [Fraction(rng.randint(-1, 1)) for _ in range(n)]
    cons = []
    for _ in range(rng.randint(n, n + 1)):
        if rng.random() < 0.5 and n >= 2:
            a, b = rng.randint(1, n), rng.randint(1, n)
            c = next((k for k in range(1, n + 1) if sol[k - 1] == sol[a - 1] * sol[b - 1]), None)
            if c is not None:
                cons.append(Mul(a, b, c))
                continue
        coeffs = tuple(Fraction(rng.choice((-1, 0, 1))) for _ in range(n))
        rhs = sum(c * v for c, v in zip(coeffs, sol))
        if abs(rhs) <= 1:
            cons.append(Affine(coeffs, rhs))
    if not cons:
        cons.append(Affine(tuple(Fraction(int(k == 0)) for k in range(n)), sol[0]))
    return ConstraintSystem(n, tuple(cons)), tuple(sol)


def test_node_count_example():
    cs = ConstraintSystem(2, (Affine((Fraction(1), Fraction(-1)), Fraction(0)), Mul(1, 1, 2)))
    ri = compile_system(cs)
    assert ri.graph.n == expected_node_count(cs) == 1 + 2 + 1 + 4 == 8


def test_single_affine_instance():
    ri = compile_system(ConstraintSystem(1, (Affine((Fraction(1),), Fraction(0)),)))
    assert ri.sigma == Matrix([[3, 0, 1], [0, 3, 0], [1, 0, 3]])
    roots = fiber_roots(ri)
    assert len(roots) == 1 and roots[0][(1, 2)] == 0


def test_layout_invariants():
    ri = compile_system(SQUARE)
    lay = ri.layout
    g = ri.graph
    r = lay.root
    assert r == SQUARE.n + 1
    assert g.parents(r) == list(range(1, SQUARE.n + 1))
    assert [lay.var_edge(k) for k in (1, 2)] == [(1, r), (2, r)]
    outdeg = {}
    for a, _ in g.directed:
        outdeg[a] = outdeg.get(a, 0) + 1
    assert set(outdeg) == set(lay.bottom_nodes()) and set(outdeg.values()) == {1}
    assert sorted(g.missing_pairs()) == sorted(lay.missing())
    mul = next(x for x in lay.gadgets if x.kind == "mul")
    i, j = mul.nodes["i"], mul.nodes["j"]
    assert set(mul.missing) == {(r, i), (i, j), (r, j)} or set(mul.missing) == {tuple(sorted(p)) for p in ((r, i), (i, j), (r, j))}


def test_sigma_certificate_properties():
    ri = compile_system(SQUARE)
    s = ri.sigma
    n = s.rows
    assert all(s[k, k] == n for k in range(n))
    assert all(s[a, b] in (-1, 0, 1) for a in range(n) for b in range(n) if a != b)
    assert is_strictly_diagonally_dominant(s)
    cholesky(s)


def test_gadget_self_checks_pass():
    ri = compile_system(SQUARE)
    checks = gadget_checks(ri.graph, ri.sigma, ri.layout, ri.source)
    assert checks and all(ok for _, ok, _ in checks)


def test_double_write_rejected():
    w = _SigmaWriter(3)
    w.set(1, 2, 1)
    with pytest.raises(ReductionError):
        w.set(2, 1, 0)


def test_compile_requires_unit_normal_form():
    with pytest.raises(ReductionError):
        compile_system(ConstraintSystem(1, (Affine((Fraction(2),), Fraction(1)),)))


def test_embed_zero_witness():
    ri = compile_system(ConstraintSystem(1, (Affine((Fraction(1),), Fraction(0)),)))
    p = embed_witness(ri, (Fraction(0),))
    assert p.lam == Matrix.zeros(3)
    assert p.omega == ri.sigma


def test_embed_square_witness():
    ri = compile_system(SQUARE)
    p = embed_witness(ri, (Fraction(1), Fraction(1)))
    assert residual(fiber_system(ri.graph, ri.sigma), p.lam) == 0
    cholesky(p.omega)
    with pytest.raises(ReductionError):
        embed_witness(ri, (Fraction(2), Fraction(1)))


def test_pull_back_square_fiber():
    ri = compile_system(SQUARE)
    vals = sorted(pull_back(ri, root) for root in fiber_roots(ri))
    assert vals == [(-1, 1), (1, 1)]


def test_pull_back_planted_selector_values():
    pipe = reduce_pipeline(normalize(["x1**2 - 1"]).system, plant=True)
    roots = fiber_roots(pipe.instance)
    assert len(roots) == 3
    pulled = [pull_back(pipe.instance, r) for r in roots]
    assert sorted(pipe.selector(v) for v in pulled) == [0, 0, 1]
    assert sorted(pipe.original_values(v)[0] for v in pulled if pipe.selector(v) == 0) == [-1, 1]


def test_pull_back_rejects_non_solution():
    ri = compile_system(SQUARE)
    with pytest.raises(ReductionError):
        pull_back(ri, {(1, ri.layout.root): Fraction(2), (2, ri.layout.root): Fraction(1)})


@pytest.mark.parametrize("seed", range(16))
def test_roundtrip_and_fiber_bijection(seed):
    rng = Random(seed)
    cs, sol = random_satisfied_system(rng)
    ri = compile_system(cs)
    assert pull_back(ri, embed_witness(ri, sol).lam) == sol
    try:
        src = brute_solutions(cs)
    except Overflow as exc:
        assert exc.reason == CONTINUUM_SUSPECTED
        assert solve(fiber_system(ri.graph, ri.sigma).to_poly_system()).status == CONTINUUM_SUSPECTED
        return
    roots = fiber_roots(ri)
    assert len(roots) == len(src)
    for r in roots:
        vals = pull_back(ri, r)
        assert all(abs(float(v)) < 1e-9 for v in evaluate(cs, vals))


def test_lift_of_original_solution():
    cs = normalize(["x1**2 - 1"]).system
    pipe = reduce_pipeline(cs, plant=True)
    lifted = pipe.lift((Fraction(-1), Fraction(1)))
    assert all(v == 0 for v in evaluate(pipe.lowered.system, lifted))
    p = embed_witness(pipe.instance, lifted)
    assert pull_back(pipe.instance, p.lam) == lifted


def test_bundle_roundtrip_and_verify(tmp_path):
    ri = compile_system(SQUARE)
    path = write_bundle(ri, tmp_path / "b")
    assert path.name == "bundle.json"
    data = read_bundle(tmp_path / "b")
    cert = verify_bundle(data)
    assert cert.ok, cert.text()
    assert verify_bundle(path, (Fraction(1), Fraction(1))).ok
    bad = verify_bundle(path, (Fraction(1), Fraction(2)))
    assert not bad.ok and "witness embedding" in bad.failures()


def test_bundle_corruption_detected(tmp_path):
    ri = compile_system(SQUARE)
    data = json.loads(write_bundle(ri, tmp_path / "b.json").read_text())
    mul = next(g for g in data["layout"]["gadgets"] if g["kind"] == "mul")
    a, b = mul["missing"][0]
    e = data["sigma"]["entries"]
    a_row = data["layout"]["root"] - 1
    # flip a constructed entry feeding the first missing-pair equation
    col = b - 1 if a - 1 == a_row else a - 1
    for k in range(len(e)):
        if k != col and e[k][col] != "0":
            e[k][col] = e[col][k] = "0"
            break
    cert = verify_bundle(data)
    assert not cert.ok
    assert any(f.startswith("gadget") or f.startswith("recompiled") for f in cert.failures())


def test_read_bundle_rejects_other_formats(tmp_path):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"format": "other"}))
    with pytest.raises(ReductionError):
        read_bundle(p)
