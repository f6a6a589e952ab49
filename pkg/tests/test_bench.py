from __future__ import annotations

import io

import mpmath
import numpy as np
import pytest

from conftest import backelin_witness
from mphom.bench import (DegenerateSliceError, LinearSlice, PieriPattern, augment_with_linear,
                         choose_special_matrix, cyclic4_family_point, cyclic4_witness,
                         cyclic_degree, cyclic_system, load_witness_set, minor_expand,
                         monodromy_degree, monodromy_loop, pieri_sequence, save_witness_set)
from mphom.bench.monodromy import loop_params
from mphom.bench.pieri import evaluate_expansion
from mphom.evaldiff import SystemEvaluator, compile_plan
from mphom.linalg import max_modulus
from mphom.multiprec import MPComplex, Precision
from mphom.polysys import parse_system


def _residual(system, x):
    return max_modulus(SystemEvaluator(compile_plan(system))(x).values)


def test_cyclic3_terms():
    s = cyclic_system(3)
    assert s == parse_system("vars: x0 x1 x2\nx0 + x1 + x2;\nx0*x1 + x1*x2 + x2*x0;\n"
                             "x0*x1*x2 - 1;")


def test_cyclic4_second_polynomial():
    assert cyclic_system(4).polynomials[1] == \
        parse_system("vars: x0 x1 x2 x3\nx0*x1 + x1*x2 + x2*x3 + x3*x0;").polynomials[0]


def test_cyclic_term_counts_and_degrees():
    s = cyclic_system(8)
    assert [len(p) for p in s.polynomials] == [8] * 7 + [2]
    for k, p in enumerate(s.polynomials[:-1], 1):
        assert {t.degree for t in p} == {k}
    with pytest.raises(ValueError):
        cyclic_system(1)


def test_cyclic_degree_examples():
    f = cyclic_degree(16)
    assert (f.m, f.ell, f.dimension, f.degree) == (4, 1, 3, 4)
    assert cyclic_degree(144).degree == 12
    assert cyclic_degree(64).degree == 8
    assert cyclic_degree(5) is None and cyclic_degree(6) is None
    assert cyclic_degree(45).degree == 3
    with pytest.raises(ValueError):
        cyclic_degree(3)


def test_augment_with_linear():
    f = cyclic_system(4)
    g = augment_with_linear(f, 1, seed=7)
    assert (len(g.polynomials), g.n_variables) == (5, 4)
    assert g == augment_with_linear(f, 1, seed=7)
    assert g != augment_with_linear(f, 1, seed=8)
    assert augment_with_linear(f, 0) is f
    L = LinearSlice.random(4, 2, 3)
    assert LinearSlice.from_json(L.to_json()) == L


def test_family_point_at_i():
    x = cyclic4_family_point(1j, 1, Precision.DD)
    assert np.array_equal(x.to_complex(), [1j, -1j, -1j, 1j])
    assert _residual(cyclic_system(4), x) == 0.0


@pytest.mark.parametrize("mode", list(Precision))
@pytest.mark.parametrize("family", [1, 2])
def test_cyclic4_witness_points(mode, family):
    L = LinearSlice.random(4, 1, 11)
    pts = cyclic4_witness(L, family, mode)
    assert len(pts) == 2
    assert max_modulus((pts[0] - pts[1])) > 1e-3
    for x in pts:
        assert x.precision == mode
        assert _residual(augment_with_linear(cyclic_system(4), 0, slice_=L), x) <= 100 * mode.eps


def test_degenerate_slice():
    L = LinearSlice.from_complex([[0.5 + 1j, 2.0, 0.5 + 1j, 2.0, 1.0]])
    with pytest.raises(DegenerateSliceError):
        cyclic4_witness(L, 1)


def _family1(x):
    """Coordinates of a family-1 point satisfy x2 = -x0 and x1 x0 = 1."""
    z = x.to_complex()
    return abs(z[2] + z[0]) < 1e-6 and abs(z[0] * z[1] - 1) < 1e-6


def test_monodromy_loop_stays_on_family():
    rng = np.random.default_rng(0)
    L = LinearSlice.random(4, 1, rng)
    K = LinearSlice.random(4, 1, rng)
    w = cyclic4_witness(L, 1)
    f = cyclic_system(4)
    res = monodromy_loop(w[0], f, L, K, np.exp(1j), np.exp(2j))
    assert res.success and len(res.legs) == 2
    assert _family1(res.point)
    assert _residual(augment_with_linear(f, 0, slice_=L), res.point) < 1e-8
    assert min(max_modulus(res.point - p) for p in w) < 1e-6
    again = monodromy_loop(w[0], f, L, K, np.exp(1j), np.exp(2j))
    for a, b in zip(res.point.limbs, again.point.limbs):
        assert np.array_equal(a, b)


def test_monodromy_degree_cyclic4():
    rng = np.random.default_rng(0)
    L = LinearSlice.random(4, 1, rng)
    f = cyclic_system(4)
    ws = monodromy_degree(f, L, cyclic4_witness(L, 1)[:1], seed=0)
    assert ws.degree == 2
    assert all(_family1(p) for p in ws.points)
    assert all(r < 1e-8 for r in ws.residuals)
    fh = io.StringIO()
    save_witness_set(fh, ws)
    fh.seek(0)
    L2, pts = load_witness_set(fh, f)
    assert L2 == L and len(pts) == 2


def test_monodromy_without_loops_returns_start():
    L = LinearSlice.random(4, 1, 2)
    w = cyclic4_witness(L, 1)
    ws = monodromy_degree(cyclic_system(4), L, w[:1], stabilization_loops=0)
    assert ws.degree == 1 and ws.log == []
    with pytest.raises(ValueError):
        monodromy_degree(cyclic_system(4), L, [])


def test_backelin_fixture_is_on_cyclic16():
    L, pts = backelin_witness(4)
    f = augment_with_linear(cyclic_system(16), 0, slice_=L)
    assert len(pts) == 4
    for z in pts:
        assert _residual(f, MPComplex.from_complex(z)) < 1e-10


# ---------------------------------------------------------------------------
# Pieri
# ---------------------------------------------------------------------------

def test_minor_expand_two_by_two():
    pattern = PieriPattern(2, 1, 1, ((1, 0),))
    a1, a2 = 2 + 1j, -3.0 + 0.5j
    poly = minor_expand(np.array([[a1], [a2]]), pattern, 1)
    assert poly == {(0,): mpmath.mpc(a1), (): mpmath.mpc(-a2)}


def test_minor_expand_constant_pattern(rng):
    pattern = PieriPattern.standard(5, 2, 3)
    A = rng.normal(size=(5, 2)) + 1j * rng.normal(size=(5, 2))
    poly = minor_expand(A, pattern, 0)
    assert list(poly) == [()]
    det = np.linalg.det(np.hstack([A, pattern.numeric(0, [])]))
    assert abs(complex(poly[()]) - det) <= 1e-12 * abs(det)


@pytest.mark.parametrize("nmp", [(4, 2, 2), (5, 2, 3), (6, 3, 3)])
def test_minor_expand_matches_determinant(rng, nmp):
    n, m, p = nmp
    pattern = PieriPattern.standard(n, m, p)
    k = pattern.n_stages
    A = rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))
    poly = minor_expand(A, pattern, k)
    for _ in range(5):
        vals = rng.normal(size=k) + 1j * rng.normal(size=k)
        det = np.linalg.det(np.hstack([A, pattern.numeric(k, vals)]))
        got = complex(evaluate_expansion(poly, [mpmath.mpc(v) for v in vals]))
        assert abs(got - det) <= 1e-12 * max(abs(det), 1.0)


def test_full_pattern_gives_quadratics(rng):
    pattern = PieriPattern.standard(4, 2, 2)
    assert pattern.n_stages == 4
    poly = minor_expand(rng.normal(size=(4, 2)), pattern, 4)
    assert max(len(s) for s in poly) == 2


def test_pattern_invariants():
    pattern = PieriPattern.standard(4, 2, 2)
    assert pattern.events == ((2, 1), (3, 1), (1, 0), (2, 0))
    for k in range(pattern.n_stages + 1):
        grid = pattern.entries(k)
        assert sum(isinstance(e, int) for row in grid for e in row) == k
        for j in range(2):
            assert grid[j][j] == "one" and all(grid[r][j] == "zero" for r in range(j))
    with pytest.raises(ValueError):
        PieriPattern.standard(4, 2, 3)


def test_special_matrix_stage_one():
    # X has columns e1 and e2 + x e3: columns e2, e4 give det = +-x
    pattern = PieriPattern.standard(4, 2, 2)
    S = choose_special_matrix(pattern, 1)
    poly = minor_expand(S, pattern, 1)
    assert set(poly) == {(0,)} and abs(abs(complex(poly[(0,)])) - 1) < 1e-15
    assert np.array_equal(S, np.array([[0, 0], [1, 0], [0, 0], [0, 1.0]]))


@pytest.mark.parametrize("nmp", [(4, 2, 2), (6, 3, 3)])
def test_special_matrix_postconditions(rng, nmp):
    pattern = PieriPattern.standard(*nmp)
    for k in range(1, pattern.n_stages + 1):
        start = list(rng.normal(size=k - 1) + 1j * rng.normal(size=k - 1)) + [0.0]
        S = choose_special_matrix(pattern, k, k - 1, start)
        assert abs(np.linalg.det(np.hstack([S, pattern.numeric(k, start)]))) < 1e-12
        h = 1e-7
        bumped = start[:-1] + [h]
        d = np.linalg.det(np.hstack([S, pattern.numeric(k, bumped)])) / h
        assert abs(d) > 1e-8


def test_special_matrix_wrong_variable():
    with pytest.raises(Exception) as err:
        choose_special_matrix(PieriPattern.standard(4, 2, 2), 2, new_var=0)
    assert err.value.stage == 2


def test_pieri_422():
    res = pieri_sequence(4, 2, 2, seed=0)
    assert res.residual <= 1e-10
    assert [s.stage for s in res.stages] == [1, 2, 3, 4]
    assert res.stages[0].steps == 0
    assert all(s.success for s in res.stages)
    X = res.pattern.numeric(4, res.point.to_complex())
    for A in res.matrices:
        assert abs(np.linalg.det(np.hstack([A, X]))) <= 1e-9
    again = pieri_sequence(4, 2, 2, seed=0)
    for a, b in zip(res.point.limbs, again.point.limbs):
        assert np.array_equal(a, b)
