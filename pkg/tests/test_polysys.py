from __future__ import annotations

import io

import mpmath
import numpy as np
import pytest

from mphom.bench import cyclic_system
from mphom.evaldiff import HomotopyPlan, evaluate_homotopy, evaluate_system, compile_plan
from mphom.multiprec import MPComplex, Precision
from mphom.polysys import (Coefficient, HomotopyParameters, PolynomialSystem, SolutionRecord,
                           SystemSyntaxError, Term, homotopy_weights, make_homotopy,
                           parse_system, read_solutions, serialize_system, write_solutions)


def test_parse_two_unit_terms():
    s = parse_system("x0 + x1;", n_variables=2)
    assert s.n_variables == 2
    assert s.term_counts() == (2,)
    assert all(complex(t.coefficient) == 1.0 for t in s.polynomials[0])


def test_parse_merges_duplicate_supports():
    s = parse_system("vars: x0 x1\nx0*x1 + x1*x0;")
    (term,) = s.polynomials[0]
    assert term.support == ((0, 1), (1, 1))
    assert complex(term.coefficient) == 2.0


def test_parse_cyclic3_term_counts():
    text = "vars: x0 x1 x2\nx0 + x1 + x2;\nx0*x1 + x1*x2 + x2*x0;\nx0*x1*x2 - 1;\n"
    s = parse_system(text)
    assert s.term_counts() == (3, 3, 2)
    assert s == cyclic_system(3)


def test_parse_coefficient_forms():
    s = parse_system("vars: x y\n(1.5 + 2*i)*x^2*y - 3*y + #(0x1p-1 0x1p-60)+i#(0x1p+0);")
    terms = {t.support: t.coefficient for t in s.polynomials[0]}
    assert complex(terms[((0, 2), (1, 1))]) == 1.5 + 2j
    assert complex(terms[((1, 1),)]) == -3.0
    const = terms[()]
    assert const.re[:2] == (0.5, 2.0**-60) and const.im[0] == 1.0


def test_parse_drops_zero_coefficients():
    s = parse_system("vars: x0 x1\nx0 - x0 + x1;")
    assert s.term_counts() == (1,)


def test_parse_errors_have_position():
    with pytest.raises(SystemSyntaxError) as err:
        parse_system("vars: x0 x1\nx0 + * x1;")
    assert err.value.line == 2 and err.value.col > 0
    with pytest.raises(SystemSyntaxError):
        parse_system("vars: x0\nx0 + x3;")
    with pytest.raises(SystemSyntaxError):
        parse_system("vars: x0\n")


def test_round_trip_cyclic4():
    s = cyclic_system(4)
    assert parse_system(serialize_system(s)) == s


def test_round_trip_keeps_dd_limbs():
    with mpmath.workprec(320):
        c = Coefficient.from_mpc(mpmath.mpc(1, 0) / 3 + mpmath.mpc(0, 1) / 7)
    s = PolynomialSystem.build(2, [[Term(c, ((0, 1),)), Term(c, ())]])
    back = parse_system(serialize_system(s))
    assert back == s
    assert back.polynomials[0][0].coefficient.re[1] != 0.0


def test_empty_polynomial_rejected_on_reparse():
    s = PolynomialSystem.build(1, [[Term(Coefficient.from_complex(1.0), ((0, 1),))], []])
    with pytest.raises(SystemSyntaxError):
        parse_system(serialize_system(s))


def test_term_invariants():
    with pytest.raises(ValueError):
        Term(Coefficient.from_complex(1.0), ((1, 1), (0, 1)))
    with pytest.raises(ValueError):
        Term(Coefficient.from_complex(1.0), ((0, 0),))
    with pytest.raises(ValueError):
        PolynomialSystem.build(2, [[Term(Coefficient.from_complex(1.0), ((2, 1),))]])


def test_homotopy_weight_examples():
    ws, wt = homotopy_weights(HomotopyParameters.from_gamma(1j), 0.0)
    assert ws.to_complex() == 1j and wt.to_complex() == 0.0
    ws, wt = homotopy_weights(HomotopyParameters.from_gamma(1.0), 0.5)
    assert ws.to_complex() == 0.25 and wt.to_complex() == 0.25
    ws, wt = homotopy_weights(HomotopyParameters.from_gamma(1.0, relaxation=1), 0.3, Precision.DD)
    assert abs(ws.to_complex() - 0.7) < 1e-16 and wt.to_complex() == 0.3
    with pytest.raises(ValueError):
        homotopy_weights(HomotopyParameters(), 1.5)


def test_homotopy_parameters_invariants(rng):
    p = HomotopyParameters.random(rng)
    assert abs(abs(complex(p.gamma)) - 1.0) < 1e-15
    assert p.relaxation == 2 and 0.0 <= p.theta < 2 * np.pi
    with pytest.raises(ValueError):
        HomotopyParameters(relaxation=0)
    with pytest.raises(ValueError):
        HomotopyParameters.from_gamma(2.0)


def test_gamma_trick_weights_nonzero(rng):
    for _ in range(20):
        p = HomotopyParameters.random(rng, relaxation=int(rng.integers(1, 4)))
        for t in np.linspace(0.0, 0.999, 50):
            ws, wt = homotopy_weights(p, t)
            assert abs((ws + wt).to_complex()) > 0.0


def _two_systems():
    g = parse_system("vars: x y\nx^2 - 1;\ny^2 - 1;")
    f = parse_system("vars: x y\nx*y + 2*x - 3;\nx^2 + y - 5;")
    return g, f


@pytest.mark.parametrize("mode", [Precision.D, Precision.DD])
def test_homotopy_endpoint_identities(rng, mode):
    g, f = _two_systems()
    params = HomotopyParameters.random(rng)
    plan = HomotopyPlan.compile(make_homotopy(g, f, params))
    x = MPComplex.from_complex(rng.normal(size=2) + 1j * rng.normal(size=2), mode)
    gamma = complex(params.gamma)
    gv = evaluate_system(compile_plan(g), x).values.to_complex()
    fv = evaluate_system(compile_plan(f), x).values.to_complex()
    h0 = evaluate_homotopy(plan, x, 0.0).values.to_complex()
    h1 = evaluate_homotopy(plan, x, 1.0).values.to_complex()
    assert np.allclose(h0, gamma * gv, rtol=1e-14, atol=0)
    assert np.array_equal(h1, fv)


def test_homotopy_half_with_k2():
    g, f = _two_systems()
    plan = HomotopyPlan.compile(make_homotopy(g, f, HomotopyParameters.from_gamma(1.0)))
    x = MPComplex.from_complex(np.array([0.3 + 1j, -2.0 + 0.5j]))
    gv = evaluate_system(compile_plan(g), x).values.to_complex()
    fv = evaluate_system(compile_plan(f), x).values.to_complex()
    h = evaluate_homotopy(plan, x, 0.5).values.to_complex()
    assert np.allclose(h, 0.25 * (gv + fv), rtol=1e-15, atol=0)


def test_make_homotopy_dimension_mismatch():
    g, f = _two_systems()
    with pytest.raises(ValueError):
        make_homotopy(g, cyclic_system(3))
    with pytest.raises(ValueError):
        make_homotopy(g, f.extend([[Term(Coefficient.from_complex(1.0), ())]]))


def test_solutions_file_round_trip(rng):
    x = MPComplex.from_complex(rng.normal(size=3) + 1j * rng.normal(size=3), Precision.QD)
    x = x / MPComplex.from_complex(3.0, Precision.QD)
    fh = io.StringIO()
    write_solutions(fh, [SolutionRecord(x, 1.0, 1e-30, 2e-31)], {"n": 3})
    fh.seek(0)
    header, records = read_solutions(fh)
    assert header == {"n": 3}
    (rec,) = records
    assert rec.residual == 1e-30 and rec.t == 1.0
    for a, b in zip(rec.point.limbs, x.limbs):
        assert np.array_equal(a, b)
