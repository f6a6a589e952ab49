from __future__ import annotations

import math

import numpy as np
import pytest

from mphom.bench import LinearSlice, augment_with_linear, cyclic_system
from mphom.evaldiff import SystemEvaluator, compile_plan
from mphom.multiprec import MPComplex, Precision
from mphom.newton import (ITERATION_BUDGET, LINEAR_SOLVE_FAILURE, RESIDUAL_INCREASE,
                          NewtonParams, newton_correct)
from mphom.polysys import parse_system


def _evaluator(text):
    return SystemEvaluator(compile_plan(parse_system(text)))


def test_square_root_of_one():
    ev = _evaluator("vars: x\nx^2 - 1;")
    out = newton_correct(ev, MPComplex.from_complex(np.array([2.0])), NewtonParams(1e-12, 10))
    assert out.success and out.iterations <= 7
    assert abs(out.point.to_complex()[0] - 1.0) < 1e-12
    r = out.residuals
    assert r[0] == 3.0 and abs(r[1] - 0.5625) < 1e-15
    # quadratic decay once close
    for a, b in zip(r[2:], r[3:]):
        assert b <= a * a


def test_exact_root_of_linear_system():
    ev = _evaluator("vars: x y\nx + y - 3;\nx - y - 1;")
    out = newton_correct(ev, MPComplex.from_complex(np.array([2.0, 1.0])), NewtonParams())
    assert out.success and out.iterations == 1 and out.residual == 0.0


def test_overshoot_fails_with_residual_increase():
    # Newton on x^3 - 2x + 2 from 0 cycles 0 -> 1 -> 0 with residuals 2, 1, 2
    ev = _evaluator("vars: x\nx^3 - 2*x + 2;")
    out = newton_correct(ev, MPComplex.from_complex(np.array([0.0])), NewtonParams(1e-12, 10))
    assert not out.success and out.failure == RESIDUAL_INCREASE
    assert out.residuals == [2.0, 1.0, 2.0] and out.iterations == 3
    # the point holds the last update
    assert out.point.to_complex()[0] == 0.0


def test_iteration_budget():
    ev = _evaluator("vars: x\nx^2 - 1;")
    out = newton_correct(ev, MPComplex.from_complex(np.array([2.0])), NewtonParams(1e-12, 2))
    assert not out.success and out.failure == ITERATION_BUDGET and out.iterations == 2


def test_linear_solve_failure():
    ev = _evaluator("vars: x y\nx*y - 1;\nx*y - 2;")
    out = newton_correct(ev, MPComplex.from_complex(np.array([1.0, 1.0])), NewtonParams())
    assert not out.success and out.failure == LINEAR_SOLVE_FAILURE


def test_params_validation_and_defaults():
    with pytest.raises(ValueError):
        NewtonParams(max_iterations=0)
    with pytest.raises(ValueError):
        NewtonParams(tolerance=0.0)
    assert NewtonParams().initial_last_residual == math.inf
    assert NewtonParams.for_precision("d").tolerance == 1e-8
    assert NewtonParams.for_precision("dd").tolerance == 1e-20
    assert NewtonParams.for_precision("qd").tolerance == 1e-44
    assert NewtonParams.for_precision("qd").max_iterations == 6


def cyclic4_slice_problem(seed=3):
    """Cyclic 4-roots plus two affine equations through (i, -i, -i, i).

    The cyclic 4-roots Jacobian has rank 2 at this point, so two slices are
    needed for an isolated regular root.  Integer coefficients keep the
    point an exact root in every precision.
    """
    root = np.array([1j, -1j, -1j, 1j])
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(2):
        c = rng.integers(-4, 5, 4) + 1j * rng.integers(-4, 5, 4)
        rows.append(list(c) + [-(c @ root)])
    system = augment_with_linear(cyclic_system(4), 0, slice_=LinearSlice.from_complex(rows))
    return SystemEvaluator(compile_plan(system)), root


def test_cyclic4_point_is_singular_for_one_slice():
    plan = compile_plan(cyclic_system(4))
    jac = SystemEvaluator(plan)(MPComplex.from_complex(np.array([1j, -1j, -1j, 1j]))).jacobian
    assert np.linalg.matrix_rank(jac.to_complex(), tol=1e-12) == 2


@pytest.mark.parametrize("mode", [Precision.DD, Precision.QD])
def test_quadratic_convergence_cyclic4(mode):
    ev, root = cyclic4_slice_problem()
    direction = np.array([1 + 1j, -1, 0.5j, 1 - 0.5j])
    x = MPComplex.from_complex(root + 1e-3 * direction / np.abs(direction).max(), mode)
    exact = MPComplex.from_complex(root, mode)
    errors = [1e-3]
    one_step = NewtonParams(1e-300, 1)
    for _ in range(6):
        x = newton_correct(ev, x, one_step).point
        errors.append(max(np.abs((x - exact).to_complex())))
    floor = 100 * mode.eps
    for a, b in zip(errors, errors[1:]):
        if a > floor:
            assert b <= max(10 * a * a, floor)
    assert errors[-1] <= floor


def test_success_reports_a_passing_test():
    ev, root = cyclic4_slice_problem()
    for seed in range(5):
        rng = np.random.default_rng(seed)
        x = MPComplex.from_complex(root + 1e-4 * rng.normal(size=4))
        out = newton_correct(ev, x, NewtonParams(1e-10, 6))
        assert out.success
        assert out.residual < 1e-10 or out.update_norm < 1e-10
