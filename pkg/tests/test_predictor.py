from __future__ import annotations

import mpmath
import numpy as np
import pytest

from conftest import ORACLE_BITS
from mphom.multiprec import MPComplex, Precision
from mphom.predictor import DEFAULT_DEGREE, PathHistory, history_push, predict


def _point(values, mode=Precision.D):
    return MPComplex.from_complex(np.atleast_1d(np.asarray(values, dtype=complex)), mode)


def test_single_point_is_copied():
    h = PathHistory().push(0.0, _point([1 + 2j, 3.0]))
    assert np.array_equal(predict(h, 0.3).to_complex(), [1 + 2j, 3.0])


def test_linear_extrapolation():
    h = PathHistory().push(0.0, _point(1.0)).push(0.1, _point(1.21))
    assert abs(predict(h, 0.2).to_complex()[0] - 1.42) < 1e-15


def _poly_path(coefs, t, mode):
    """Coordinates sum_j coefs[i][j] t^j evaluated exactly, rounded to ``mode``."""
    with mpmath.workprec(ORACLE_BITS):
        tt = mpmath.mpf(t)
        vals = [sum(mpmath.mpc(c) * tt**j for j, c in enumerate(row)) for row in coefs]
    return MPComplex.from_mpc(vals, mode), vals


@pytest.mark.parametrize("mode", list(Precision))
@pytest.mark.parametrize("d", [1, 3, 4])
def test_polynomial_reproduction(rng, mode, d):
    coefs = rng.normal(size=(3, d + 1)) + 1j * rng.normal(size=(3, d + 1))
    h = PathHistory(DEFAULT_DEGREE)
    for t in (0.0, 0.05, 0.125, 0.25, 0.3125)[-(d + 1):]:
        h.push(t, _poly_path(coefs, t, mode)[0])
    got = predict(h, 0.4).to_mpc()
    _, exact = _poly_path(coefs, 0.4, mode)
    with mpmath.workprec(ORACLE_BITS):
        err = max(abs(g - e) / abs(e) for g, e in zip(got, exact))
    assert err <= 100 * mode.eps


def test_quartic_reproduced_by_default_degree(rng):
    coefs = rng.normal(size=(2, 5)) + 1j * rng.normal(size=(2, 5))
    h = PathHistory()
    for t in (0.0, 0.1, 0.2, 0.3, 0.4):
        h.push(t, _poly_path(coefs, t, Precision.DD)[0])
    got = predict(h, 0.5).to_mpc()
    _, exact = _poly_path(coefs, 0.5, Precision.DD)
    with mpmath.workprec(ORACLE_BITS):
        assert max(abs(g - e) / abs(e) for g, e in zip(got, exact)) <= 1e-27


def test_history_push_rules():
    h = PathHistory(2)
    assert len(history_push(h, 0.0, _point(0.0))) == 1
    for k in range(1, 4):
        history_push(h, 0.1 * k, _point(k))
    assert len(h) == 3 and h.ts == [0.1, 0.2, 0.30000000000000004]
    with pytest.raises(ValueError):
        h.push(h.ts[-1], _point(9.0))
    with pytest.raises(ValueError):
        h.push(0.0, _point(9.0))


def test_predict_errors():
    with pytest.raises(ValueError):
        predict(PathHistory(), 0.5)
    h = PathHistory().push(0.5, _point(1.0))
    with pytest.raises(ValueError):
        predict(h, 0.5)


def test_degree_range():
    assert PathHistory(0).capacity == 1 and PathHistory(8).capacity == 9
    with pytest.raises(ValueError):
        PathHistory(9)


def test_history_stores_copies():
    x = _point([1.0, 2.0])
    h = PathHistory().push(0.0, x)
    x[0] = 5.0
    assert h.points[0].to_complex()[0] == 1.0
