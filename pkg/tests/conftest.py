from __future__ import annotations

import mpmath
import numpy as np
import pytest

from mphom.multiprec import MPComplex, MPReal, Precision

ORACLE_BITS = 320


def random_mpreal(rng, size, precision, spread=4):
    """Normalized random reals whose limbs all carry information."""
    nl = Precision.parse(precision).limbs
    hi = rng.uniform(0.5, 1.0, size) * 2.0 ** rng.integers(-spread, spread + 1, size)
    hi *= rng.choice([-1.0, 1.0], size)
    limbs = [hi]
    for _ in range(nl - 1):
        limbs.append(limbs[-1] * rng.uniform(-1.0, 1.0, size) * 2.0**-53)
    return MPReal(limbs).renormalize()


def random_mpcomplex(rng, shape, precision):
    n = int(np.prod(shape))
    re = random_mpreal(rng, n, precision, spread=1)
    im = random_mpreal(rng, n, precision, spread=1)
    z = MPComplex.from_parts(re, im)
    return z.reshape(shape) if len(shape) != 1 else z


def rel_error(got, exact):
    """Largest relative error of mpf arrays against an exact mpf array."""
    with mpmath.workprec(ORACLE_BITS):
        worst = mpmath.mpf(0)
        for g, e in zip(np.ravel(got), np.ravel(exact)):
            if e == 0:
                err = abs(g)
            else:
                err = abs(g - e) / abs(e)
            worst = max(worst, err)
    return float(worst)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_system(rng, n=None, n_terms=None):
    """Random system with n <= 8, <= 20 terms per polynomial, supports <= 6, exponents <= 3."""
    from mphom.polysys import Coefficient, PolynomialSystem, Term

    n = n or int(rng.integers(1, 9))
    polys = []
    for _ in range(n):
        terms = []
        for _ in range(n_terms or int(rng.integers(1, 21))):
            size = int(rng.integers(0, min(n, 6) + 1))
            vars_ = sorted(rng.choice(n, size=size, replace=False).tolist())
            support = tuple((v, int(rng.integers(1, 4))) for v in vars_)
            c = complex(rng.normal(), rng.normal())
            terms.append(Term(Coefficient.from_complex(c), support))
        polys.append(terms)
    return PolynomialSystem.build(n, polys)


def oracle_evaluate(system, point):
    """Values, Jacobian and per-entry magnitude scales by symbolic differentiation.

    Each term is differentiated by the power rule in 320-bit arithmetic.  The
    scale of an entry is the sum of the moduli of its contributions, the
    natural yardstick for a rounded sum.
    """
    n, N = system.n_variables, system.n_equations
    with mpmath.workprec(ORACLE_BITS):
        x = [mpmath.mpmathify(v) for v in point]
        vals = [mpmath.mpc(0)] * N
        vscale = [mpmath.mpf(0)] * N
        jac = [[mpmath.mpc(0)] * n for _ in range(N)]
        jscale = [[mpmath.mpf(0)] * n for _ in range(N)]
        for i, poly in enumerate(system.polynomials):
            for t in poly:
                c = t.coefficient.to_mpc()
                m = c
                for v, e in t.support:
                    m *= x[v] ** e
                vals[i] += m
                vscale[i] += abs(m)
                for k, (v, e) in enumerate(t.support):
                    d = c * e * x[v] ** (e - 1)
                    for w, f in t.support:
                        if w != v:
                            d *= x[w] ** f
                    jac[i][v] += d
                    jscale[i][v] += abs(d)
    return vals, jac, vscale, jscale


def oracle_errors(system, point, result):
    """Largest scaled error of an EvalResult against :func:`oracle_evaluate`."""
    vals, jac, vscale, jscale = oracle_evaluate(system, point.to_mpc())
    got_v = result.values.to_mpc()
    got_j = result.jacobian.to_mpc()
    worst = 0.0
    with mpmath.workprec(ORACLE_BITS):
        for i in range(system.n_equations):
            if vscale[i]:
                worst = max(worst, float(abs(got_v[i] - vals[i]) / vscale[i]))
            for j in range(system.n_variables):
                if jscale[i][j]:
                    worst = max(worst, float(abs(got_j[i, j] - jac[i][j]) / jscale[i][j]))
    return worst


def _mp_conj_t(M):
    return np.vectorize(mpmath.conj, otypes=[object])(M).T


def _mp_max_abs(M):
    return float(max(abs(v) for v in np.ravel(M)))


def qr_errors(A, qr):
    """``||Q^H Q - I||max`` and ``||A - QR||max / ||A||max`` in 320-bit arithmetic."""
    with mpmath.workprec(ORACLE_BITS):
        Am, Q, R = A.to_mpc(), qr.Q.to_mpc(), qr.R.to_mpc()
        G = _mp_conj_t(Q).dot(Q) - np.eye(Q.shape[1], dtype=object)
        F = Am - Q.dot(R)
        return _mp_max_abs(G), _mp_max_abs(F) / _mp_max_abs(Am)


def ls_orthogonality(A, b, x):
    """``||A^H (b - A x)||max / (||A||max ||b||max)`` in 320-bit arithmetic."""
    with mpmath.workprec(ORACLE_BITS):
        Am, bm, xm = A.to_mpc(), b.to_mpc(), x.to_mpc()
        r = bm - Am.dot(xm)
        return _mp_max_abs(_mp_conj_t(Am).dot(r)) / (_mp_max_abs(Am) * _mp_max_abs(bm))


def random_homotopy(rng, precision=Precision.D):
    """A total-degree homotopy on 1-3 variables and one of its start roots."""
    from mphom.polysys import (Coefficient, HomotopyParameters, PolynomialSystem, Term,
                               make_homotopy)

    n = int(rng.integers(1, 4))
    degrees = rng.integers(1, 4, n)
    one = Coefficient.from_complex(1.0)
    start = PolynomialSystem.build(n, [[Term(one, ((i, int(d)),)), Term(-one, ())]
                                       for i, d in enumerate(degrees)])
    target = []
    for i, d in enumerate(degrees):
        terms = [Term(one, ((i, int(d)),))]
        for _ in range(int(rng.integers(1, 5))):
            size = int(rng.integers(0, n + 1))
            vars_ = sorted(rng.choice(n, size=size, replace=False).tolist())
            exps = [1] * size
            # keep the total degree below d so the start roots are all regular
            if sum(exps) >= d:
                continue
            c = complex(rng.normal(), rng.normal())
            terms.append(Term(Coefficient.from_complex(c), tuple(zip(vars_, exps))))
        target.append(terms)
    target = PolynomialSystem.build(n, target)
    params = HomotopyParameters.random(rng, relaxation=int(rng.integers(1, 3)))
    roots = [np.exp(2j * np.pi * rng.integers(0, d) / d) for d in degrees]
    return make_homotopy(start, target, params), MPComplex.from_complex(np.array(roots), precision)


def check_track_invariants(out, params):
    """Assert monotone t, step bounds, budget and trace completeness of one track."""
    from mphom.tracker import CORRECTED, DIVERGED, PREDICTED

    events = out.trace.events
    assert events and events[0].step == -1 and events[0].t == 0.0
    trials = events[1:]
    assert len(trials) == 2 * out.steps
    assert out.steps <= params.max_steps + 1
    accepted = [0.0] if events[0].kind == CORRECTED else []
    for k in range(out.steps):
        pred, corr = trials[2 * k], trials[2 * k + 1]
        assert pred.kind == PREDICTED and corr.kind in (CORRECTED, DIVERGED)
        assert pred.step == corr.step == k and pred.t == corr.t
        assert params.min_step <= pred.dt <= params.max_step
        assert pred.t == min(1.0, accepted[-1] + pred.dt)
        if corr.kind == CORRECTED:
            accepted.append(corr.t)
    assert all(a < b for a, b in zip(accepted, accepted[1:]))
    assert out.accepted == len(accepted) - 1
    if out.success:
        assert accepted[-1] == 1.0 and out.t == 1.0
        assert out.residual < params.newton.tolerance


def backelin_witness(m, seed=1):
    """Slice and witness points of one Backelin component of cyclic ``m^2``-roots.

    The component is ``x[i + m*k] = u^k y[i]`` with ``u = exp(2 pi i/m)`` and
    ``y[0]...y[m-1] = 1``.  Intersecting with ``m - 1`` random affine
    equations leaves a line in ``y``, and the product condition on that line
    is a polynomial of degree ``m``.
    """
    from mphom.bench import LinearSlice

    n = m * m
    u = np.exp(2j * np.pi / m)
    M = np.zeros((n, m), dtype=complex)
    for i in range(n):
        M[i, i % m] = u ** (i // m)
    L = LinearSlice.random(n, m - 1, np.random.default_rng(seed))
    C = np.array([[complex(c) for c in row] for row in L.rows])
    A, b = C[:, :n] @ M, C[:, n]
    p = np.linalg.lstsq(A, -b, rcond=None)[0]
    q = np.linalg.svd(A)[2].conj()[-1]
    poly = np.poly1d([1.0 + 0j])
    for j in range(m):
        poly = poly * np.poly1d([q[j], p[j]])
    return L, [M @ (p + s * q) for s in (poly - 1).roots]


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number, name, ok, seconds, detail=""):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'} {name} ({seconds:.2f} s){' ' + detail if detail else ''}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
