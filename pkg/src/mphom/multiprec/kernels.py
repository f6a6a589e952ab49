"""Vectorized double-double and quad-double kernels.

A real number in precision ``L`` is a tuple of ``L`` binary64 limbs (plain
floats or broadcast-compatible float64 arrays), largest magnitude first.
The double-double formulas follow the QD library.  Quad-double results are
produced by collecting every partial term that matters into a list ordered
by decreasing magnitude and compressing that list with an error-free
cascade, which keeps the addition accurate even under cancellation.
"""

from __future__ import annotations

import numpy as np

from .eft import quick_two_sum, two_prod, two_sum


CANONICAL_SWEEPS = 4


def _arr(x):
    return np.asarray(x, dtype=np.float64)


def _renorm(terms, k):
    """Compress an expansion given largest-first into ``k`` limbs.

    A bottom-up two_sum cascade leaves the rounded total in front, a
    top-down pass then moves to the next output limb only when the running
    error is nonzero.  Terms past the last limb are folded into it.
    """
    t = [_arr(x) for x in terms]
    s = t[-1]
    for i in range(len(t) - 2, -1, -1):
        s, t[i + 1] = two_sum(t[i], s)
    t[0] = s

    shape = np.broadcast_shapes(*(x.shape for x in t))
    zero = np.zeros(shape)
    slots = [zero] * k
    ptr = np.zeros(shape, dtype=np.int64)
    cur = t[0] + zero
    for x in t[1:]:
        s, e = two_sum(cur, x)
        adv = (e != 0.0) & (ptr < k - 1)
        for j in range(k - 1):
            slots[j] = np.where(adv & (ptr == j), s, slots[j])
        cur = np.where(adv, e, s)
        ptr = ptr + adv
    for j in range(k):
        slots[j] = np.where(ptr == j, cur, slots[j])
    return _canonical(slots)


def _canonical(c):
    """Sweep pairs bottom-up until each limb is the rounded sum of itself and the rest."""
    c = list(c)
    for _ in range(CANONICAL_SWEEPS):
        old = list(c)
        for i in range(len(c) - 2, -1, -1):
            c[i], c[i + 1] = two_sum(c[i], c[i + 1])
        if all(np.array_equal(x, y, equal_nan=True) for x, y in zip(c, old)):
            break
    return tuple(c)


def _patch_nonfinite(res, plain):
    """IEEE propagation: a non-finite result keeps the plain double result."""
    head = res[0]
    if np.isfinite(head).all() if isinstance(head, np.ndarray) else np.isfinite(head):
        return res
    plain = _arr(plain)
    bad = ~np.isfinite(plain) | ~np.isfinite(res[0])
    out = [np.where(bad, plain, res[0])]
    out.extend(np.where(bad, 0.0, x) for x in res[1:])
    return tuple(out)


# ---------------------------------------------------------------------------
# double-double
# ---------------------------------------------------------------------------

def dd_add(a, b):
    s, e = two_sum(a[0], b[0])
    t, f = two_sum(a[1], b[1])
    e = e + t
    s, e = quick_two_sum(s, e)
    e = e + f
    s, e = quick_two_sum(s, e)
    return _patch_nonfinite((s, e), a[0] + b[0])


def dd_mul(a, b):
    p, e = two_prod(a[0], b[0], use_fma=False)
    e = e + (a[0] * b[1] + a[1] * b[0])
    p, e = quick_two_sum(p, e)
    return _patch_nonfinite((p, e), a[0] * b[0])


def dd_mul_d(a, b):
    p, e = two_prod(a[0], b, use_fma=False)
    e = e + a[1] * b
    p, e = quick_two_sum(p, e)
    return _patch_nonfinite((p, e), a[0] * b)


def dd_div(a, b):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        q1 = a[0] / b[0]
        r = dd_add(a, dd_mul_d((-b[0], -b[1]), q1))
        q2 = r[0] / b[0]
        r = dd_add(r, dd_mul_d((-b[0], -b[1]), q2))
        q3 = r[0] / b[0]
        q1, q2 = quick_two_sum(q1, q2)
        res = dd_add((q1, q2), (q3, 0.0 * q3))
        return _patch_nonfinite(res, a[0] / b[0])


def dd_sqrt(a):
    a0 = _arr(a[0])
    zero = a0 == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.sqrt(a0)
        sq = two_prod(x, x, use_fma=False)
        diff = dd_add(a, (-sq[0], -sq[1]))
        hi, lo = quick_two_sum(x, diff[0] / (2.0 * x))
    return (np.where(zero, 0.0, hi), np.where(zero, 0.0, lo))


def dd_renorm(a):
    return quick_two_sum(a[0], a[1])


# ---------------------------------------------------------------------------
# quad-double
# ---------------------------------------------------------------------------

def qd_add(a, b):
    stacked = np.stack(np.broadcast_arrays(*(_arr(x) for x in (*a, *b))))
    order = np.argsort(-np.abs(stacked), axis=0, kind="stable")
    merged = np.take_along_axis(stacked, order, axis=0)
    res = _renorm(list(merged), 4)
    return _patch_nonfinite(res, a[0] + b[0])


def qd_mul(a, b):
    p = {}
    e = {}
    for i in range(4):
        for j in range(4 - i):
            p[i, j], e[i, j] = two_prod(a[i], b[j], use_fma=False)
    terms = [p[0, 0]]
    for order in (1, 2, 3):
        terms.extend(p[i, order - i] for i in range(order + 1))
        terms.extend(e[i, order - 1 - i] for i in range(order))
    terms.extend(a[i] * b[4 - i] for i in (1, 2, 3))
    terms.extend(e[i, 3 - i] for i in range(4))
    return _patch_nonfinite(_renorm(terms, 4), a[0] * b[0])


def qd_mul_d(a, b):
    p0, e0 = two_prod(a[0], b, use_fma=False)
    p1, e1 = two_prod(a[1], b, use_fma=False)
    p2, e2 = two_prod(a[2], b, use_fma=False)
    p3, e3 = two_prod(a[3], b, use_fma=False)
    return _patch_nonfinite(_renorm([p0, p1, e0, p2, e1, p3, e2, e3], 4), a[0] * b)


def qd_div(a, b):
    nb = tuple(-x for x in b)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        q = [a[0] / b[0]]
        r = qd_add(a, qd_mul_d(nb, q[0]))
        for _ in range(4):
            q.append(r[0] / b[0])
            r = qd_add(r, qd_mul_d(nb, q[-1]))
        res = _renorm(q, 4)
        return _patch_nonfinite(res, q[0])


def qd_sqrt(a):
    a0 = _arr(a[0])
    zero = a0 == 0.0
    seed = np.sqrt(np.where(zero, 1.0, a0))
    x = (seed, 0.0 * seed, 0.0 * seed, 0.0 * seed)
    for _ in range(2):
        resid = qd_add(a, tuple(-v for v in qd_mul(x, x)))
        corr = qd_div(resid, tuple(2.0 * v for v in x))
        x = qd_add(x, corr)
    return tuple(np.where(zero, 0.0, v) for v in x)


def qd_renorm(a):
    return _renorm(list(a), 4)


# ---------------------------------------------------------------------------
# dispatch on limb count
# ---------------------------------------------------------------------------

_BACKENDS = ("compiled", "numpy")
_backend = "compiled"


def set_backend(name: str) -> str:
    """Select ``"compiled"`` (numba ufuncs) or ``"numpy"``; returns the previous one.

    Both backends evaluate the same formulas in the same order and agree
    bit for bit.
    """
    global _backend
    if name not in _BACKENDS:
        raise ValueError(f"backend must be one of {_BACKENDS}, got {name!r}")
    previous, _backend = _backend, name
    return previous


def get_backend() -> str:
    return _backend


def _compiled():
    return _backend == "compiled"


def add(a, b):
    n = len(a)
    if n == 1:
        return (a[0] + b[0],)
    if _compiled():
        return (_jit.dd_add if n == 2 else _jit.qd_add)(*a, *b)
    if n == 2:
        return dd_add(a, b)
    return qd_add(a, b)


def neg(a):
    return tuple(-x for x in a)


def sub(a, b):
    return add(a, neg(b))


def mul(a, b):
    n = len(a)
    if n == 1:
        return (a[0] * b[0],)
    if _compiled():
        return (_jit.dd_mul if n == 2 else _jit.qd_mul)(*a, *b)
    if n == 2:
        return dd_mul(a, b)
    return qd_mul(a, b)


def mul_d(a, b):
    """Multiply by a plain double ``b``."""
    n = len(a)
    if n == 1:
        return (a[0] * b,)
    if _compiled():
        return (_jit.dd_mul_d if n == 2 else _jit.qd_mul_d)(*a, b)
    if n == 2:
        return dd_mul_d(a, b)
    return qd_mul_d(a, b)


def div(a, b):
    n = len(a)
    if n == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            return (_arr(a[0]) / b[0],)
    if _compiled():
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return (_jit.dd_div if n == 2 else _jit.qd_div)(*a, *b)
    if n == 2:
        return dd_div(a, b)
    return qd_div(a, b)


def sqrt(a):
    if np.any(_arr(a[0]) < 0.0):
        raise ValueError("square root of a negative number")
    n = len(a)
    if n == 1:
        return (np.sqrt(_arr(a[0])),)
    if _compiled():
        return (_jit.dd_sqrt if n == 2 else _jit.qd_sqrt)(*a)
    if n == 2:
        return dd_sqrt(a)
    return qd_sqrt(a)


def renormalize(a):
    n = len(a)
    if n == 1:
        return (a[0],)
    if n == 2:
        return dd_renorm(a)
    if _compiled():
        return _jit.qd_renorm(*a)
    return qd_renorm(a)


from . import _jit  # noqa: E402  (the compiled module imports eft only)
