"""Compiled double-double and quad-double kernels.

Each function mirrors its numpy counterpart in ``kernels`` operation for
operation, so both paths give bit-identical results; the compiled ufuncs
just avoid the per-operation overhead of numpy on small arrays.
"""

from __future__ import annotations

import math

import numpy as np
from numba import guvectorize, njit

from .eft import _SPLIT_THRESH, SPLITTER

_opts = dict(cache=True, error_model="numpy")
_gu = dict(cache=True)


@njit(inline="always", **_opts)
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(inline="always", **_opts)
def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


@njit(inline="always", **_opts)
def _split(a):
    if abs(a) > _SPLIT_THRESH:
        a = a * 3.7252902984619140625e-09
        t = SPLITTER * a
        hi = t - (t - a)
        lo = a - hi
        return hi * 268435456.0, lo * 268435456.0
    t = SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


@njit(inline="always", **_opts)
def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


# ---------------------------------------------------------------------------
# double-double
# ---------------------------------------------------------------------------

@njit(**_opts)
def _dd_patch(s, e, plain):
    if not (math.isfinite(plain) and math.isfinite(s)):
        return plain, 0.0
    return s, e


@njit(**_opts)
def _dd_add(a0, a1, b0, b1):
    s, e = _two_sum(a0, b0)
    t, f = _two_sum(a1, b1)
    e = e + t
    s, e = _quick_two_sum(s, e)
    e = e + f
    s, e = _quick_two_sum(s, e)
    if math.isfinite(s):
        return s, e
    return _dd_patch(s, e, a0 + b0)


@njit(**_opts)
def _dd_mul(a0, a1, b0, b1):
    p, e = _two_prod(a0, b0)
    e = e + (a0 * b1 + a1 * b0)
    p, e = _quick_two_sum(p, e)
    if math.isfinite(p):
        return p, e
    return _dd_patch(p, e, a0 * b0)


@njit(**_opts)
def _dd_mul_d(a0, a1, b):
    p, e = _two_prod(a0, b)
    e = e + a1 * b
    p, e = _quick_two_sum(p, e)
    if math.isfinite(p):
        return p, e
    return _dd_patch(p, e, a0 * b)


@njit(**_opts)
def _dd_div(a0, a1, b0, b1):
    q1 = a0 / b0
    m0, m1 = _dd_mul_d(-b0, -b1, q1)
    r0, r1 = _dd_add(a0, a1, m0, m1)
    q2 = r0 / b0
    m0, m1 = _dd_mul_d(-b0, -b1, q2)
    r0, r1 = _dd_add(r0, r1, m0, m1)
    q3 = r0 / b0
    q1, q2 = _quick_two_sum(q1, q2)
    s, e = _dd_add(q1, q2, q3, 0.0 * q3)
    if math.isfinite(s):
        return s, e
    return _dd_patch(s, e, a0 / b0)


@njit(**_opts)
def _dd_sqrt(a0, a1):
    if a0 == 0.0:
        return 0.0, 0.0
    x = math.sqrt(a0) if a0 > 0.0 else math.nan
    p, e = _two_prod(x, x)
    d0, d1 = _dd_add(a0, a1, -p, -e)
    return _quick_two_sum(x, d0 / (2.0 * x))


@guvectorize(["void(f8,f8,f8,f8,f8[:],f8[:])"], "(),(),(),()->(),()", **_gu)
def dd_add(a0, a1, b0, b1, o0, o1):
    o0[0], o1[0] = _dd_add(a0, a1, b0, b1)


@guvectorize(["void(f8,f8,f8,f8,f8[:],f8[:])"], "(),(),(),()->(),()", **_gu)
def dd_mul(a0, a1, b0, b1, o0, o1):
    o0[0], o1[0] = _dd_mul(a0, a1, b0, b1)


@guvectorize(["void(f8,f8,f8,f8[:],f8[:])"], "(),(),()->(),()", **_gu)
def dd_mul_d(a0, a1, b, o0, o1):
    o0[0], o1[0] = _dd_mul_d(a0, a1, b)


@guvectorize(["void(f8,f8,f8,f8,f8[:],f8[:])"], "(),(),(),()->(),()", **_gu)
def dd_div(a0, a1, b0, b1, o0, o1):
    o0[0], o1[0] = _dd_div(a0, a1, b0, b1)


@guvectorize(["void(f8,f8,f8[:],f8[:])"], "(),()->(),()", **_gu)
def dd_sqrt(a0, a1, o0, o1):
    o0[0], o1[0] = _dd_sqrt(a0, a1)


# ---------------------------------------------------------------------------
# quad-double
# ---------------------------------------------------------------------------

@njit(**_opts)
def _renorm4(t, n):
    """Same cascade as ``kernels._renorm`` with ``k = 4`` on ``t[:n]``."""
    s = t[n - 1]
    for i in range(n - 2, -1, -1):
        s, t[i + 1] = _two_sum(t[i], s)
    t[0] = s
    out = np.zeros(4)
    ptr = 0
    cur = t[0]
    for i in range(1, n):
        s, e = _two_sum(cur, t[i])
        if e != 0.0 and ptr < 3:
            out[ptr] = s
            cur = e
            ptr += 1
        else:
            cur = s
    out[ptr] = cur
    for _ in range(4):
        changed = False
        for i in range(2, -1, -1):
            s, e = _two_sum(out[i], out[i + 1])
            if s != out[i] or e != out[i + 1]:
                changed = True
            out[i] = s
            out[i + 1] = e
        if not changed:
            break
    return out


@njit(**_opts)
def _qd_patch(out, plain):
    if not (math.isfinite(plain) and math.isfinite(out[0])):
        out[0] = plain
        out[1] = 0.0
        out[2] = 0.0
        out[3] = 0.0
    return out


@njit(**_opts)
def _qd_add(a, b):
    t = np.empty(8)
    t[:4] = a
    t[4:] = b
    # stable sort by decreasing magnitude, NaN last like numpy's argsort
    key = np.empty(8)
    for i in range(8):
        key[i] = -abs(t[i])
    for i in range(1, 8):
        k = key[i]
        v = t[i]
        j = i - 1
        while j >= 0 and (key[j] > k or (math.isnan(key[j]) and not math.isnan(k))):
            key[j + 1] = key[j]
            t[j + 1] = t[j]
            j -= 1
        key[j + 1] = k
        t[j + 1] = v
    return _qd_patch(_renorm4(t, 8), a[0] + b[0])


@njit(**_opts)
def _qd_mul(a, b):
    p = np.empty((4, 4))
    e = np.empty((4, 4))
    for i in range(4):
        for j in range(4 - i):
            p[i, j], e[i, j] = _two_prod(a[i], b[j])
    t = np.empty(23)
    n = 0
    t[n] = p[0, 0]
    n += 1
    for order in range(1, 4):
        for i in range(order + 1):
            t[n] = p[i, order - i]
            n += 1
        for i in range(order):
            t[n] = e[i, order - 1 - i]
            n += 1
    for i in range(1, 4):
        t[n] = a[i] * b[4 - i]
        n += 1
    for i in range(4):
        t[n] = e[i, 3 - i]
        n += 1
    return _qd_patch(_renorm4(t, n), a[0] * b[0])


@njit(**_opts)
def _qd_mul_d(a, b):
    t = np.empty(8)
    p0, e0 = _two_prod(a[0], b)
    p1, e1 = _two_prod(a[1], b)
    p2, e2 = _two_prod(a[2], b)
    p3, e3 = _two_prod(a[3], b)
    t[0] = p0
    t[1] = p1
    t[2] = e0
    t[3] = p2
    t[4] = e1
    t[5] = p3
    t[6] = e2
    t[7] = e3
    return _qd_patch(_renorm4(t, 8), a[0] * b)


@njit(**_opts)
def _qd_div(a, b):
    nb = -b
    q = np.empty(5)
    q[0] = a[0] / b[0]
    r = _qd_add(a, _qd_mul_d(nb, q[0]))
    for k in range(1, 5):
        q[k] = r[0] / b[0]
        r = _qd_add(r, _qd_mul_d(nb, q[k]))
    return _qd_patch(_renorm4(q, 5), q[0])


@njit(**_opts)
def _qd_sqrt(a):
    if a[0] == 0.0:
        return np.zeros(4)
    x = np.zeros(4)
    x[0] = math.sqrt(a[0]) if a[0] > 0.0 else math.nan
    for _ in range(2):
        resid = _qd_add(a, -_qd_mul(x, x))
        corr = _qd_div(resid, 2.0 * x)
        x = _qd_add(x, corr)
    return x


@njit(**_opts)
def _pack(a0, a1, a2, a3):
    a = np.empty(4)
    a[0] = a0
    a[1] = a1
    a[2] = a2
    a[3] = a3
    return a


_QD2 = "(),(),(),(),(),(),(),()->(),(),(),()"
_QD2_SIG = ["void(" + ",".join(["f8"] * 8 + ["f8[:]"] * 4) + ")"]


@guvectorize(_QD2_SIG, _QD2, **_gu)
def qd_add(a0, a1, a2, a3, b0, b1, b2, b3, o0, o1, o2, o3):
    r = _qd_add(_pack(a0, a1, a2, a3), _pack(b0, b1, b2, b3))
    o0[0], o1[0], o2[0], o3[0] = r[0], r[1], r[2], r[3]


@guvectorize(_QD2_SIG, _QD2, **_gu)
def qd_mul(a0, a1, a2, a3, b0, b1, b2, b3, o0, o1, o2, o3):
    r = _qd_mul(_pack(a0, a1, a2, a3), _pack(b0, b1, b2, b3))
    o0[0], o1[0], o2[0], o3[0] = r[0], r[1], r[2], r[3]


@guvectorize(_QD2_SIG, _QD2, **_gu)
def qd_div(a0, a1, a2, a3, b0, b1, b2, b3, o0, o1, o2, o3):
    r = _qd_div(_pack(a0, a1, a2, a3), _pack(b0, b1, b2, b3))
    o0[0], o1[0], o2[0], o3[0] = r[0], r[1], r[2], r[3]


@guvectorize(["void(" + ",".join(["f8"] * 5 + ["f8[:]"] * 4) + ")"],
             "(),(),(),(),()->(),(),(),()", **_gu)
def qd_mul_d(a0, a1, a2, a3, b, o0, o1, o2, o3):
    r = _qd_mul_d(_pack(a0, a1, a2, a3), b)
    o0[0], o1[0], o2[0], o3[0] = r[0], r[1], r[2], r[3]


@guvectorize(["void(" + ",".join(["f8"] * 4 + ["f8[:]"] * 4) + ")"],
             "(),(),(),()->(),(),(),()", **_gu)
def qd_sqrt(a0, a1, a2, a3, o0, o1, o2, o3):
    r = _qd_sqrt(_pack(a0, a1, a2, a3))
    o0[0], o1[0], o2[0], o3[0] = r[0], r[1], r[2], r[3]


@guvectorize(["void(" + ",".join(["f8"] * 4 + ["f8[:]"] * 4) + ")"],
             "(),(),(),()->(),(),(),()", **_gu)
def qd_renorm(a0, a1, a2, a3, o0, o1, o2, o3):
    r = _renorm4(_pack(a0, a1, a2, a3), 4)
    o0[0], o1[0], o2[0], o3[0] = r[0], r[1], r[2], r[3]


# ---------------------------------------------------------------------------
# complex products: re = ar*br + (-(ai*bi)), im = ar*bi + ai*br
# ---------------------------------------------------------------------------

@guvectorize(["void(" + ",".join(["f8"] * 8 + ["f8[:]"] * 4) + ")"],
             "(),(),(),(),(),(),(),()->(),(),(),()", **_gu)
def dd_cmul(ar0, ar1, ai0, ai1, br0, br1, bi0, bi1, r0, r1, i0, i1):
    p0, p1 = _dd_mul(ar0, ar1, br0, br1)
    q0, q1 = _dd_mul(ai0, ai1, bi0, bi1)
    r0[0], r1[0] = _dd_add(p0, p1, -q0, -q1)
    p0, p1 = _dd_mul(ar0, ar1, bi0, bi1)
    q0, q1 = _dd_mul(ai0, ai1, br0, br1)
    i0[0], i1[0] = _dd_add(p0, p1, q0, q1)


@guvectorize(["void(" + ",".join(["f8"] * 16 + ["f8[:]"] * 8) + ")"],
             ",".join(["()"] * 16) + "->" + ",".join(["()"] * 8), **_gu)
def qd_cmul(ar0, ar1, ar2, ar3, ai0, ai1, ai2, ai3, br0, br1, br2, br3, bi0, bi1, bi2, bi3,
            r0, r1, r2, r3, i0, i1, i2, i3):
    ar = _pack(ar0, ar1, ar2, ar3)
    ai = _pack(ai0, ai1, ai2, ai3)
    br = _pack(br0, br1, br2, br3)
    bi = _pack(bi0, bi1, bi2, bi3)
    re = _qd_add(_qd_mul(ar, br), -_qd_mul(ai, bi))
    im = _qd_add(_qd_mul(ar, bi), _qd_mul(ai, br))
    r0[0], r1[0], r2[0], r3[0] = re[0], re[1], re[2], re[3]
    i0[0], i1[0], i2[0], i3[0] = im[0], im[1], im[2], im[3]
