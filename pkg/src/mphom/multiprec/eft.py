"""Error-free transformations on binary64 values.

Every function here accepts Python floats or numpy float64 arrays and
broadcasts like ordinary arithmetic.  Results are exact under
round-to-nearest-even, which is checked once at import time.
"""

from __future__ import annotations

import math

import numpy as np

SPLITTER = 134217729.0  # 2**27 + 1
_SPLIT_THRESH = 6.69692879491417e299  # 2**996, above this the split overflows
_HAS_FMA = hasattr(math, "fma")


def _check_rounding_mode() -> None:
    tiny = 2.0**-53
    # ties-to-even drops the half ulp; anything above it must round up
    if not (1.0 + tiny == 1.0 and 1.0 + (tiny + 2.0**-105) > 1.0 and -1.0 - tiny == -1.0):
        raise RuntimeError("binary64 arithmetic is not round-to-nearest-even")


_check_rounding_mode()


def two_sum(a, b):
    """Return ``(s, e)`` with ``s = fl(a + b)`` and ``s + e = a + b`` exactly."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def quick_two_sum(a, b):
    """Like :func:`two_sum` but requires ``|a| >= |b|`` (or ``a == 0``)."""
    s = a + b
    e = b - (s - a)
    return s, e


def two_diff(a, b):
    s = a - b
    bb = s - a
    e = (a - (s - bb)) - (b + bb)
    return s, e


def split(a):
    """Dekker split of ``a`` into two halves of at most 26 significant bits."""
    if isinstance(a, np.ndarray):
        big = np.abs(a) > _SPLIT_THRESH
        if big.any():
            a = np.where(big, a * 3.7252902984619140625e-09, a)  # 2**-28
            t = SPLITTER * a
            hi = t - (t - a)
            lo = a - hi
            return (np.where(big, hi * 268435456.0, hi),
                    np.where(big, lo * 268435456.0, lo))
        t = SPLITTER * a
        hi = t - (t - a)
        return hi, a - hi
    if abs(a) > _SPLIT_THRESH:
        a *= 3.7252902984619140625e-09
        t = SPLITTER * a
        hi = t - (t - a)
        lo = a - hi
        return hi * 268435456.0, lo * 268435456.0
    t = SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod_dekker(a, b):
    p = a * b
    ah, al = split(a)
    bh, bl = split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def two_prod(a, b, use_fma: bool | None = None):
    """Return ``(p, e)`` with ``p = fl(a * b)`` and ``p + e = a * b`` exactly.

    A fused multiply-add is used for scalar operands when the interpreter
    provides ``math.fma`` (Python 3.13+); arrays and older interpreters use
    the Dekker split.  ``use_fma`` forces the choice.
    """
    if use_fma is None:
        use_fma = _HAS_FMA and not isinstance(a, np.ndarray) and not isinstance(b, np.ndarray)
    if use_fma:
        if not _HAS_FMA:
            raise RuntimeError("math.fma is not available on this interpreter")
        p = a * b
        return p, math.fma(a, b, -p)
    return two_prod_dekker(a, b)


def two_sqr(a):
    p = a * a
    ah, al = split(a)
    e = ((ah * ah - p) + 2.0 * ah * al) + al * al
    return p, e
