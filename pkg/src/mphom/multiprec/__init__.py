"""Software double-double and quad-double arithmetic, real and complex."""

from __future__ import annotations

import numpy as np

from . import kernels
from .arrays import (MPComplex, MPReal, Precision, concatenate, stack, tree_sum_limbs,
                     where)
from .eft import quick_two_sum, split, two_prod, two_sum

__all__ = [
    "MPComplex", "MPReal", "Precision", "complex_arith", "concatenate", "dd_arith",
    "mp_sqrt", "qd_arith", "quick_two_sum", "renormalize", "split", "stack",
    "tree_sum_limbs", "two_prod", "two_sum", "where",
]

_OPS = {"+": "__add__", "-": "__sub__", "*": "__mul__", "/": "__truediv__"}


def _as_real(x, precision: Precision) -> MPReal:
    if isinstance(x, MPReal):
        return x.with_precision(precision)
    if isinstance(x, (tuple, list)):
        return MPReal.from_limbs([float(v) for v in x], precision)
    return MPReal.from_float(x, precision)


def _real_arith(op: str, a, b, precision: Precision) -> MPReal:
    try:
        method = _OPS[op.replace("×", "*").replace("÷", "/").replace("−", "-")]
    except KeyError:
        raise ValueError(f"unsupported operation {op!r}") from None
    return getattr(_as_real(a, precision), method)(_as_real(b, precision))


def dd_arith(op: str, a, b) -> MPReal:
    """Apply ``op`` in ``{+, -, *, /}`` to double-doubles (MPReal or ``(hi, lo)``)."""
    return _real_arith(op, a, b, Precision.DD)


def qd_arith(op: str, a, b) -> MPReal:
    """Apply ``op`` in ``{+, -, *, /}`` to quad-doubles (MPReal or 4-tuples)."""
    return _real_arith(op, a, b, Precision.QD)


def mp_sqrt(a, mode=Precision.D) -> MPReal:
    """Square root in the given precision; raises ``ValueError`` for negative input."""
    return _as_real(a, Precision.parse(mode)).sqrt()


def renormalize(x):
    """Renormalize the limbs of an MPReal or MPComplex."""
    return x.renormalize()


def complex_arith(op: str, a: MPComplex, b: MPComplex | None = None):
    """Complex ``+ - * /``, plus unary ``conj`` and ``modulus``."""
    if op == "conj":
        return a.conj()
    if op in ("modulus", "abs"):
        return a.modulus()
    if b is None:
        raise ValueError(f"operation {op!r} needs two operands")
    method = _OPS.get(op.replace("×", "*").replace("÷", "/").replace("−", "-"))
    if method is None:
        raise ValueError(f"unsupported operation {op!r}")
    return getattr(a, method)(b)

