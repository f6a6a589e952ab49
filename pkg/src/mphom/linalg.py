"""Complex dense linear algebra in the three precisions.

QR uses the column-sweep modified Gram-Schmidt method: each column is
normalized in turn and immediately projected out of every remaining column.
All remaining columns are handled by one vectorized multiply per step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .multiprec import MPComplex, MPReal, Precision
from .multiprec import kernels as K
from .multiprec.arrays import _cmul, tree_sum_limbs


class LinAlgError(ArithmeticError):
    pass


class RankDeficiencyError(LinAlgError):
    def __init__(self, column: int, norm: float, threshold: float):
        super().__init__(f"column {column} is numerically dependent "
                         f"(norm {norm:.3e} below {threshold:.3e})")
        self.column = column


class SingularMatrixError(LinAlgError):
    def __init__(self, row: int):
        super().__init__(f"diagonal entry {row} of the triangular factor is zero")
        self.row = row


@dataclass(frozen=True)
class QRFactors:
    Q: MPComplex        # (N, n), orthonormal columns
    R: MPComplex        # (n, n), upper triangular
    diag: MPReal        # (n,), the real positive diagonal of R


def rank_threshold(precision) -> float:
    return float(np.sqrt(Precision.parse(precision).eps))


def _conj(limbs):
    sign = np.array([1.0, -1.0]).reshape((2,) + (1,) * (limbs[0].ndim - 1))
    return tuple(x * sign for x in limbs)


def _norm(a):
    sq = K.mul(a, a)
    return K.sqrt(tree_sum_limbs(K.add(tuple(x[0] for x in sq), tuple(x[1] for x in sq)), 0))


def mgs_qr(A: MPComplex, reorthogonalize: bool = True) -> QRFactors:
    """Column-sweep modified Gram-Schmidt, ``A = QR`` with real positive ``diag(R)``.

    A column whose norm shrinks below half its original value during the
    sweep is projected a second time, which keeps ``Q`` orthonormal to
    working precision independently of the condition number.
    """
    if A.ndim != 2:
        raise ValueError("mgs_qr expects a matrix")
    N, n = A.shape
    if not N >= n >= 1:
        raise ValueError(f"mgs_qr needs rows >= cols >= 1, got {N}x{n}")
    nl = len(A.limbs)
    work = tuple(np.array(x) for x in A._full())
    Q = tuple(np.zeros((2, N, n)) for _ in range(nl))
    R = tuple(np.zeros((2, n, n)) for _ in range(nl))
    diag = tuple(np.zeros(n) for _ in range(nl))
    col_norms = np.sqrt(np.sum(work[0][0] ** 2 + work[0][1] ** 2, axis=0))
    tol = rank_threshold(nl)
    for k in range(n):
        a = tuple(x[:, :, k] for x in work)
        nrm = _norm(a)
        if k and reorthogonalize and float(nrm[0]) < 0.5 * col_norms[k]:
            # heavy cancellation: project once more against the finished columns
            qk = tuple(x[:, :, :k] for x in Q)
            s = tree_sum_limbs(_cmul(_conj(qk), tuple(x[:, :, None] for x in a)), 1)
            a = K.sub(a, tree_sum_limbs(_cmul(qk, tuple(x[:, None, :] for x in s)), 2))
            r_old = tuple(x[:, :k, k] for x in R)
            for dst, src in zip(R, K.add(r_old, s)):
                dst[:, :k, k] = src
            nrm = _norm(a)
        ref = float(col_norms[:k + 1].max())
        if not float(nrm[0]) > tol * ref:
            raise RankDeficiencyError(k, float(nrm[0]), tol * ref)
        q = K.div(a, tuple(np.broadcast_to(x, (1, 1)) for x in nrm))
        for dst, src in zip(Q, q):
            dst[:, :, k] = src
        for dst, src in zip(diag, nrm):
            dst[k] = src
        R[0][0, k, k] = float(nrm[0])
        for dst, src in zip(R[1:], nrm[1:]):
            dst[0, k, k] = src
        if k + 1 == n:
            break
        rest = tuple(x[:, :, k + 1:] for x in work)
        qc = tuple(x[:, :, None] for x in _conj(q))
        r = tree_sum_limbs(_cmul(qc, rest), 1)            # (2, n-k-1)
        for dst, src in zip(R, r):
            dst[:, k, k + 1:] = src
        proj = _cmul(tuple(x[:, :, None] for x in q), tuple(x[:, None, :] for x in r))
        upd = K.sub(rest, proj)
        for dst, src in zip(work, upd):
            dst[:, :, k + 1:] = src
    return QRFactors(MPComplex(Q), MPComplex(R), MPReal(diag))


def back_substitute(R: MPComplex, y: MPComplex, diag: MPReal | None = None) -> MPComplex:
    """Solve ``R x = y`` for upper triangular ``R``.

    With ``diag`` given, the diagonal is taken as real (the QR case) and
    divisions are real; otherwise complex division is used.
    """
    n = R.shape[0]
    if R.shape != (n, n) or y.shape != (n,):
        raise ValueError(f"shapes {R.shape} and {y.shape} do not match")
    Rl = R._full()
    lead = np.hypot(Rl[0][0].diagonal(), Rl[0][1].diagonal())
    tol = rank_threshold(len(R.limbs)) * (lead.max() if n else 0.0)
    for i in range(n):
        if lead[i] == 0.0 or lead[i] <= tol:
            raise SingularMatrixError(i)
    rhs = tuple(np.array(x) for x in y._full())
    x = tuple(np.zeros((2, n)) for _ in R.limbs)
    for j in range(n - 1, -1, -1):
        num = tuple(v[:, j:j + 1] for v in rhs)
        if diag is not None:
            xj = K.div(num, tuple(np.broadcast_to(d[j], (1, 1)) for d in diag.limbs))
        else:
            from .multiprec.arrays import _cdiv
            xj = _cdiv(num, tuple(r[:, j, j:j + 1] for r in Rl))
        for dst, src in zip(x, xj):
            dst[:, j] = src[:, 0]
        if j:
            upd = K.sub(tuple(v[:, :j] for v in rhs), _cmul(tuple(r[:, :j, j] for r in Rl), xj))
            for dst, src in zip(rhs, upd):
                dst[:, :j] = src
    return MPComplex(x)


def conj_transpose_apply(Q: MPComplex, b: MPComplex) -> MPComplex:
    """``Q^H b`` with a fixed pairwise reduction over rows."""
    qc = _conj(Q._full())
    bl = tuple(x[:, :, None] for x in b._full())
    return MPComplex(tree_sum_limbs(_cmul(qc, bl), 1))


def matvec(A: MPComplex, x: MPComplex) -> MPComplex:
    al = A._full()
    xl = tuple(v[:, None, :] for v in x._full())
    return MPComplex(tree_sum_limbs(_cmul(al, xl), 2))


def least_squares_solve(A: MPComplex, b: MPComplex) -> MPComplex:
    """Minimize ``||A x - b||_2`` through ``R x = Q^H b``."""
    if b.shape != (A.shape[0],):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({A.shape[0]},)")
    qr = mgs_qr(A)
    return back_substitute(qr.R, conj_transpose_apply(qr.Q, b), qr.diag)


def max_modulus(v) -> float:
    """Largest ``|v_i|`` after rounding every component to a plain double."""
    if isinstance(v, MPComplex):
        z = v.to_complex()
    else:
        z = np.asarray(v, dtype=np.complex128)
    z = np.asarray(z).reshape(-1)
    if z.size == 0:
        return 0.0
    return float(np.max(np.hypot(z.real, z.imag)))
