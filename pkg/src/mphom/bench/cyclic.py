"""Cyclic n-roots: the system, the degrees of its positive-dimensional sets,
random linear slices, and the explicitly known cyclic 4-roots witness points."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..multiprec import MPComplex, Precision, stack
from ..polysys import ONE, Coefficient, PolynomialSystem, Term, random_unit_complex


def cyclic_system(n: int) -> PolynomialSystem:
    if n < 2:
        raise ValueError(f"cyclic n-roots needs n >= 2, got {n}")
    polys = []
    for i in range(1, n):
        polys.append([Term(ONE, tuple(sorted(((j + k) % n, 1) for k in range(i))))
                      for j in range(n)])
    polys.append([Term(ONE, tuple((j, 1) for j in range(n))),
                  Term(Coefficient.from_complex(-1.0), ())])
    return PolynomialSystem.build(n, polys)


@dataclass(frozen=True)
class CyclicDegreeFact:
    n: int
    m: int
    ell: int
    dimension: int
    degree: int


def _squarefree(k: int) -> bool:
    d = 2
    while d * d <= k:
        if k % (d * d) == 0:
            return False
        d += 1
    return True


def cyclic_degree(n: int) -> CyclicDegreeFact | None:
    """Dimension and degree of the set for ``n = ell * m^2``, ``ell`` squarefree."""
    if n < 4:
        raise ValueError(f"cyclic_degree needs n >= 4, got {n}")
    m = math.isqrt(n)
    while m >= 2 and n % (m * m):
        m -= 1
    if m < 2:
        return None
    ell = n // (m * m)
    assert _squarefree(ell)
    return CyclicDegreeFact(n, m, ell, m - 1, m)


# ---------------------------------------------------------------------------
# linear slices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearSlice:
    """``dim`` affine equations ``sum_j c[i][j] x_j + c[i][n] = 0``."""

    rows: tuple[tuple[Coefficient, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def n_variables(self) -> int:
        return len(self.rows[0]) - 1 if self.rows else 0

    @classmethod
    def random(cls, n: int, dim: int, rng) -> LinearSlice:
        rng = np.random.default_rng(rng)
        return cls(tuple(tuple(random_unit_complex(rng) for _ in range(n + 1))
                         for _ in range(dim)))

    @classmethod
    def from_complex(cls, rows) -> LinearSlice:
        return cls(tuple(tuple(Coefficient.from_complex(c) for c in row) for row in rows))

    def polynomials(self) -> list[list[Term]]:
        n = self.n_variables
        return [[Term(row[j], ((j, 1),)) for j in range(n)] + [Term(row[n], ())]
                for row in self.rows]

    def as_system(self) -> PolynomialSystem:
        return PolynomialSystem.build(self.n_variables, self.polynomials())

    def to_json(self) -> list:
        return [[[list(_hex(c.re)), list(_hex(c.im))] for c in row] for row in self.rows]

    @classmethod
    def from_json(cls, data) -> LinearSlice:
        return cls(tuple(tuple(Coefficient.from_limbs([float.fromhex(h) for h in re],
                                                       [float.fromhex(h) for h in im])
                               for re, im in row) for row in data))


def _hex(limbs):
    return [float(x).hex() for x in limbs]


def augment_with_linear(f: PolynomialSystem, dim: int, seed=None,
                        slice_: LinearSlice | None = None) -> PolynomialSystem:
    """Append ``dim`` random affine equations (or the given slice) to ``f``."""
    if slice_ is None:
        if dim < 0:
            raise ValueError("dim must be non-negative")
        if dim == 0:
            return f
        slice_ = LinearSlice.random(f.n_variables, dim, seed)
    return f.extend(slice_.polynomials())


# ---------------------------------------------------------------------------
# cyclic 4-roots witness points
# ---------------------------------------------------------------------------

class DegenerateSliceError(ValueError):
    pass


def cyclic4_family_point(a, family: int, precision=Precision.D) -> MPComplex:
    """``(a, 1/a, -a, -1/a)`` for family 1, ``(a, -1/a, -a, 1/a)`` for family 2."""
    if not isinstance(a, MPComplex):
        a = MPComplex.from_complex(a, precision)
    inv = a._coerce(1.0) / a
    if family == 1:
        return stack([a, inv, -a, -inv])
    if family == 2:
        return stack([a, -inv, -a, inv])
    raise ValueError(f"family must be 1 or 2, got {family}")


def cyclic4_witness(L: LinearSlice, family: int = 1, precision=Precision.D,
                    rel_tol: float = 1e-12) -> list[MPComplex]:
    """The two points where a generic affine slice meets family 1 or 2."""
    if L.dim != 1 or L.n_variables != 4:
        raise ValueError("cyclic4_witness needs a single affine equation in 4 variables")
    precision = Precision.parse(precision)
    c = [coef.to_mp(precision) for coef in L.rows[0]]
    qa = c[0] - c[2]
    qb = c[4]
    qc = c[1] - c[3] if family == 1 else c[3] - c[1]
    if family not in (1, 2):
        raise ValueError(f"family must be 1 or 2, got {family}")
    scale = max(abs(complex(coef)) for coef in L.rows[0])
    if abs(qa.to_complex()) <= rel_tol * scale or abs(qc.to_complex()) <= rel_tol * scale:
        raise DegenerateSliceError("slice is degenerate for this family; resample L")
    disc = (qb * qb - qa * qc * 4.0).sqrt()
    # pick the sign that avoids cancellation, then use the product of the roots
    plus, minus = qb + disc, qb - disc
    big = plus if abs(plus.to_complex()) >= abs(minus.to_complex()) else minus
    q = big * -0.5
    roots = [q / qa, qc / q]
    return [cyclic4_family_point(a, family) for a in roots]
