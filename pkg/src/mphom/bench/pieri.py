"""Pieri homotopies: minor expansions of ``det([A | X]) = 0`` and the
bootstrap that introduces one unknown of ``X`` per stage."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import mpmath
import numpy as np

from ..evaldiff import SystemEvaluator, compile_plan
from ..linalg import max_modulus
from ..multiprec import MPComplex, Precision, concatenate
from ..newton import NewtonParams, newton_correct
from ..polysys import (Coefficient, HomotopyParameters, PolynomialSystem, Term,
                       make_homotopy)
from ..tracker import StepControlParams, track_path

ONE_ENTRY = "one"
ZERO_ENTRY = "zero"


class PieriError(RuntimeError):
    def __init__(self, message: str, stage: int | None = None):
        super().__init__(message if stage is None else f"stage {stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class PieriPattern:
    """Localization pattern of the ``n x p`` matrix ``X``.

    Column ``j`` has its pivot one in row ``j``; the unknowns of that column
    sit in rows ``j+1 .. j+m``.  ``events`` lists the ``(row, col)`` places
    in the order the unknowns are introduced; stage ``k`` uses the first
    ``k`` of them, and variable ``i`` is the ``i``-th event.
    """

    n: int
    m: int
    p: int
    events: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.m + self.p != self.n or self.m < 1 or self.p < 1:
            raise ValueError(f"need m + p = n with m, p >= 1, got n={self.n}, m={self.m}, "
                             f"p={self.p}")
        allowed = {(j + i, j) for j in range(self.p) for i in range(1, self.m + 1)}
        if len(set(self.events)) != len(self.events) or not set(self.events) <= allowed:
            raise ValueError("events must be distinct places below the pivots")

    @classmethod
    def standard(cls, n: int, m: int, p: int) -> PieriPattern:
        """Rightmost column first, top to bottom, then move one column left."""
        if m + p != n:
            raise ValueError(f"m + p must equal n, got {m} + {p} != {n}")
        events = tuple((j + i, j) for j in range(p - 1, -1, -1) for i in range(1, m + 1))
        return cls(n, m, p, events)

    @property
    def n_stages(self) -> int:
        return len(self.events)

    def entries(self, stage: int):
        """``n x p`` nested list of ``"one"``, ``"zero"`` or a variable index."""
        if not 0 <= stage <= self.n_stages:
            raise ValueError(f"stage must lie in 0..{self.n_stages}")
        grid = [[ZERO_ENTRY] * self.p for _ in range(self.n)]
        for j in range(self.p):
            grid[j][j] = ONE_ENTRY
        for var, (r, c) in enumerate(self.events[:stage]):
            grid[r][c] = var
        return grid

    def variable_names(self, stage: int) -> tuple[str, ...]:
        return tuple(f"x{r + 1}_{c + 1}" for r, c in self.events[:stage])

    def numeric(self, stage: int, values) -> np.ndarray:
        """The matrix ``X`` with the stage variables set to ``values``."""
        X = np.zeros((self.n, self.p), dtype=complex)
        for r, row in enumerate(self.entries(stage)):
            for c, e in enumerate(row):
                X[r, c] = 1.0 if e == ONE_ENTRY else 0.0 if e == ZERO_ENTRY else values[e]
        return X


# ---------------------------------------------------------------------------
# minor expansion
# ---------------------------------------------------------------------------

def _perm_sign(perm) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def _x_minor(grid, rows) -> dict:
    """Leibniz expansion of the ``p x p`` minor of the pattern on ``rows``."""
    p = len(grid[0])
    out: dict = {}
    for perm in itertools.permutations(range(p)):
        support = []
        for c, ri in enumerate(perm):
            e = grid[rows[ri]][c]
            if e == ZERO_ENTRY:
                break
            if e != ONE_ENTRY:
                support.append(e)
        else:
            key = tuple(sorted(support))
            out[key] = out.get(key, 0) + _perm_sign(perm)
    return {k: v for k, v in out.items() if v}


def _complement_sign(rows, n, m) -> int:
    # Laplace expansion along the X columns m..n-1 of [A | X]
    return -1 if (sum(r + 1 for r in rows) + sum(c + 1 for c in range(m, n))) % 2 else 1


def minor_expand(A, pattern: PieriPattern, stage: int, workprec: int = 320):
    """Fully expanded ``det([A | X])`` as ``{support: mpc}``.

    ``support`` is a sorted tuple of variable indices of the stage.
    Each ``p x p`` minor of ``X`` is multiplied by the complementary
    ``m x m`` minor of ``A`` with the Laplace sign.
    """
    n, m = pattern.n, pattern.m
    A = _as_mp_matrix(A)
    if A.rows != n or A.cols != m:
        raise ValueError(f"A must be {n}x{m}, got {A.rows}x{A.cols}")
    grid = pattern.entries(stage)
    poly: dict = {}
    with mpmath.workprec(workprec):
        for rows in itertools.combinations(range(n), pattern.p):
            xm = _x_minor(grid, rows)
            if not xm:
                continue
            rest = [r for r in range(n) if r not in rows]
            am = _mp_det([[A[r, c] for c in range(m)] for r in rest])
            sign = _complement_sign(rows, n, m)
            for support, k in xm.items():
                poly[support] = poly.get(support, mpmath.mpc(0)) + sign * k * am
    return {s: c for s, c in poly.items() if c != 0}


def _mp_det(rows):
    """Gaussian elimination with partial pivoting; exact zero pivots give 0."""
    a = [list(r) for r in rows]
    k = len(a)
    det = mpmath.mpc(1)
    for j in range(k):
        piv = max(range(j, k), key=lambda i: abs(a[i][j]))
        if a[piv][j] == 0:
            return mpmath.mpc(0)
        if piv != j:
            a[j], a[piv] = a[piv], a[j]
            det = -det
        det *= a[j][j]
        for i in range(j + 1, k):
            f = a[i][j] / a[j][j]
            for c in range(j + 1, k):
                a[i][c] -= f * a[j][c]
    return det


def _as_mp_matrix(A):
    if isinstance(A, mpmath.matrix):
        return A
    return mpmath.matrix([[mpmath.mpmathify(complex(v)) if not isinstance(v, mpmath.mpc)
                           else v for v in row] for row in np.asarray(A, dtype=object)])


def _to_terms(poly: dict) -> list[Term]:
    return [Term(Coefficient.from_mpc(c), tuple((v, 1) for v in s)) for s, c in poly.items()]


def _coef_norm(poly: dict):
    return mpmath.sqrt(mpmath.fsum(abs(c) ** 2 for c in poly.values()))


def minor_polynomial(A, pattern: PieriPattern, stage: int) -> PolynomialSystem:
    poly = minor_expand(A, pattern, stage)
    return PolynomialSystem.build(stage, [_to_terms(poly)], pattern.variable_names(stage))


def evaluate_expansion(poly: dict, values, workprec: int = 320):
    with mpmath.workprec(workprec):
        acc = mpmath.mpc(0)
        for support, c in poly.items():
            term = c
            for v in support:
                term *= values[v]
            acc += term
    return acc


# ---------------------------------------------------------------------------
# special matrix
# ---------------------------------------------------------------------------

def _candidate_groups(n: int, m: int):
    """Standard-basis column sets, then sets of sums of two basis vectors."""
    basis = [tuple(1.0 if i == r else 0.0 for i in range(n)) for r in range(n)]
    yield ([basis[r] for r in cols] for cols in itertools.combinations(range(n), m))
    sums = [tuple(a + b for a, b in zip(basis[r], basis[s]))
            for r, s in itertools.combinations(range(n), 2)]
    yield ([sums[k] for k in cols] for cols in itertools.combinations(range(len(sums)), m))


def choose_special_matrix(pattern: PieriPattern, stage: int, new_var: int | None = None,
                          start_values=None, rel_tol: float = 1e-8,
                          strategy: str = "first") -> np.ndarray:
    """An ``n x m`` matrix ``S`` with ``det([S | X])`` zero at the start point.

    The start point sets the newest variable to zero.  The expansion must
    vanish identically once that variable is zero, and its derivative in
    the newest variable must be nonzero at the start point.  Candidates are
    scanned in a fixed order; ``strategy="first"`` takes the first that
    qualifies, ``"largest"`` the one with the largest derivative.
    """
    if strategy not in ("first", "largest"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if new_var is None:
        new_var = stage - 1
    if not 1 <= stage <= pattern.n_stages or new_var != stage - 1:
        raise PieriError(f"variable {new_var} is not the newest variable of stage {stage}",
                         stage)
    start = list(start_values or []) + [0.0] * (stage - len(start_values or []))
    start[new_var] = 0.0
    point = [mpmath.mpc(v) for v in start]
    scale = max([1.0] + [abs(complex(v)) for v in start])
    n, m = pattern.n, pattern.m
    for group in _candidate_groups(n, m):
        best, best_d = None, 0.0
        for cols in group:
            S = np.array(cols, dtype=float).T
            poly = minor_expand(S, pattern, stage)
            if not poly or any(new_var not in s for s in poly):
                continue
            deriv = {tuple(v for v in s if v != new_var): c for s, c in poly.items()}
            d = abs(complex(evaluate_expansion(deriv, point)))
            if d > rel_tol * scale and d > best_d:
                best, best_d = S, d
                if strategy == "first":
                    return best
        if best is not None:
            return best
    raise PieriError("no qualifying special matrix found", stage)


# ---------------------------------------------------------------------------
# the bootstrap sequence
# ---------------------------------------------------------------------------

@dataclass
class StageLog:
    stage: int
    success: bool
    steps: int
    accepted: int
    seconds: float
    residual: float


@dataclass
class PieriResult:
    pattern: PieriPattern
    matrices: list[np.ndarray]          # A^(1) .. A^(mp), complex n x m
    point: MPComplex
    system: PolynomialSystem            # the mp minor equations in all variables
    residual: float
    stages: list[StageLog] = field(default_factory=list)


def random_matrices(n: int, m: int, count: int, rng) -> list[np.ndarray]:
    rng = np.random.default_rng(rng)
    return [rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m)) for _ in range(count)]


def stage_system(matrices, pattern: PieriPattern, stage: int) -> PolynomialSystem:
    polys = [_to_terms(minor_expand(A, pattern, stage)) for A in matrices]
    return PolynomialSystem.build(stage, polys, pattern.variable_names(stage))


def polish(system: PolynomialSystem, x: MPComplex, iterations: int = 3):
    """A few plain Newton steps on the final system, kept while the residual drops."""
    ev = SystemEvaluator(compile_plan(system))
    best = max_modulus(ev(x).values)
    for _ in range(iterations):
        out = newton_correct(ev, x, NewtonParams(tolerance=1e-300, max_iterations=1))
        if out.failure is not None and out.failure != "iteration-budget":
            break
        r = max_modulus(ev(out.point).values)
        if not r < best:
            break
        x, best = out.point, r
    return x, best


def pieri_sequence(n: int, m: int, p: int, seed=0, params: StepControlParams | None = None,
                   precision=Precision.D, pattern: PieriPattern | None = None,
                   gamma_trick: bool = True, report=None) -> PieriResult:
    """Solve ``det([A^(i) | X]) = 0`` for ``i = 1..mp`` by one path per stage."""
    if m + p != n:
        raise ValueError(f"m + p must equal n, got {m} + {p} != {n}")
    precision = Precision.parse(precision)
    pattern = pattern or PieriPattern.standard(n, m, p)
    params = params or StepControlParams.for_precision(precision)
    rng = np.random.default_rng(seed)
    stages = pattern.n_stages
    matrices = random_matrices(n, m, stages, rng)
    logs: list[StageLog] = []

    # stage 1: one equation, linear in the single unknown
    t0 = time.perf_counter()
    poly = minor_expand(matrices[0], pattern, 1)
    c1 = Coefficient.from_mpc(poly.get((0,), mpmath.mpc(0))).to_mp(precision)
    c0 = Coefficient.from_mpc(poly.get((), mpmath.mpc(0))).to_mp(precision)
    if c1.to_complex() == 0:
        raise PieriError("first stage equation does not involve its unknown", 1)
    x = (-c0 / c1).reshape(1)
    r = max_modulus(SystemEvaluator(compile_plan(stage_system(matrices[:1], pattern, 1)))(x)
                    .values)
    logs.append(StageLog(1, True, 0, 0, time.perf_counter() - t0, r))
    if report:
        report(logs[-1])

    for k in range(2, stages + 1):
        t0 = time.perf_counter()
        previous = stage_system(matrices[:k - 1], pattern, k)
        S = choose_special_matrix(pattern, k, k - 1, list(x.to_complex()))
        special = minor_expand(S, pattern, k)
        final_eq = minor_expand(matrices[k - 1], pattern, k)
        # balance the start equation against the target one; a constant factor
        # keeps the start solution and acts like the gamma constant
        weight = _coef_norm(final_eq) / _coef_norm(special)
        start = previous.extend([_to_terms({s: c * weight for s, c in special.items()})])
        target = previous.extend([_to_terms(final_eq)])
        hp = HomotopyParameters.random(rng, relaxation=1) if gamma_trick else \
            HomotopyParameters(relaxation=1)
        x0 = concatenate([x, MPComplex.zeros((1,), precision)])
        out = track_path(make_homotopy(start, target, hp), x0, params, record_points=False)
        logs.append(StageLog(k, out.success, out.steps, out.accepted,
                             time.perf_counter() - t0, out.residual))
        if report:
            report(logs[-1])
        if not out.success:
            raise PieriError(f"path failed ({out.failure}) after {out.steps} steps", k)
        x = out.point

    final = stage_system(matrices, pattern, stages)
    x, residual = polish(final, x)
    return PieriResult(pattern, matrices, x, final, residual, logs)
