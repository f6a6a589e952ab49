"""Newton corrector with a residual-growth divergence test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .linalg import LinAlgError, least_squares_solve, max_modulus
from .multiprec import MPComplex, Precision

DEFAULT_TOLERANCE = {Precision.D: 1e-8, Precision.DD: 1e-20, Precision.QD: 1e-44}

RESIDUAL_INCREASE = "residual-increase"
ITERATION_BUDGET = "iteration-budget"
LINEAR_SOLVE_FAILURE = "linear-solve-failure"


@dataclass(frozen=True)
class NewtonParams:
    tolerance: float = 1e-8
    max_iterations: int = 6
    initial_last_residual: float = math.inf

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.tolerance > 0.0:
            raise ValueError("tolerance must be positive")

    @classmethod
    def for_precision(cls, precision, tolerance: float | None = None,
                      max_iterations: int = 6) -> NewtonParams:
        precision = Precision.parse(precision)
        return cls(DEFAULT_TOLERANCE[precision] if tolerance is None else tolerance,
                   max_iterations)


@dataclass
class NewtonOutcome:
    success: bool
    iterations: int
    residual: float
    update_norm: float
    point: MPComplex
    failure: str | None = None
    residuals: list[float] = field(default_factory=list)
    updates: list[float] = field(default_factory=list)


def newton_correct(evaluator, x: MPComplex, params: NewtonParams) -> NewtonOutcome:
    """Correct ``x`` at fixed ``t``; ``outcome.point`` is the last updated point.

    Each iteration evaluates ``h`` and its Jacobian, fails when the residual
    grew, succeeds when the residual is below tolerance, solves for the
    update by least squares, applies it, and succeeds when the update norm
    is below tolerance.
    """
    last = params.initial_last_residual
    residuals: list[float] = []
    updates: list[float] = []
    u = math.nan
    r = math.nan

    def done(ok, k, failure=None):
        return NewtonOutcome(ok, k, r, u, x, failure, residuals, updates)

    for k in range(1, params.max_iterations + 1):
        res = evaluator(x)
        r = max_modulus(res.values)
        residuals.append(r)
        if r > last or math.isnan(r):
            return done(False, k, RESIDUAL_INCREASE)
        if r < params.tolerance:
            return done(True, k)
        try:
            dx = least_squares_solve(res.jacobian, -res.values)
        except LinAlgError:
            return done(False, k, LINEAR_SOLVE_FAILURE)
        u = max_modulus(dx)
        updates.append(u)
        x = x + dx
        if u < params.tolerance:
            return done(True, k)
        last = r
    return done(False, params.max_iterations, ITERATION_BUDGET)
