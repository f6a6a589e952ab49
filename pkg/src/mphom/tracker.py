"""Increment-and-fix path tracking with adaptive step control."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import IO

from .evaldiff import HomotopyEvaluator, HomotopyPlan, SystemEvaluator, compile_plan
from .linalg import max_modulus
from .multiprec import MPComplex, Precision
from .newton import NewtonParams, newton_correct
from .polysys import Homotopy, point_to_hex
from .predictor import DEFAULT_DEGREE, PathHistory, predict

PREDICTED = "predicted"
CORRECTED = "corrected"
DIVERGED = "diverged"


@dataclass(frozen=True)
class StepControlParams:
    max_step: float = 0.1
    min_step: float = 1e-6
    expansion_factor: float = 2.0
    shrink_factor: float = 0.5
    success_threshold: int = 3
    max_steps: int = 500
    degree: int = DEFAULT_DEGREE
    newton: NewtonParams = field(default_factory=NewtonParams)

    def __post_init__(self):
        if not 0.0 < self.min_step <= self.max_step <= 1.0:
            raise ValueError(f"need 0 < min_step <= max_step <= 1, got "
                             f"{self.min_step}, {self.max_step}")
        if self.max_steps < 0:
            raise ValueError("max_steps must be non-negative")

    @classmethod
    def for_precision(cls, precision, tolerance: float | None = None, **overrides):
        precision = Precision.parse(precision)
        newton = overrides.pop("newton", None) or NewtonParams.for_precision(precision, tolerance)
        overrides.setdefault("max_steps", 1500 if precision is Precision.QD else 500)
        return cls(newton=newton, **overrides)


@dataclass(frozen=True)
class TrackerState:
    t: float = 0.0
    dt: float = 0.1
    successes: int = 0
    steps: int = 0
    accepted: int = 0


def step_update(state: TrackerState, newton_succeeded: bool,
                params: StepControlParams, t_trial: float | None = None) -> TrackerState:
    """Step-size arithmetic after one trial; does not count the step."""
    if newton_succeeded:
        successes = state.successes + 1
        dt = state.dt
        if successes > params.success_threshold - 1:
            dt = min(params.expansion_factor * dt, params.max_step)
        t = state.t if t_trial is None else t_trial
        return replace(state, t=t, dt=dt, successes=successes, accepted=state.accepted + 1)
    return replace(state, dt=state.dt * params.shrink_factor, successes=0)


@dataclass
class TraceEvent:
    t: float
    kind: str
    step: int
    dt: float
    residual: float = math.nan
    update_norm: float = math.nan
    iterations: int = 0
    point: MPComplex | None = None

    def record(self, with_point: bool = False) -> dict:
        clean = lambda v: None if v is None or math.isnan(v) else v  # noqa: E731
        row = {"t": self.t, "kind": self.kind, "step": self.step, "dt": self.dt,
               "residual": clean(self.residual), "update": clean(self.update_norm),
               "iterations": self.iterations}
        if with_point and self.point is not None:
            row["x"] = point_to_hex(self.point)
        return row


@dataclass
class PathTrace:
    events: list[TraceEvent] = field(default_factory=list)

    def add(self, event: TraceEvent):
        self.events.append(event)

    def of_kind(self, kind: str) -> list[TraceEvent]:
        return [e for e in self.events if e.kind == kind]

    def write_jsonl(self, fh: IO[str], with_points: bool = False):
        for e in self.events:
            fh.write(json.dumps(e.record(with_points)) + "\n")


@dataclass
class TrackOutcome:
    success: bool
    point: MPComplex
    steps: int
    accepted: int
    trace: PathTrace
    t: float
    residual: float = math.nan
    failure: str | None = None


def _as_plan(h) -> HomotopyPlan:
    return h if isinstance(h, HomotopyPlan) else HomotopyPlan.compile(h)


def track_path(h: Homotopy | HomotopyPlan, start: MPComplex,
               params: StepControlParams | None = None,
               record_points: bool = True, workers: int = 1) -> TrackOutcome:
    """Track the solution path of ``h`` from ``start`` at t=0 to t=1.

    The precision is that of ``start``.  Accepted points feed the predictor
    history; a rejected trial restores the last accepted point and halves
    the step.  ``steps`` counts all trials, ``accepted`` the successful ones.
    """
    hplan = _as_plan(h)
    prec = start.precision
    params = params or StepControlParams.for_precision(prec)
    trace = PathTrace()
    keep = (lambda p: p) if record_points else (lambda p: None)

    out = newton_correct(HomotopyEvaluator(hplan, 0.0, prec, workers), start, params.newton)
    trace.add(TraceEvent(0.0, CORRECTED if out.success else DIVERGED, -1, 0.0,
                         out.residual, out.update_norm, out.iterations, keep(out.point)))
    if not out.success:
        return TrackOutcome(False, start, 0, 0, trace, 0.0, out.residual, "bad-start")
    x = out.point
    history = PathHistory(params.degree).push(0.0, x)
    state = TrackerState(dt=params.max_step)

    while state.t < 1.0:
        if state.steps > params.max_steps:
            return TrackOutcome(False, x, state.steps, state.accepted, trace, state.t,
                                failure="step-budget")
        t_trial = min(1.0, state.t + state.dt)
        guess = predict(history, t_trial)
        trace.add(TraceEvent(t_trial, PREDICTED, state.steps, state.dt, point=keep(guess)))
        out = newton_correct(HomotopyEvaluator(hplan, t_trial, prec, workers), guess,
                             params.newton)
        if out.success:
            x = out.point
            history.push(t_trial, x)
        trace.add(TraceEvent(t_trial, CORRECTED if out.success else DIVERGED, state.steps,
                             state.dt, out.residual, out.update_norm, out.iterations,
                             keep(out.point)))
        state = step_update(state, out.success, params, t_trial)
        state = replace(state, steps=state.steps + 1)
        if not out.success and state.dt < params.min_step:
            return TrackOutcome(False, x, state.steps, state.accepted, trace, state.t,
                                failure="step-size-underflow")

    final = SystemEvaluator(hplan.target, workers)(x)
    residual = max_modulus(final.values)
    if not residual < params.newton.tolerance:
        return TrackOutcome(False, x, state.steps, state.accepted, trace, 1.0, residual,
                            "final-residual")
    return TrackOutcome(True, x, state.steps, state.accepted, trace, 1.0, residual)


def solve_point(system, x: MPComplex, params: NewtonParams):
    """Run the corrector on a plain system (no homotopy)."""
    return newton_correct(SystemEvaluator(compile_plan(system)), x, params)
