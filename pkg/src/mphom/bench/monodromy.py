"""Monodromy loops on witness sets of positive-dimensional solution sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..evaldiff import SystemEvaluator, compile_plan
from ..linalg import max_modulus
from ..multiprec import MPComplex, Precision
from ..newton import NewtonParams
from ..polysys import (HomotopyParameters, PolynomialSystem, SolutionRecord, make_homotopy,
                       random_unit_complex, read_solutions, write_solutions)
from ..tracker import StepControlParams, TrackOutcome, track_path
from .cyclic import LinearSlice, augment_with_linear

MATCH_TOLERANCE = {Precision.D: 1e-6, Precision.DD: 1e-12, Precision.QD: 1e-12}
# Fewest corrector iterations that still pass the update test from a predictor
# error near 1e-3; a small basin keeps the corrector from landing on a
# neighbouring path.
LOOP_ITERATIONS = {Precision.D: 3, Precision.DD: 5, Precision.QD: 6}


class MonodromyError(RuntimeError):
    pass


@dataclass
class LoopResult:
    success: bool
    point: MPComplex | None
    legs: list[TrackOutcome]

    @property
    def steps(self) -> int:
        return sum(leg.steps for leg in self.legs)


def monodromy_loop(w: MPComplex, f: PolynomialSystem, L: LinearSlice, K: LinearSlice,
                   alpha, beta, params: StepControlParams | None = None) -> LoopResult:
    """Move the slice from L to K with constant ``alpha``, then back with ``beta``."""
    params = params or loop_params(w.precision)
    fL = augment_with_linear(f, 0, slice_=L)
    fK = augment_with_linear(f, 0, slice_=K)
    legs = []
    point = w
    for gamma, start, target in ((alpha, fL, fK), (beta, fK, fL)):
        if not isinstance(gamma, HomotopyParameters):
            gamma = HomotopyParameters(gamma, 1)
        out = track_path(make_homotopy(start, target, gamma), point, params,
                         record_points=False)
        legs.append(out)
        if not out.success:
            return LoopResult(False, None, legs)
        point = out.point
    return LoopResult(True, point, legs)


@dataclass
class WitnessSet:
    system: PolynomialSystem            # f augmented with the slice L
    slice: LinearSlice
    points: list[MPComplex] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    log: list[dict] = field(default_factory=list)

    @property
    def degree(self) -> int:
        return len(self.points)

    def residual(self, x: MPComplex) -> float:
        return max_modulus(SystemEvaluator(compile_plan(self.system))(x).values)

    def matches(self, x: MPComplex, tol: float) -> int | None:
        z = x.to_complex()
        for i, p in enumerate(self.points):
            if max_modulus(z - p.to_complex()) <= tol:
                return i
        return None

    def insert(self, x: MPComplex, residual_tol: float, match_tol: float) -> bool:
        """Add ``x`` unless it repeats a stored point; residual is re-checked first."""
        r = self.residual(x)
        if not r < residual_tol:
            raise MonodromyError(f"point residual {r:.3e} exceeds {residual_tol:.3e}")
        if self.matches(x, match_tol) is not None:
            return False
        self.points.append(x)
        self.residuals.append(r)
        return True


def loop_params(precision, tolerance: float | None = None) -> StepControlParams:
    precision = Precision.parse(precision)
    newton = NewtonParams.for_precision(precision, tolerance,
                                        max_iterations=LOOP_ITERATIONS[precision])
    return StepControlParams.for_precision(precision, newton=newton)


def monodromy_degree(f: PolynomialSystem, L: LinearSlice, start_witness, seed=0,
                     stabilization_loops: int = 8, max_loops: int = 60,
                     params: StepControlParams | None = None,
                     match_tol: float | None = None, report=None) -> WitnessSet:
    """Collect witness points by monodromy until no new point shows up for a while."""
    start_witness = list(start_witness)
    if not start_witness:
        raise ValueError("start witness set is empty")
    prec = start_witness[0].precision
    params = params or loop_params(prec)
    match_tol = MATCH_TOLERANCE[prec] if match_tol is None else match_tol
    ws = WitnessSet(augment_with_linear(f, 0, slice_=L), L)
    for x in start_witness:
        ws.insert(x, params.newton.tolerance, match_tol)
    if stabilization_loops <= 0:
        return ws
    rng = np.random.default_rng(seed)
    quiet = 0
    failures = 0
    for loop in range(max_loops):
        K = LinearSlice.random(f.n_variables, L.dim, rng)
        alpha = random_unit_complex(rng)
        beta = random_unit_complex(rng)
        source = loop % len(ws.points)
        res = monodromy_loop(ws.points[source], f, L, K, alpha, beta, params)
        entry = {"loop": loop, "source": source, "success": res.success, "steps": res.steps}
        if res.success:
            new = ws.insert(res.point, params.newton.tolerance, match_tol)
            entry["new"] = new
            entry["degree"] = ws.degree
            quiet = 0 if new else quiet + 1
        else:
            failures += 1
            entry["new"] = False
            entry["degree"] = ws.degree
        ws.log.append(entry)
        if report is not None:
            report(entry)
        if quiet >= stabilization_loops:
            break
    if failures == len(ws.log):
        raise MonodromyError(f"all {failures} monodromy loops failed")
    return ws


def save_witness_set(fh, ws: WitnessSet, extra: dict | None = None):
    header = {"slice": ws.slice.to_json(), "n": ws.slice.n_variables}
    header.update(extra or {})
    records = [SolutionRecord(p, 1.0, r, float("nan")) for p, r in zip(ws.points, ws.residuals)]
    write_solutions(fh, records, header)


def load_witness_set(fh, f: PolynomialSystem, precision=None) -> tuple[LinearSlice, list]:
    """Read the slice from the header and the points of a witness file."""
    header, records = read_solutions(fh, precision)
    if "slice" not in header:
        raise ValueError("witness file has no slice in its header record")
    L = LinearSlice.from_json(header["slice"])
    if L.n_variables != f.n_variables:
        raise ValueError(f"witness slice has {L.n_variables} variables, system has "
                         f"{f.n_variables}")
    points = [r.point for r in records]
    if not points:
        raise ValueError("witness file holds no points")
    return L, points
