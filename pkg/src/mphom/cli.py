"""Command-line front end: single-path tracking, monodromy, Pieri sequences and
evaluation timings.

Exit status is 0 when the mathematical task succeeded, 1 when a path, loop
set or stage failed, and 2 for usage, configuration, parse and I/O errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .bench.cyclic import (DegenerateSliceError, LinearSlice, augment_with_linear,
                           cyclic4_witness, cyclic_system)
from .bench.monodromy import (MonodromyError, load_witness_set, loop_params, monodromy_degree,
                              save_witness_set)
from .bench.pieri import PieriError, pieri_sequence
from .evaldiff import compile_plan, evaluate_system
from .multiprec import MPComplex, Precision
from .polysys import (HomotopyParameters, SolutionRecord, SystemSyntaxError, load_system,
                      make_homotopy, random_unit_complex, read_solutions, write_solutions)
from .tracker import StepControlParams, track_path

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

MODES = ("track", "monodromy", "pieri", "evalbench")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str
    precision: Precision = Precision.D
    seed: int = 0
    tolerance: float | None = None
    max_step: float | None = None
    min_step: float | None = None
    max_steps: int | None = None
    degree: int | None = None
    system: str | None = None
    start_system: str | None = None
    start: str | None = None
    witness: str | None = None
    trace: str | None = None
    out: str | None = None
    cyclic: int | None = None
    pieri: tuple[int, int, int] | None = None
    reps: int = 100
    loops: int = 8
    relaxation: int = 2

    def validate(self) -> RunConfig:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "track":
            if self.cyclic is None and not (self.system and self.start_system and self.start):
                raise ConfigError("track needs --cyclic 4, or --system, --start-system "
                                  "and --start")
            if self.cyclic is not None and self.cyclic != 4:
                raise ConfigError("the built-in track leg exists for --cyclic 4 only")
        elif self.mode == "monodromy":
            if self.cyclic is None and not (self.system and self.witness):
                raise ConfigError("monodromy needs --cyclic N, or --system and --witness")
            if self.cyclic is not None and self.cyclic != 4 and not self.witness:
                raise ConfigError(f"cyclic {self.cyclic}-roots monodromy needs a witness-set "
                                  f"file: pass --witness FILE (a solutions file whose header "
                                  f"holds the slice)")
        elif self.mode == "pieri":
            if self.pieri is None:
                raise ConfigError("pieri needs --pieri N,M,P")
            n, m, p = self.pieri
            if m + p != n or m < 1 or p < 1:
                raise ConfigError(f"--pieri needs m + p = n with m, p >= 1, got {n},{m},{p}")
        elif self.mode == "evalbench":
            if self.cyclic is None and not self.system:
                raise ConfigError("evalbench needs --cyclic N or --system FILE")
        if self.cyclic is not None and self.cyclic < 2:
            raise ConfigError("--cyclic needs N >= 2")
        if self.reps < 0:
            raise ConfigError("--reps must be non-negative")
        if self.loops < 0:
            raise ConfigError("--loops must be non-negative")
        return self


@dataclass
class ReportRow:
    label: str
    success: bool
    steps: int
    seconds: float

    def text(self, width: int = 10) -> str:
        return f"{self.label:<{width}} {int(self.success):>2} {self.steps:>7} {self.seconds:>10.3f}"


@dataclass
class RunReport:
    title: str
    rows: list[ReportRow] = field(default_factory=list)
    key: str = "path"

    def header(self, width: int = 10) -> str:
        return f"{self.key:<{width}} {'s':>2} {'m':>7} {'time':>10}"

    def totals(self) -> ReportRow:
        return ReportRow("total", all(r.success for r in self.rows),
                         sum(r.steps for r in self.rows), sum(r.seconds for r in self.rows))

    def write(self, fh):
        fh.write(self.title + "\n")
        fh.write(self.header() + "\n")
        for row in self.rows:
            fh.write(row.text() + "\n")
        if len(self.rows) > 1:
            fh.write(self.totals().text() + "\n")


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _triple(text: str) -> tuple[int, int, int]:
    try:
        parts = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N,M,P, got {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected N,M,P, got {text!r}")
    return parts


def _precision(text: str) -> Precision:
    try:
        return Precision.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mphom",
        description="Path tracking in double, double-double and quad-double precision.")
    ap.add_argument("--mode", required=True, choices=MODES)
    ap.add_argument("--precision", type=_precision, default=Precision.D,
                    help="d, dd or qd (default d)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, help="corrector tolerance")
    ap.add_argument("--max-step", type=float)
    ap.add_argument("--min-step", type=float)
    ap.add_argument("--max-steps", type=int)
    ap.add_argument("--degree", type=int, help="extrapolation degree of the predictor")
    ap.add_argument("--system", help="target system file")
    ap.add_argument("--start-system", help="start system file (track mode)")
    ap.add_argument("--start", help="start solutions file (track mode)")
    ap.add_argument("--witness", help="witness-set solutions file (monodromy mode)")
    ap.add_argument("--trace", help="write the path trace here (JSON lines)")
    ap.add_argument("--out", help="write solutions here")
    ap.add_argument("--cyclic", type=int, metavar="N", help="use cyclic N-roots")
    ap.add_argument("--pieri", type=_triple, metavar="N,M,P")
    ap.add_argument("--reps", type=int, default=100, help="evaluations per precision")
    ap.add_argument("--loops", type=int, default=8,
                    help="monodromy stops after this many loops without a new point")
    ap.add_argument("--relaxation", type=int, default=2,
                    help="power k of the homotopy weights (track mode)")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(
        mode=ns.mode, precision=ns.precision, seed=ns.seed, tolerance=ns.tol,
        max_step=ns.max_step, min_step=ns.min_step, max_steps=ns.max_steps, degree=ns.degree,
        system=ns.system, start_system=ns.start_system, start=ns.start, witness=ns.witness,
        trace=ns.trace, out=ns.out, cyclic=ns.cyclic, pieri=ns.pieri, reps=ns.reps,
        loops=ns.loops, relaxation=ns.relaxation,
    ).validate()


def step_params(config: RunConfig, base: StepControlParams | None = None) -> StepControlParams:
    """Precision defaults, then whatever the flags override."""
    base = base or StepControlParams.for_precision(config.precision, config.tolerance)
    overrides = {k: v for k, v in (("max_step", config.max_step), ("min_step", config.min_step),
                                   ("max_steps", config.max_steps), ("degree", config.degree))
                 if v is not None}
    if config.max_step is not None and config.min_step is None:
        overrides["min_step"] = min(base.min_step, config.max_step)
    try:
        return replace(base, **overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# modes
# ---------------------------------------------------------------------------

def _cyclic4_leg(config: RunConfig):
    """Slices L and K, the constant alpha and a family-1 witness point on L."""
    rng = np.random.default_rng(config.seed)
    while True:
        L = LinearSlice.random(4, 1, rng)
        try:
            w = cyclic4_witness(L, 1, config.precision)
        except DegenerateSliceError:
            continue
        break
    K = LinearSlice.random(4, 1, rng)
    alpha = random_unit_complex(rng)
    return L, K, alpha, w


def run_track(config: RunConfig, out=sys.stdout) -> int:
    prec = config.precision
    if config.cyclic is not None:
        L, K, alpha, w = _cyclic4_leg(config)
        f = cyclic_system(4)
        h = make_homotopy(augment_with_linear(f, 0, slice_=L), augment_with_linear(f, 0, slice_=K),
                          HomotopyParameters(alpha, 1))
        starts = w[:1]
        params = step_params(config, loop_params(prec, config.tolerance))
        title = f"cyclic 4-roots monodromy leg, precision {prec.label}, seed {config.seed}"
    else:
        target = load_system(config.system)
        start_sys = load_system(config.start_system)
        with open(config.start, encoding="utf-8") as fh:
            _, records = read_solutions(fh, prec)
        if not records:
            raise ConfigError(f"{config.start}: no start solutions")
        starts = [r.point.with_precision(prec) for r in records]
        rng = np.random.default_rng(config.seed)
        try:
            h = make_homotopy(start_sys, target,
                              HomotopyParameters.random(rng, relaxation=config.relaxation))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for x in starts:
            if x.shape != (h.n_variables,):
                raise ConfigError(f"{config.start}: start point has {x.shape[0]} coordinates, "
                                  f"the systems have {h.n_variables} variables")
        params = step_params(config)
        title = f"{config.system}, precision {prec.label}, seed {config.seed}"

    report = RunReport(title)
    results = []
    trace_fh = open(config.trace, "w", encoding="utf-8") if config.trace else None
    try:
        for i, x in enumerate(starts):
            t0 = time.perf_counter()
            res = track_path(h, x, params, record_points=trace_fh is not None)
            report.rows.append(ReportRow(str(i), res.success, res.steps,
                                         time.perf_counter() - t0))
            results.append(res)
            if trace_fh is not None:
                for event in res.trace.events:
                    rec = event.record(with_point=True)
                    rec["path"] = i
                    trace_fh.write(json.dumps(rec) + "\n")
    finally:
        if trace_fh is not None:
            trace_fh.close()
    report.write(out)
    for i, res in enumerate(results):
        if not res.success:
            out.write(f"path {i} failed: {res.failure} at t = {res.t:.6g}\n")
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            write_solutions(fh, [SolutionRecord(r.point, r.t, r.residual, math.nan,
                                                {"success": r.success, "steps": r.steps,
                                                 "failure": r.failure}) for r in results],
                            {"precision": prec.label, "seed": config.seed})
    return EXIT_OK if all(r.success for r in results) else EXIT_FAILURE


def run_monodromy(config: RunConfig, out=sys.stdout) -> int:
    prec = config.precision
    if config.witness:
        if config.system:
            f = load_system(config.system)
        elif config.cyclic is not None:
            f = cyclic_system(config.cyclic)
        else:
            raise ConfigError("monodromy with --witness needs --system or --cyclic")
        try:
            with open(config.witness, encoding="utf-8") as fh:
                L, points = load_witness_set(fh, f, prec)
        except SystemSyntaxError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{config.witness}: {exc}") from None
        points = [p.with_precision(prec) for p in points]
        name = config.system or f"cyclic {config.cyclic}-roots"
    else:
        L, _, _, w = _cyclic4_leg(config)
        f = cyclic_system(4)
        points = w[:1]
        name = "cyclic 4-roots, family 1"

    params = step_params(config, loop_params(prec, config.tolerance))
    report = RunReport(f"monodromy on {name}, precision {prec.label}, seed {config.seed}",
                       key="loop")
    t_last = [time.perf_counter()]

    def on_loop(entry):
        now = time.perf_counter()
        report.rows.append(ReportRow(str(entry["loop"]), entry["success"], entry["steps"],
                                     now - t_last[0]))
        t_last[0] = now
        what = "new point" if entry["new"] else ("known point" if entry["success"] else "failed")
        out.write(f"loop {entry['loop']}: from point {entry['source']}, {what}, "
                  f"{entry['degree']} points\n")

    try:
        ws = monodromy_degree(f, L, points, seed=config.seed, stabilization_loops=config.loops,
                              params=params, report=on_loop)
    except MonodromyError as exc:
        report.write(out)
        out.write(f"monodromy failed: {exc}\n")
        return EXIT_FAILURE
    report.write(out)
    out.write(f"degree estimate: {ws.degree}\n")
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            save_witness_set(fh, ws, {"precision": prec.label, "seed": config.seed})
    return EXIT_OK


def run_pieri(config: RunConfig, out=sys.stdout) -> int:
    n, m, p = config.pieri
    prec = config.precision
    params = step_params(config)
    report = RunReport(f"pieri n={n} m={m} p={p}, precision {prec.label}, seed {config.seed}",
                       key="stage")

    def on_stage(log):
        report.rows.append(ReportRow(str(log.stage), log.success, log.steps, log.seconds))

    try:
        res = pieri_sequence(n, m, p, seed=config.seed, params=params, precision=prec,
                             report=on_stage)
    except PieriError as exc:
        report.write(out)
        out.write(f"pieri sequence failed: {exc}\n")
        return EXIT_FAILURE
    report.write(out)
    out.write(f"final residual: {res.residual:.3e}\n")
    if config.out:
        header = {"pieri": [n, m, p], "precision": prec.label, "seed": config.seed,
                  "variables": list(res.system.variable_names),
                  "matrices": [[[[float(z.real).hex(), float(z.imag).hex()] for z in row]
                                for row in A] for A in res.matrices]}
        with open(config.out, "w", encoding="utf-8") as fh:
            write_solutions(fh, [SolutionRecord(res.point, 1.0, res.residual, math.nan)], header)
    return EXIT_OK


def run_evalbench(config: RunConfig, out=sys.stdout) -> int:
    if config.system:
        f = load_system(config.system)
        name = config.system
    else:
        f = cyclic_system(config.cyclic)
        name = f"cyclic {config.cyclic}-roots"
    plan = compile_plan(f)
    rng = np.random.default_rng(config.seed)
    z = np.exp(2j * np.pi * rng.random(f.n_variables))
    out.write(f"evaluation and differentiation of {name}, {config.reps} reps\n")
    out.write(f"{'precision':<10} {'reps':>6} {'total':>10} {'per eval ms':>12}\n")
    if config.reps == 0:
        return EXIT_OK
    for prec in Precision:
        x = MPComplex.from_complex(z, prec)
        evaluate_system(plan, x)
        t0 = time.perf_counter()
        for _ in range(config.reps):
            evaluate_system(plan, x)
        total = time.perf_counter() - t0
        out.write(f"{prec.label:<10} {config.reps:>6} {total:>10.3f} "
                  f"{1e3 * total / config.reps:>12.3f}\n")
    return EXIT_OK


RUNNERS = {"track": run_track, "monodromy": run_monodromy, "pieri": run_pieri,
           "evalbench": run_evalbench}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    ns = build_parser().parse_args(argv)
    try:
        config = config_from_args(ns)
        return RUNNERS[config.mode](config, out)
    except (ConfigError, SystemSyntaxError) as exc:
        sys.stderr.write(f"mphom: error: {exc}\n")
        return EXIT_CONFIG
    except OSError as exc:
        name = exc.filename if exc.filename is not None else ""
        sys.stderr.write(f"mphom: error: {name}: {exc.strerror or exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
