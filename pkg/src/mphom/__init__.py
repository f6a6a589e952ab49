"""Polynomial homotopy continuation in double, double-double and quad-double
complex arithmetic."""

from __future__ import annotations

from .multiprec import MPComplex, MPReal, Precision
from .newton import NewtonParams, newton_correct
from .polysys import (Coefficient, Homotopy, HomotopyParameters, PolynomialSystem, Term,
                      make_homotopy, parse_system, serialize_system)
from .tracker import StepControlParams, TrackOutcome, track_path

__all__ = [
    "Coefficient", "Homotopy", "HomotopyParameters", "MPComplex", "MPReal", "NewtonParams",
    "PolynomialSystem", "Precision", "StepControlParams", "Term", "TrackOutcome",
    "make_homotopy", "newton_correct", "parse_system", "serialize_system", "track_path",
]
