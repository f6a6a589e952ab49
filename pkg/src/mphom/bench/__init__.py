"""Benchmark constructions: cyclic n-roots with monodromy, and Pieri homotopies."""

from .cyclic import (CyclicDegreeFact, DegenerateSliceError, LinearSlice, augment_with_linear,
                     cyclic4_family_point, cyclic4_witness, cyclic_degree, cyclic_system)
from .monodromy import (LoopResult, MonodromyError, WitnessSet, load_witness_set,
                        monodromy_degree, monodromy_loop, save_witness_set)
from .pieri import (PieriError, PieriPattern, PieriResult, choose_special_matrix,
                    minor_expand, pieri_sequence)

__all__ = [
    "CyclicDegreeFact", "DegenerateSliceError", "LinearSlice", "LoopResult", "MonodromyError",
    "PieriError", "PieriPattern", "PieriResult", "WitnessSet", "augment_with_linear",
    "choose_special_matrix", "cyclic4_family_point", "cyclic4_witness", "cyclic_degree",
    "cyclic_system", "load_witness_set", "minor_expand", "monodromy_degree", "monodromy_loop",
    "pieri_sequence", "save_witness_set",
]
