"""Coherent transmitted/reflected sub-wave decomposition of 1D barrier
scattering, with packet dynamics, conservation diagnostics and
dwell / Larmor clock times."""

__version__ = "0.1.0"

from .potential import PotentialSpec, evaluate, make_piecewise, make_rectangular
from .stationary import (
    BoundaryAmplitudes,
    ComponentField,
    EnergyMode,
    ScatteringAmplitudes,
    evaluate_state,
    segment_wavevector,
    solve_full,
    total_transfer,
)
from .splitting import (
    SplitAmplitudes,
    StationaryDecomposition,
    build_decomposition,
    derivative_jump,
    split_amplitude_candidates,
)

__all__ = [
    "PotentialSpec",
    "make_rectangular",
    "make_piecewise",
    "evaluate",
    "EnergyMode",
    "ScatteringAmplitudes",
    "BoundaryAmplitudes",
    "ComponentField",
    "segment_wavevector",
    "total_transfer",
    "solve_full",
    "evaluate_state",
    "SplitAmplitudes",
    "split_amplitude_candidates",
    "StationaryDecomposition",
    "build_decomposition",
    "derivative_jump",
]
