"""Fidelity dynamics of kicked quantum wavepackets with mean-field interactions at the kicks."""

__version__ = "0.1.0"

from .classical import PhasePoint, delta_omega, iterate, map_step, rotation_frequency, tangent_eigen
from .grid import SimParams, SpatialGrid, WaveFunction, inner_product, make_coherent_state, make_grid
from .observables import TimeSeries, fidelity, wigner, wigner_overlap, width
from .propagator import evolve, evolve_twins, step

__all__ = [
    "PhasePoint",
    "SimParams",
    "SpatialGrid",
    "TimeSeries",
    "WaveFunction",
    "delta_omega",
    "evolve",
    "evolve_twins",
    "fidelity",
    "inner_product",
    "iterate",
    "make_coherent_state",
    "make_grid",
    "map_step",
    "rotation_frequency",
    "step",
    "tangent_eigen",
    "width",
    "wigner",
    "wigner_overlap",
]
