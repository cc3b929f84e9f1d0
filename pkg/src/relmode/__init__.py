"""Relative normal modes: resonance spaces, RPO lower bounds, and certified search."""

from .symplectic import (
    SymplecticSpace,
    Subspace,
    QuadraticForm,
    LinearHamiltonianMap,
    ResonanceSpace,
    canonical_omega,
    jordan_chevalley,
    krein_check,
    resonance_space,
    restrict,
    restrict_form,
    restrict_matrix,
    restrict_omega,
)

__version__ = "0.1.0"
