"""Broadband population inversion between manifolds of quantum sublevels."""
from manifold_control.collective import (
    CollectiveSpec,
    CollectiveState,
    closed_form_populations,
    collective_embed,
    dressed_eigenvalues,
    effective_hamiltonian,
)
from manifold_control.exceptions import (
    DomainError,
    IntegrationAccuracyError,
    ManifoldControlError,
    NumericalAccuracyError,
)
from manifold_control.model import (
    PulseSpec,
    StateVector,
    SystemSpec,
    TimeGrid,
    accumulated_area,
    envelope,
)
from manifold_control.optimizer import (
    ControlSubspace,
    YieldOptimizer,
    YieldSpectrum,
    bare_yield,
    solve_secular,
    transfer_matrix,
    transparency_basis,
    yield_matrix,
)
from manifold_control.propagator import (
    propagate,
    propagate_degenerate_oracle,
)
from manifold_control.sweep import SweepSpec, sweep_area, sweep_minima, sweep_subspace

__version__ = "0.1.0"

__all__ = [
    "CollectiveSpec", "CollectiveState", "closed_form_populations", "collective_embed",
    "dressed_eigenvalues", "effective_hamiltonian",
    "DomainError", "IntegrationAccuracyError", "ManifoldControlError", "NumericalAccuracyError",
    "PulseSpec", "StateVector", "SystemSpec", "TimeGrid", "accumulated_area", "envelope",
    "ControlSubspace", "YieldOptimizer", "YieldSpectrum", "bare_yield", "solve_secular",
    "transfer_matrix", "transparency_basis", "yield_matrix",
    "propagate", "propagate_degenerate_oracle",
    "SweepSpec", "sweep_area", "sweep_minima", "sweep_subspace",
]
