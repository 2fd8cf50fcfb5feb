"""Geometric control of the initial ground-manifold superposition.

For a fixed pulse the final excited-manifold population is a quadratic
form in the initial amplitudes over a control subspace:

    yield(v) = v^H F v,    F = M^H M,

where column ``k`` of ``M`` holds the final excited amplitudes reached from
``|g, indices[k]>``.  The eigenvectors of ``F`` are the stationary initial
states, the top one maximizes transfer and the (near-)null ones are
transparent to the field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from manifold_control._validation import check_ground_states, check_hermitian, check_indices
from manifold_control.exceptions import DomainError, NumericalAccuracyError
from manifold_control.model import PulseSpec, StateVector, SystemSpec, TimeGrid
from manifold_control.propagator import evolve_states

CLUSTER_TOL = 1e-9
RANGE_TOL = 1e-9
TRANSPARENCY_TOL = 1e-8


@dataclass(frozen=True)
class ControlSubspace:
    """Ground sublevels (1-based) over which the initial state is engineered."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        check_indices(idx, max(idx) if idx else 0)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def first(cls, n_c: int) -> "ControlSubspace":
        return cls(tuple(range(1, n_c + 1)))

    @classmethod
    def odd(cls, n_i: int) -> "ControlSubspace":
        return cls(tuple(range(1, n_i + 1, 2)))

    @property
    def n_c(self) -> int:
        return len(self.indices)

    def validate(self, system: SystemSpec) -> "ControlSubspace":
        check_indices(self.indices, system.n_i)
        return self

    def embed(self, system: SystemSpec, coefficients) -> StateVector:
        return StateVector.from_ground(system, coefficients, self.indices)


@dataclass(frozen=True, eq=False)
class YieldSpectrum:
    """Solutions of ``F v = chi v``.

    ``eigenvalues`` are sorted descending; ``eigenvectors[:, j]`` belongs
    to ``eigenvalues[j]`` and is expressed over ``indices``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    indices: tuple[int, ...]
    area: float = float("nan")
    area_extended: float = float("nan")

    @property
    def chi_max(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def chi_min(self) -> float:
        return float(self.eigenvalues[-1])

    def state(self, system: SystemSpec, j: int = 0) -> StateVector:
        return StateVector.from_ground(system, self.eigenvectors[:, j], self.indices)


@dataclass(frozen=True, eq=False)
class TransparencyBasis:
    """Zero-yield initial states; ``approximate`` when none were exact."""

    states: list
    yields: np.ndarray
    approximate: bool


def transfer_matrix(
    system: SystemSpec, pulse: PulseSpec, grid: TimeGrid, subspace: ControlSubspace
) -> np.ndarray:
    """Final excited amplitudes (``n_f x n_c``) for each controlled basis state."""
    subspace.validate(system)
    cols = np.zeros((system.dim, subspace.n_c), dtype=complex)
    cols[np.asarray(subspace.indices) - 1, np.arange(subspace.n_c)] = 1.0
    final = evolve_states(system, pulse, grid, cols)
    return final[system.n_i :, :]


def yield_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    F = M.conj().T @ M
    return 0.5 * (F + F.conj().T)


def _phase_fix(v: np.ndarray) -> np.ndarray:
    mag = np.abs(v)
    lead = int(np.flatnonzero(mag >= mag.max() - 1e-9)[0])
    return v * (np.conj(v[lead]) / mag[lead])


def _orthonormalize_cluster(V: np.ndarray) -> np.ndarray:
    """Basis of span(V) built by Gram-Schmidt on its projections of e_1, e_2, ..."""
    n, m = V.shape
    proj = V @ V.conj().T
    out: list[np.ndarray] = []
    for threshold in (1e-6, 1e-12):
        for col in range(n):
            if len(out) == m:
                break
            r = proj[:, col].copy()
            for _ in range(2):
                for q in out:
                    r -= q * np.vdot(q, r)
            norm = np.linalg.norm(r)
            if norm > threshold:
                out.append(r / norm)
        if len(out) == m:
            break
    return np.stack(out, axis=1)


def solve_secular(F, area: float = float("nan"), area_extended: float = float("nan"),
                  indices=None) -> YieldSpectrum:
    """Eigen-decomposition of a yield matrix.

    Eigenvalues must lie in [0, 1] within 1e-9 and are then clamped.
    Eigenvectors of an eigenvalue cluster (spread < 1e-9) are rebuilt
    deterministically in basis order, and every vector is rotated so its
    first largest-magnitude component is real positive.
    """
    F = check_hermitian(F)
    n = F.shape[0]
    w, V = np.linalg.eigh(F)
    w, V = w[::-1].copy(), V[:, ::-1].copy()
    if n and (w[-1] < -RANGE_TOL or w[0] > 1.0 + RANGE_TOL):
        raise NumericalAccuracyError(
            f"yields outside [0, 1]: min {w[-1]:.3e}, max {w[0]:.3e}"
        )
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and w[stop - 1] - w[stop] < CLUSTER_TOL:
            stop += 1
        if stop - start > 1:
            V[:, start:stop] = _orthonormalize_cluster(V[:, start:stop])
        start = stop
    for j in range(n):
        V[:, j] = _phase_fix(V[:, j])
    if indices is None:
        indices = tuple(range(1, n + 1))
    return YieldSpectrum(np.clip(w, 0.0, 1.0), V, tuple(indices), area, area_extended)


def spectrum(system, pulse, grid, subspace) -> YieldSpectrum:
    M = transfer_matrix(system, pulse, grid, subspace)
    return solve_secular(
        yield_matrix(M), pulse.area, system.extension * pulse.area, subspace.indices
    )


def bare_yield(system: SystemSpec, pulse: PulseSpec, grid: TimeGrid) -> float:
    """Final excited population when only ``|g,1>`` is initially populated."""
    M = transfer_matrix(system, pulse, grid, ControlSubspace((1,)))
    return float(np.sum(np.abs(M) ** 2))


def transparency_basis(
    system: SystemSpec,
    pulse: PulseSpec,
    grid: TimeGrid,
    subspace: ControlSubspace,
    tol: float = TRANSPARENCY_TOL,
) -> TransparencyBasis:
    if subspace.n_c < 2:
        raise DomainError("transparency needs a control subspace with n_c >= 2")
    ys = spectrum(system, pulse, grid, subspace)
    dark = np.flatnonzero(ys.eigenvalues < tol)
    approximate = dark.size == 0
    if approximate:
        dark = np.array([ys.eigenvalues.size - 1])
    states = [ys.state(system, int(j)) for j in dark]
    return TransparencyBasis(states, ys.eigenvalues[dark], approximate)


class YieldOptimizer(BaseEstimator):
    """Estimator wrapper around the yield matrix of one pulse.

    Parameters mirror the system and pulse specifications.  ``fit`` builds
    the yield matrix and its spectrum; ``transform`` maps initial
    superpositions over the control subspace to final excited amplitudes
    and ``predict`` returns their transfer yields.

    Parameters
    ----------
    n_i, n_f : int
        Ground and excited sublevel counts.
    area : float
        Pulse area in radians.
    de_i, de_f : float
        Sublevel spacings in units of 1/tau; ``de_f=None`` copies ``de_i``.
    detuning0 : float
        Carrier detuning from the lowest-to-lowest transition.
    tau : float
        Gaussian width.
    dt : float or None
        Integration step; ``None`` selects the automatic step.
    subspace : sequence of int or None
        Controlled ground sublevels (1-based); ``None`` means all.

    Attributes
    ----------
    transfer_matrix_ : ndarray of shape (n_f, n_c)
    yield_matrix_ : ndarray of shape (n_c, n_c)
    spectrum_ : YieldSpectrum
    eigenvalues_, eigenvectors_ : ndarray
    optimal_state_ : StateVector
    """

    def __init__(self, n_i=2, n_f=1, area=math.pi, de_i=0.0, de_f=None,
                 detuning0=0.0, tau=1.0, dt=None, subspace=None):
        self.n_i = n_i
        self.n_f = n_f
        self.area = area
        self.de_i = de_i
        self.de_f = de_f
        self.detuning0 = detuning0
        self.tau = tau
        self.dt = dt
        self.subspace = subspace

    def _specs(self):
        system = SystemSpec(self.n_i, self.n_f, self.de_i, self.de_f, self.detuning0)
        pulse = PulseSpec(self.area, self.tau)
        grid = TimeGrid.for_pulse(pulse, self.dt, system)
        indices = range(1, system.n_i + 1) if self.subspace is None else self.subspace
        sub = ControlSubspace(tuple(indices)).validate(system)
        return system, pulse, grid, sub

    def fit(self, X=None, y=None):
        """Build the yield matrix; ``X`` and ``y`` are ignored."""
        system, pulse, grid, sub = self._specs()
        self.system_ = system
        self.subspace_ = sub
        self.transfer_matrix_ = transfer_matrix(system, pulse, grid, sub)
        self.yield_matrix_ = yield_matrix(self.transfer_matrix_)
        self.spectrum_ = solve_secular(
            self.yield_matrix_, pulse.area, system.extension * pulse.area, sub.indices
        )
        self.eigenvalues_ = self.spectrum_.eigenvalues
        self.eigenvectors_ = self.spectrum_.eigenvectors
        self.optimal_state_ = self.spectrum_.state(system, 0)
        return self

    def transform(self, X):
        """Final excited amplitudes for each (normalized) initial state row."""
        check_is_fitted(self, "transfer_matrix_")
        X = check_ground_states(X, self.subspace_.n_c)
        X = X / np.linalg.norm(X, axis=1, keepdims=True)
        return X @ self.transfer_matrix_.T

    def fit_transform(self, X, y=None):
        return self.fit().transform(X)

    def predict(self, X):
        """Transfer yield of each initial state row (Rayleigh quotient)."""
        return np.sum(np.abs(self.transform(X)) ** 2, axis=1)

    def score(self, X, y=None):
        return float(np.mean(self.predict(X)))
