"""Input validation helpers shared by the estimator and the CLI."""
from __future__ import annotations

import numpy as np

from manifold_control.exceptions import DomainError


def check_hermitian(F, tol: float = 1e-10) -> np.ndarray:
    F = np.asarray(F, dtype=complex)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {F.shape}")
    if not np.all(np.isfinite(F)):
        raise DomainError("matrix contains non-finite entries")
    dev = float(np.max(np.abs(F - F.conj().T))) if F.size else 0.0
    if dev > tol:
        raise DomainError(f"matrix is not Hermitian (deviation {dev:.3e} > {tol:.0e})")
    return 0.5 * (F + F.conj().T)


def check_ground_states(X, n_c: int) -> np.ndarray:
    """Coerce ``X`` to a 2-D complex array of ``n_c``-component states."""
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n_c:
        raise DomainError(f"expected states with {n_c} components, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DomainError("states contain non-finite entries")
    if np.any(np.linalg.norm(X, axis=1) == 0):
        raise DomainError("zero vector is not a state")
    return X


def check_indices(indices, n_i: int) -> tuple[int, ...]:
    idx = tuple(int(i) for i in indices)
    if not idx:
        raise DomainError("control subspace is empty")
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise DomainError(f"subspace indices must be strictly increasing, got {idx}")
    if idx[0] < 1 or idx[-1] > n_i:
        raise DomainError(f"subspace indices must lie in 1..{n_i}, got {idx}")
    return idx
