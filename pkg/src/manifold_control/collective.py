"""Collective-state reduction of the degenerate sublevel problem.

With ``n_p`` ground sublevels equally populated and in phase, the dynamics
close on three collective states: ``|I>`` (populated ground), ``|E>``
(uniform excited) and ``|R>`` (uniform over the ``n_u = n_i - n_p``
remaining ground sublevels).  The effective Hamiltonian is a resonant
Lambda system

    H = -sqrt(n_f) Omega / 2 * (sqrt(n_p) |I><E| + sqrt(n_u) |E><R| + h.c.)

whose dressed energies are ``0, +-sqrt(n_i n_f) Omega / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from manifold_control.exceptions import DomainError
from manifold_control.model import StateVector


@dataclass(frozen=True)
class CollectiveSpec:
    n_i: int
    n_f: int
    n_p: int = 1

    def __post_init__(self):
        for name in ("n_i", "n_f", "n_p"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.n_p > self.n_i:
            raise DomainError(f"n_p={self.n_p} exceeds n_i={self.n_i}")

    @property
    def n_u(self) -> int:
        return self.n_i - self.n_p

    def extended_area(self, theta):
        return math.sqrt(self.n_i * self.n_f) * np.asarray(theta, dtype=float)


@dataclass(frozen=True)
class CollectiveState:
    """Amplitudes on ``|I>``, ``|E>``, ``|R>``."""

    a: complex
    b: complex
    c: complex = 0j

    def __post_init__(self):
        norm2 = abs(self.a) ** 2 + abs(self.b) ** 2 + abs(self.c) ** 2
        if abs(norm2 - 1.0) > 1e-10:
            raise DomainError(f"collective state norm^2 must be 1, got {norm2!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=complex)


@dataclass(frozen=True)
class ClosedFormPopulations:
    """Exact Lambda-model populations plus the reference ``Eq. 13`` value.

    ``p_e_reference`` uses the prefactor ``n_p n_i / (n_p^2 + n_u^2)``; it
    is reported for comparison only and is not a population of the model.
    """

    p_i: np.ndarray | float
    p_e: np.ndarray | float
    p_r: np.ndarray | float
    p_e_reference: np.ndarray | float


def effective_hamiltonian(spec: CollectiveSpec, omega: float) -> np.ndarray:
    """3x3 Lambda Hamiltonian in the ``(|I>, |E>, |R>)`` basis."""
    if omega < 0:
        raise DomainError("omega must be >= 0")
    pre = -0.5 * math.sqrt(spec.n_f) * omega
    h = np.zeros((3, 3))
    h[0, 1] = h[1, 0] = pre * math.sqrt(spec.n_p)
    h[1, 2] = h[2, 1] = pre * math.sqrt(spec.n_u)
    return h


def dressed_eigenvalues(spec: CollectiveSpec, omega: float) -> np.ndarray:
    if omega < 0:
        raise DomainError("omega must be >= 0")
    half = 0.5 * math.sqrt(spec.n_f * spec.n_i) * omega
    return np.array([-half, 0.0, half])


def closed_form_populations(spec: CollectiveSpec, theta) -> ClosedFormPopulations:
    """Populations of ``|I>``, ``|E>``, ``|R>`` after accumulated area ``theta``.

    Exact for the degenerate system started in the uniform in-phase
    superposition of ``n_p`` ground sublevels:

        p_e = (n_p / n_i) sin^2(A_e / 2)
        p_r = 4 (n_p n_u / n_i^2) sin^4(A_e / 4)

    with ``A_e = sqrt(n_i n_f) theta``.
    """
    theta_arr = np.asarray(theta, dtype=float)
    if np.any(theta_arr < 0):
        raise DomainError("theta must be >= 0")
    ae = spec.extended_area(theta_arr)
    n_i, n_p, n_u = spec.n_i, spec.n_p, spec.n_u
    p_e = (n_p / n_i) * np.sin(0.5 * ae) ** 2
    p_r = 4.0 * (n_p * n_u / n_i**2) * np.sin(0.25 * ae) ** 4
    p_i = 1.0 - p_e - p_r
    ref = (n_p * n_i / (n_p**2 + n_u**2)) * np.sin(0.5 * ae) ** 2
    if theta_arr.ndim == 0:
        p_i, p_e, p_r, ref = float(p_i), float(p_e), float(p_r), float(ref)
    return ClosedFormPopulations(p_i, p_e, p_r, ref)


def collective_embed(spec: CollectiveSpec, cs: CollectiveState) -> StateVector:
    """Full-space state for collective amplitudes ``(a, b, c)``."""
    if spec.n_u == 0 and cs.c != 0:
        raise DomainError("|R> is empty when n_p = n_i; c must be 0")
    amps = np.zeros(spec.n_i + spec.n_f, dtype=complex)
    amps[: spec.n_p] = cs.a / math.sqrt(spec.n_p)
    if spec.n_u:
        amps[spec.n_p : spec.n_i] = cs.c / math.sqrt(spec.n_u)
    amps[spec.n_i :] = cs.b / math.sqrt(spec.n_f)
    return StateVector(amps, spec.n_i)


def collective_populations(spec: CollectiveSpec, amplitudes) -> np.ndarray:
    """Project full-space amplitude rows onto ``|I>, |E>, |R>`` populations."""
    amps = np.atleast_2d(np.asarray(amplitudes, dtype=complex))
    i_amp = amps[:, : spec.n_p].sum(axis=1) / math.sqrt(spec.n_p)
    e_amp = amps[:, spec.n_i :].sum(axis=1) / math.sqrt(spec.n_f)
    if spec.n_u:
        r_amp = amps[:, spec.n_p : spec.n_i].sum(axis=1) / math.sqrt(spec.n_u)
    else:
        r_amp = np.zeros_like(i_amp)
    return np.abs(np.stack([i_amp, e_amp, r_amp], axis=1)) ** 2
