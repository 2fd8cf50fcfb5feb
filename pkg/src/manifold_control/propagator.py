"""RWA Schrodinger propagation for the two-manifold sublevel system.

The Hamiltonian in the rotating frame is

    H(t) = diag(offsets) - Omega(t)/2 * (C + C^H)

with ``C`` the all-ones ground -> excited block (equal dipoles).  With
``i dpsi/dt = H psi`` this gives ``da_j/dt = i Omega/2 sum_k b_k`` on
resonance.  Integration is fixed-step classical RK4; the norm is monitored
and never renormalized.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from numba import njit
from scipy.optimize import minimize_scalar

from manifold_control.exceptions import DomainError, IntegrationAccuracyError
from manifold_control.model import (
    PulseSpec,
    StateVector,
    SystemSpec,
    TimeGrid,
    envelope,
    window_area,
)

NORM_DRIFT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class HamiltonianSkeleton:
    """Static pieces of H(t): level offsets and the symmetric coupling."""

    diag: np.ndarray
    coupling: np.ndarray
    n_i: int

    @classmethod
    def build(cls, system: SystemSpec) -> "HamiltonianSkeleton":
        coupling = np.zeros((system.dim, system.dim))
        coupling[: system.n_i, system.n_i :] = 1.0
        coupling[system.n_i :, : system.n_i] = 1.0
        return cls(system.level_offsets(), coupling, system.n_i)

    def at(self, omega: float) -> np.ndarray:
        return np.diag(self.diag) - 0.5 * omega * self.coupling


@dataclass(frozen=True, eq=False)
class PopulationTrace:
    times: np.ndarray
    per_level: np.ndarray
    n_i: int
    states: np.ndarray | None = None

    @property
    def p_ground(self) -> np.ndarray:
        return self.per_level[:, : self.n_i].sum(axis=1)

    @property
    def p_excited(self) -> np.ndarray:
        return self.per_level[:, self.n_i :].sum(axis=1)

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(self.per_level.sum(axis=1))


@njit(cache=True)
def _rk4_kernel(diag, n_i, w0, wm, w1, dts, y, out):
    """In-place RK4 for ``i dy/dt = H(t) y`` with equal-dipole coupling.

    ``y`` is stored column-major as (k, dim).  The coupling block is all
    ones, so ``C y`` reduces to the two manifold sums.  ``out``
    (steps+1, k, dim) receives every intermediate state when non-empty.
    """
    k, dim = y.shape
    n = dts.size
    store = out.shape[0] > 0
    if store:
        out[0] = y
    rot = -1j * diag
    k1 = np.empty(dim, dtype=np.complex128)
    k2 = np.empty(dim, dtype=np.complex128)
    k3 = np.empty(dim, dtype=np.complex128)
    k4 = np.empty(dim, dtype=np.complex128)
    tmp = np.empty(dim, dtype=np.complex128)
    for s in range(n):
        dt = dts[s]
        half = 0.5 * dt
        ca = 0.5j * w0[s]
        cb = 0.5j * wm[s]
        cc = 0.5j * w1[s]
        for c in range(k):
            v = y[c]
            _deriv(v, rot, n_i, ca, k1)
            for i in range(dim):
                tmp[i] = v[i] + half * k1[i]
            _deriv(tmp, rot, n_i, cb, k2)
            for i in range(dim):
                tmp[i] = v[i] + half * k2[i]
            _deriv(tmp, rot, n_i, cb, k3)
            for i in range(dim):
                tmp[i] = v[i] + dt * k3[i]
            _deriv(tmp, rot, n_i, cc, k4)
            for i in range(dim):
                v[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if store:
            out[s + 1] = y
    return y


@njit(cache=True, inline="always")
def _deriv(v, rot, n_i, coef, res):
    sg = 0j
    se = 0j
    for i in range(n_i):
        sg += v[i]
    for i in range(n_i, v.size):
        se += v[i]
    for i in range(n_i):
        res[i] = rot[i] * v[i] + coef * se
    for i in range(n_i, v.size):
        res[i] = rot[i] * v[i] + coef * sg


def _step_plan(pulse, t0, dts):
    starts = t0 + np.concatenate([[0.0], np.cumsum(dts)[:-1]])
    return (
        envelope(pulse, starts),
        envelope(pulse, starts + 0.5 * dts),
        envelope(pulse, starts + dts),
    )


def _grid_steps(grid):
    dts = np.full(grid.n_steps, grid.dt)
    dts[-1] = grid.last_dt
    return dts


def _run(system, pulse, t0, dts, y0, store=False):
    y = np.array(np.asarray(y0, dtype=np.complex128).T, order="C", copy=True)
    w0, wm, w1 = _step_plan(pulse, t0, dts)
    shape = (dts.size + 1, *y.shape) if store else (0, *y.shape)
    out = np.empty(shape, dtype=np.complex128)
    _rk4_kernel(system.level_offsets(), system.n_i, w0, wm, w1, dts, y, out)
    return y.T, (out.transpose(0, 2, 1) if store else None)


def _check_drift(y0, y, tol=NORM_DRIFT_TOL):
    n0 = np.linalg.norm(y0, axis=0)
    n1 = np.linalg.norm(y, axis=0)
    scale = np.where(n0 > 0, n0, 1.0)
    drift = np.max(np.abs(n1 - n0) / scale) if n0.size else 0.0
    if drift > tol:
        raise IntegrationAccuracyError(
            f"norm drift {drift:.3e} exceeds {tol:.0e}; use a smaller dt"
        )
    return drift


def evolve_states(system: SystemSpec, pulse: PulseSpec, grid: TimeGrid, states):
    """Evolve amplitude column(s) from ``grid.t_start`` to ``grid.t_end``.

    ``states`` is a vector of length ``dim`` or a ``dim x k`` matrix whose
    columns are propagated together.  Inputs need not be normalized (the
    map is linear); norm drift is still checked column by column.
    """
    y0 = np.array(states, dtype=complex)
    vector = y0.ndim == 1
    if vector:
        y0 = y0[:, None]
    if y0.shape[0] != system.dim:
        raise DomainError(f"expected {system.dim} amplitudes, got {y0.shape[0]}")
    y, _ = _run(system, pulse, grid.t_start, _grid_steps(grid), y0)
    _check_drift(y0, y)
    return y[:, 0] if vector else y


def propagate(
    system: SystemSpec,
    pulse: PulseSpec,
    grid: TimeGrid,
    psi0: StateVector,
    stride: int = 1,
    keep_states: bool = False,
):
    """Propagate ``psi0`` through the pulse, recording populations.

    Returns ``(final_state, trace)``.  The trace holds every ``stride``-th
    grid point plus the final one.
    """
    if not isinstance(psi0, StateVector):
        psi0 = StateVector(psi0, system.n_i)
    if psi0.amplitudes.size != system.dim or psi0.n_i != system.n_i:
        raise DomainError("initial state does not match the system dimensions")
    if int(stride) != stride or stride < 1:
        raise DomainError("stride must be a positive integer")

    y0 = psi0.amplitudes.copy()[:, None]
    y, states = _run(system, pulse, grid.t_start, _grid_steps(grid), y0, store=True)
    _check_drift(y0, y)

    steps = np.unique(np.append(np.arange(0, grid.n_steps + 1, int(stride)), grid.n_steps))
    amps = states[steps, :, 0]
    trace = PopulationTrace(
        grid.times()[steps], np.abs(amps) ** 2, system.n_i, amps if keep_states else None
    )
    return StateVector(y[:, 0], system.n_i), trace


def max_excited_population(
    system: SystemSpec,
    pulse: PulseSpec,
    grid: TimeGrid,
    psi0: StateVector,
    candidates: int = 3,
):
    """Maximum over time of the excited-manifold population.

    The best sampled peaks are refined between grid points by short RK4
    sub-propagations from the stored neighbouring state, so the result is
    not limited by the sampling density.  Returns ``(t_max, p_max)``.
    """
    _, trace = propagate(system, pulse, grid, psi0, keep_states=True)
    pe = trace.p_excited
    times = trace.times
    best = int(np.argmax(pe))
    best_t, best_p = float(times[best]), float(pe[best])

    interior = np.arange(1, len(pe) - 1)
    is_peak = (pe[interior] >= pe[interior - 1]) & (pe[interior] >= pe[interior + 1])
    peaks = sorted(interior[is_peak], key=lambda i: -pe[i])[:candidates]
    for i in peaks:
        t_lo, t_hi = times[i - 1], times[i + 1]
        y_lo = trace.states[i - 1][:, None]

        def neg_pe(t, t_lo=t_lo, y_lo=y_lo):
            span = t - t_lo
            if span <= 0:
                y = y_lo
            else:
                n = max(4, int(np.ceil(span / (grid.dt / 8))))
                y, _ = _run(system, pulse, t_lo, np.full(n, span / n), y_lo)
            return -float(np.sum(np.abs(y[system.n_i :, 0]) ** 2))

        res = minimize_scalar(
            neg_pe, bounds=(t_lo, t_hi), method="bounded", options={"xatol": 1e-10}
        )
        if -res.fun > best_p:
            best_t, best_p = float(res.x), -float(res.fun)
    return best_t, best_p


def coupling_generator(system: SystemSpec) -> np.ndarray:
    """H(t) / Omega(t) for a degenerate system."""
    return -0.5 * HamiltonianSkeleton.build(system).coupling


def propagate_degenerate_oracle(
    system: SystemSpec, pulse: PulseSpec, t: float, psi0, theta: float | None = None
):
    """Exact propagation for a degenerate system by matrix exponential.

    With all offsets zero, H(t) = Omega(t) H0 commutes with itself at all
    times, so the propagator is ``expm(-1j * H0 * theta)``.  ``theta``
    defaults to the area accumulated inside the pulse window up to ``t``.
    """
    if not system.is_degenerate:
        raise DomainError("oracle requires de_i = de_f = detuning0 = 0")
    amps = psi0.amplitudes if isinstance(psi0, StateVector) else np.asarray(psi0, complex)
    if theta is None:
        theta = window_area(pulse, t)
    u = expm(-1j * theta * coupling_generator(system))
    out = u @ amps
    if isinstance(psi0, StateVector):
        return StateVector(out, system.n_i)
    return out
