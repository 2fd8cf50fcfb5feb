"""Domain types and Gaussian pulse mathematics.

Units: hbar = 1, time in units of the pulse width ``tau``, energies and
frequencies in ``1/tau``.  The envelope is

    Omega(t) = Omega0 * exp(-2 ln2 (t/tau)^2)

so the intensity FWHM equals ``tau`` and the pulse area is the primary
parameter; ``Omega0`` is derived from it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from manifold_control.exceptions import DomainError

GAUSS_RATE = 2.0 * math.log(2.0)
#: integral of exp(-2 ln2 x^2) over the real line
GAUSS_NORM = math.sqrt(math.pi / GAUSS_RATE)

DEFAULT_DT = 1.0 / 2000.0
DEFAULT_HALF_WINDOW = 4.0
#: largest phase advance per step (fastest frequency times dt) allowed by auto_dt
MAX_PHASE_STEP = 0.01


@dataclass(frozen=True)
class SystemSpec:
    """Two manifolds of equally coupled sublevels.

    Ground sublevel ``j`` sits at ``(j - 1) * de_i`` and excited sublevel
    ``k`` at ``(k - 1) * de_f + detuning0`` in the frame rotating with the
    carrier, which is resonant with ``|g,1> -> |e,1>`` by default.
    """

    n_i: int
    n_f: int
    de_i: float = 0.0
    de_f: float | None = None
    detuning0: float = 0.0

    def __post_init__(self):
        for name in ("n_i", "n_f"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.de_f is None:
            object.__setattr__(self, "de_f", self.de_i)
        for name in ("de_i", "de_f"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be a finite real >= 0, got {value!r}")
            object.__setattr__(self, name, value)
        detuning = float(self.detuning0)
        if not math.isfinite(detuning):
            raise DomainError(f"detuning0 must be finite, got {detuning!r}")
        object.__setattr__(self, "detuning0", detuning)

    @property
    def dim(self) -> int:
        return self.n_i + self.n_f

    @property
    def is_degenerate(self) -> bool:
        return self.de_i == 0.0 and self.de_f == 0.0 and self.detuning0 == 0.0

    @property
    def extension(self) -> float:
        """Factor sqrt(n_i n_f) turning a pulse area into the extended area."""
        return math.sqrt(self.n_i * self.n_f)

    def level_offsets(self) -> np.ndarray:
        ground = np.arange(self.n_i) * self.de_i
        excited = np.arange(self.n_f) * self.de_f + self.detuning0
        return np.concatenate([ground, excited])


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian pulse given by its total area (radians) and width."""

    area: float
    tau: float = 1.0
    t_start: float | None = None
    t_end: float | None = None

    def __post_init__(self):
        area = float(self.area)
        tau = float(self.tau)
        if not math.isfinite(area) or area < 0:
            raise DomainError(f"area must be a finite real >= 0, got {self.area!r}")
        if not math.isfinite(tau) or tau <= 0:
            raise DomainError(f"tau must be a finite real > 0, got {self.tau!r}")
        t_start = -DEFAULT_HALF_WINDOW * tau if self.t_start is None else float(self.t_start)
        t_end = DEFAULT_HALF_WINDOW * tau if self.t_end is None else float(self.t_end)
        if not (t_start < 0.0 < t_end):
            raise DomainError(
                f"window must satisfy t_start < 0 < t_end, got [{t_start}, {t_end}]"
            )
        object.__setattr__(self, "area", area)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "t_start", t_start)
        object.__setattr__(self, "t_end", t_end)

    @property
    def peak_rabi(self) -> float:
        """Peak Rabi frequency Omega0 implied by the area."""
        return self.area / (self.tau * GAUSS_NORM)

    def with_area(self, area: float) -> "PulseSpec":
        return PulseSpec(area, self.tau, self.t_start, self.t_end)


@dataclass(frozen=True)
class TimeGrid:
    """Fixed-step grid spanning ``[t_start, t_end]``.

    All steps have length ``dt`` except possibly the last one, which is
    shortened to land exactly on ``t_end`` (``last_dt`` records it).
    """

    t_start: float
    t_end: float
    dt: float = DEFAULT_DT
    n_steps: int = field(init=False)
    last_dt: float = field(init=False)

    def __post_init__(self):
        span = float(self.t_end) - float(self.t_start)
        if not span > 0:
            raise DomainError("t_end must exceed t_start")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"dt must be a finite real > 0, got {self.dt!r}")
        n_steps = max(1, math.ceil(span / self.dt - 1e-9))
        last = span - (n_steps - 1) * self.dt
        object.__setattr__(self, "n_steps", n_steps)
        object.__setattr__(self, "last_dt", last)

    @classmethod
    def for_pulse(
        cls, pulse: PulseSpec, dt: float | None = None, system: SystemSpec | None = None
    ) -> "TimeGrid":
        """Grid over the pulse window.

        Without an explicit ``dt`` the step is ``tau/2000``, refined by
        :func:`auto_dt` when ``system`` is given.
        """
        if dt is None:
            dt = DEFAULT_DT * pulse.tau if system is None else auto_dt(system, pulse)
        return cls(pulse.t_start, pulse.t_end, dt)

    @property
    def shortened(self) -> bool:
        return not math.isclose(self.last_dt, self.dt, rel_tol=0, abs_tol=1e-12 * self.dt)

    def times(self) -> np.ndarray:
        t = self.t_start + self.dt * np.arange(self.n_steps + 1)
        t[-1] = self.t_end
        return t


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes over ``|g,1>..|g,n_i>, |e,1>..|e,n_f>``."""

    amplitudes: np.ndarray
    n_i: int

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if not 1 <= self.n_i < amps.size:
            raise DomainError(f"n_i={self.n_i} incompatible with {amps.size} amplitudes")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise DomainError(f"state norm must be 1 within 1e-10, got {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, system: SystemSpec, index: int, manifold: str = "g") -> "StateVector":
        """Basis state ``|g,index>`` or ``|e,index>`` (1-based)."""
        size = system.n_i if manifold == "g" else system.n_f
        if not 1 <= index <= size:
            raise DomainError(f"sublevel index {index} outside 1..{size}")
        amps = np.zeros(system.dim, dtype=complex)
        amps[index - 1 if manifold == "g" else system.n_i + index - 1] = 1.0
        return cls(amps, system.n_i)

    @classmethod
    def from_ground(cls, system: SystemSpec, coefficients, indices=None) -> "StateVector":
        """Ground-manifold superposition, normalized on construction."""
        coefficients = np.asarray(coefficients, dtype=complex).reshape(-1)
        if indices is None:
            indices = range(1, coefficients.size + 1)
        indices = np.asarray(list(indices), dtype=int)
        if indices.size != coefficients.size:
            raise DomainError("coefficients and indices differ in length")
        if indices.size and (indices.min() < 1 or indices.max() > system.n_i):
            raise DomainError(f"ground indices must lie in 1..{system.n_i}")
        norm = np.linalg.norm(coefficients)
        if norm == 0:
            raise DomainError("zero ground superposition cannot be normalized")
        amps = np.zeros(system.dim, dtype=complex)
        amps[indices - 1] = coefficients / norm
        return cls(amps, system.n_i)

    @property
    def ground(self) -> np.ndarray:
        return self.amplitudes[: self.n_i]

    @property
    def excited(self) -> np.ndarray:
        return self.amplitudes[self.n_i :]

    @property
    def p_excited(self) -> float:
        return float(np.sum(np.abs(self.excited) ** 2))


def auto_dt(system: SystemSpec, pulse: PulseSpec) -> float:
    """Default step: ``tau/2000``, or finer for strong pulses.

    The fastest rate in the problem is bounded by the collective Rabi
    frequency ``sqrt(n_i n_f) Omega0 / 2`` plus the largest level offset;
    the step keeps its phase advance below ``MAX_PHASE_STEP`` so that the
    RK4 step-halving error stays below 1e-9.
    """
    offsets = np.abs(system.level_offsets())
    fastest = 0.5 * system.extension * pulse.peak_rabi + float(offsets.max())
    base = DEFAULT_DT * pulse.tau
    if fastest * base <= MAX_PHASE_STEP:
        return base
    return MAX_PHASE_STEP / fastest


def envelope(pulse: PulseSpec, t):
    """Rabi frequency Omega(t); accepts scalars or arrays."""
    x = np.asarray(t, dtype=float) / pulse.tau
    value = pulse.peak_rabi * np.exp(-GAUSS_RATE * x * x)
    return float(value) if np.ndim(value) == 0 else value


def accumulated_area(pulse: PulseSpec, t):
    """Running area theta(t) measured from the envelope's far past.

    Closed-form error-function expression.  Raises DomainError when ``t``
    falls outside the pulse window.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < pulse.t_start) or np.any(t_arr > pulse.t_end):
        raise DomainError(
            f"t outside the pulse window [{pulse.t_start}, {pulse.t_end}]"
        )
    theta = 0.5 * pulse.area * (1.0 + erf(math.sqrt(GAUSS_RATE) * t_arr / pulse.tau))
    return float(theta) if np.ndim(theta) == 0 else theta


def window_area(pulse: PulseSpec, t):
    """Area accumulated inside the window, theta(t) - theta(t_start).

    This is the quantity the propagator actually integrates, since the
    dynamics start at ``t_start``.
    """
    return accumulated_area(pulse, t) - accumulated_area(pulse, pulse.t_start)
