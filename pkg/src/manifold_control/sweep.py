"""Parameter scans over pulse area and control subspace."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from manifold_control.exceptions import DomainError, ManifoldControlError
from manifold_control.model import PulseSpec, SystemSpec, TimeGrid
from manifold_control.optimizer import (
    ControlSubspace,
    solve_secular,
    transfer_matrix,
    yield_matrix,
)

WORKERS_ENV = "MANIFOLD_CONTROL_WORKERS"


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        try:
            n = int(value)
        except ValueError:
            raise DomainError(f"{WORKERS_ENV} must be a positive integer, got {value!r}")
        if n < 1:
            raise DomainError(f"{WORKERS_ENV} must be a positive integer, got {value!r}")
        return n
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1


@dataclass(frozen=True)
class SweepSpec:
    """Scan grid over pulse area (``extended=False``) or extended area.

    The grid is ``area_min + k * area_step`` for every ``k`` that stays
    below ``area_max`` (plus a 1e-9 relative allowance).
    """

    system: SystemSpec
    area_min: float
    area_max: float
    area_step: float
    subspace: ControlSubspace | None = None
    extended: bool = False
    tau: float = 1.0
    t_start: float | None = None
    t_end: float | None = None
    dt: float | None = None

    def __post_init__(self):
        if not self.area_step > 0:
            raise DomainError("area_step must be > 0")
        if self.area_min > self.area_max:
            raise DomainError("area_min must not exceed area_max")
        if self.area_min < 0:
            raise DomainError("area_min must be >= 0")
        if self.subspace is None:
            object.__setattr__(self, "subspace", ControlSubspace.first(self.system.n_i))
        self.subspace.validate(self.system)

    def grid_values(self) -> np.ndarray:
        span = self.area_max - self.area_min
        n = int(math.floor(span / self.area_step * (1 + 1e-9) + 1e-9)) + 1
        return self.area_min + self.area_step * np.arange(n)

    def areas(self) -> np.ndarray:
        values = self.grid_values()
        return values / self.system.extension if self.extended else values

    def pulse(self, area: float) -> PulseSpec:
        return PulseSpec(area, self.tau, self.t_start, self.t_end)


@dataclass(frozen=True, eq=False)
class SweepRow:
    area: float
    area_extended: float
    chi_max: float
    chi_min: float
    bare: float
    eigenvalues: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class SubspaceTable:
    areas: np.ndarray
    area_extended: np.ndarray
    labels: list
    chi_max: np.ndarray  # (n_areas, n_subspaces)


def _transfer_columns(system, pulse, dt, indices):
    grid = TimeGrid.for_pulse(pulse, dt, system)
    return transfer_matrix(system, pulse, grid, ControlSubspace(tuple(indices)))


def _row(spec: SweepSpec, area: float, keep: bool) -> SweepRow:
    system = spec.system
    pulse = spec.pulse(area)
    sub = spec.subspace.indices
    union = tuple(sorted(set(sub) | {1}))
    try:
        M = _transfer_columns(system, pulse, spec.dt, union)
    except ManifoldControlError as exc:
        raise type(exc)(f"at area {area!r}: {exc}") from exc
    pos = {idx: k for k, idx in enumerate(union)}
    Msub = M[:, [pos[i] for i in sub]]
    ys = solve_secular(yield_matrix(Msub), area, system.extension * area, sub)
    bare = float(np.sum(np.abs(M[:, pos[1]]) ** 2))
    return SweepRow(
        area, system.extension * area, ys.chi_max, ys.chi_min, bare,
        ys.eigenvalues.copy() if keep else None,
    )


def _row_task(args):
    return _row(*args)


def _map(fn, tasks, workers):
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def sweep_area(spec: SweepSpec, keep_eigenvalues: bool = False, workers: int | None = None):
    """One :class:`SweepRow` per grid point, ordered by area.

    Rows are independent; with ``workers > 1`` they are evaluated in a
    process pool and assembled by index, so results do not depend on the
    schedule.
    """
    tasks = [(spec, float(a), keep_eigenvalues) for a in spec.areas()]
    return _map(_row_task, tasks, workers)


def sweep_minima(rows) -> list[tuple[float, float]]:
    """Interior local minima of ``chi_max`` as ``(area_extended, chi_max)``.

    A plateau of equal values counts once, at its smallest area, when both
    sides rise.
    """
    y = [r.chi_max for r in rows]
    out = []
    i = 1
    while i < len(y) - 1:
        if y[i] < y[i - 1]:
            j = i
            while j + 1 < len(y) and y[j + 1] == y[i]:
                j += 1
            if j + 1 < len(y) and y[j + 1] > y[i]:
                out.append((rows[i].area_extended, y[i]))
            i = j + 1
        else:
            i += 1
    return out


def _subspace_task(args):
    system, pulse, dt, subspaces = args
    union = tuple(sorted(set().union(*(s.indices for s in subspaces))))
    M = _transfer_columns(system, pulse, dt, union)
    pos = {idx: k for k, idx in enumerate(union)}
    values = []
    for sub in subspaces:
        Msub = M[:, [pos[i] for i in sub.indices]]
        values.append(solve_secular(yield_matrix(Msub)).chi_max)
    return values


def sweep_subspace(
    system: SystemSpec,
    areas,
    subspaces,
    labels=None,
    tau: float = 1.0,
    t_start: float | None = None,
    t_end: float | None = None,
    dt: float | None = None,
    workers: int | None = None,
) -> SubspaceTable:
    """``chi_max`` for every (area, subspace) pair.

    The transfer matrix is computed once per area over the union of all
    subspaces; each subspace then selects its columns.
    """
    subspaces = [s.validate(system) for s in subspaces]
    if not subspaces:
        raise DomainError("no subspaces given")
    areas = np.asarray(areas, dtype=float)
    tasks = [(system, PulseSpec(float(a), tau, t_start, t_end), dt, subspaces) for a in areas]
    table = np.array(_map(_subspace_task, tasks, workers), dtype=float)
    if labels is None:
        labels = [f"nc{s.n_c}" for s in subspaces]
    return SubspaceTable(areas, system.extension * areas, list(labels), table.reshape(len(areas), -1))
