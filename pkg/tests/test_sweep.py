import math

import numpy as np
import pytest

from manifold_control.exceptions import DomainError
from manifold_control.model import SystemSpec
from manifold_control.optimizer import ControlSubspace
from manifold_control.sweep import (
    SweepRow,
    SweepSpec,
    default_workers,
    sweep_area,
    sweep_minima,
    sweep_subspace,
)

PI = math.pi


def rows_from(values):
    return [SweepRow(float(i), float(i), v, 0.0, 0.0) for i, v in enumerate(values)]


def test_grid_values_inclusive():
    spec = SweepSpec(SystemSpec(2, 2), 0.0, 6 * PI, 0.02 * PI, extended=True)
    v = spec.grid_values()
    assert len(v) == 301 and v[-1] == pytest.approx(6 * PI)
    np.testing.assert_allclose(spec.areas(), v / 2)
    with pytest.raises(DomainError):
        SweepSpec(SystemSpec(2, 2), 1.0, 0.5, 0.1)
    with pytest.raises(DomainError):
        SweepSpec(SystemSpec(2, 2), 0.0, 1.0, 0.0)


def test_degenerate_sweep_follows_sine_law():
    spec = SweepSpec(SystemSpec(3, 3), 0.0, 4 * PI, 0.1 * PI, extended=True)
    rows = sweep_area(spec, keep_eigenvalues=True)
    first = rows[0]
    assert first.chi_max == first.chi_min == first.bare == 0.0
    for r in rows:
        assert r.chi_max == pytest.approx(math.sin(r.area_extended / 2) ** 2, abs=1e-6)
        assert r.chi_min <= r.bare <= r.chi_max + 1e-9
        assert len(r.eigenvalues) == 3
    peaks = [r.area_extended / PI for r in rows if r.chi_max > 1 - 1e-9]
    assert peaks == pytest.approx([1.0, 3.0])


def test_nondegenerate_minima_stay_positive():
    spec = SweepSpec(SystemSpec(5, 5, 0.4), 0.0, 6 * PI, 0.05 * PI, extended=True)
    rows = sweep_area(spec)
    assert min(r.chi_max for r in rows[1:]) > 0
    minima = sweep_minima(rows)
    assert minima and all(chi > 0 for _, chi in minima)


def test_sweep_minima_rules():
    assert sweep_minima(rows_from([0, 1, 2, 3])) == []
    assert sweep_minima(rows_from([3, 1, 2])) == [(1.0, 1)]
    # plateau counts once at its left edge
    assert sweep_minima(rows_from([3, 1, 1, 1, 2, 0.5, 4])) == [(1.0, 1), (5.0, 0.5)]
    # a plateau running into the end is not a minimum
    assert sweep_minima(rows_from([3, 1, 1])) == []


def test_degenerate_minima_positions():
    spec = SweepSpec(SystemSpec(2, 2), 0.0, 6 * PI, 0.02 * PI, extended=True)
    minima = sweep_minima(sweep_area(spec))
    assert [round(a / PI, 6) for a, _ in minima] == [2.0, 4.0]
    assert all(chi < 1e-12 for _, chi in minima)


def test_bare_without_reference_level_in_subspace():
    spec = SweepSpec(SystemSpec(4, 2, 0.4), 0.5, 1.0, 0.25, subspace=ControlSubspace((2, 3)))
    rows = sweep_area(spec)
    full = sweep_area(SweepSpec(SystemSpec(4, 2, 0.4), 0.5, 1.0, 0.25))
    for r, f in zip(rows, full):
        assert r.bare == f.bare
        assert r.chi_max <= f.chi_max + 1e-9


def test_determinism_and_parallel_schedule():
    spec = SweepSpec(SystemSpec(3, 2, 0.4), 0.0, 2.0, 0.5)
    serial = sweep_area(spec, keep_eigenvalues=True, workers=1)
    again = sweep_area(spec, keep_eigenvalues=True, workers=1)
    parallel = sweep_area(spec, keep_eigenvalues=True, workers=2)
    for a, b, c in zip(serial, again, parallel):
        assert (a.chi_max, a.chi_min, a.bare) == (b.chi_max, b.chi_min, b.bare)
        assert (a.chi_max, a.chi_min, a.bare) == (c.chi_max, c.chi_min, c.bare)
        assert np.array_equal(a.eigenvalues, c.eigenvalues)


def test_sweep_subspace_nested_and_masks():
    system = SystemSpec(8, 8, 0.4)
    subs = [ControlSubspace.first(n) for n in (1, 2, 4, 8)] + [ControlSubspace.odd(8)]
    areas = np.linspace(0, 0.6, 7)
    table = sweep_subspace(system, areas, subs)
    chi = table.chi_max
    assert chi.shape == (7, 5)
    assert np.all(np.diff(chi[:, :4], axis=1) >= -1e-9)
    assert np.all(chi[:, 4] <= chi[:, 3] + 1e-9)
    bare = [r.bare for r in sweep_area(SweepSpec(system, 0.0, 0.6, 0.1))]
    np.testing.assert_allclose(chi[:, 0], bare, atol=1e-14)
    assert table.labels[0] == "nc1"
    par = sweep_subspace(system, areas, subs, workers=2)
    assert np.array_equal(par.chi_max, chi)


def test_workers_env(monkeypatch):
    monkeypatch.setenv("MANIFOLD_CONTROL_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("MANIFOLD_CONTROL_WORKERS", "zero")
    with pytest.raises(DomainError):
        default_workers()
    monkeypatch.delenv("MANIFOLD_CONTROL_WORKERS")
    assert default_workers() >= 1
