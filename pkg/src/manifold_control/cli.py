"""Command-line front end.

Configuration is a flat ``key = value`` document (``#`` starts a comment);
every key is also available as a ``--key`` flag, and flags override file
values.  Numbers accept a ``pi`` suffix: ``5pi``, ``pi/10``, ``0.02pi``.

Exit codes: 0 success, 2 configuration error, 3 numerical-accuracy error,
4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from manifold_control.collective import (
    CollectiveSpec,
    closed_form_populations,
    collective_embed,
    CollectiveState,
)
from manifold_control.exceptions import (
    DomainError,
    IntegrationAccuracyError,
    NumericalAccuracyError,
)
from manifold_control.model import PulseSpec, StateVector, SystemSpec, TimeGrid, window_area
from manifold_control.optimizer import ControlSubspace, YieldSpectrum, spectrum
from manifold_control.propagator import PopulationTrace, propagate, propagate_degenerate_oracle
from manifold_control.sweep import SweepSpec, sweep_area, sweep_minima, sweep_subspace

COMMANDS = ("propagate", "optimize", "sweep-area", "sweep-subspace", "oracle-check")
EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 2, 3, 4
CONFIG_DIR = "configs"


class ConfigError(DomainError):
    pass


_PI = re.compile(r"^(?P<coef>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*pi(?:\s*/\s*(?P<den>\d+\.?\d*))?$")


def parse_number(text: str) -> float:
    s = text.strip().lower()
    m = _PI.match(s)
    if m:
        coef = float(m.group("coef")) if m.group("coef") else 1.0
        den = float(m.group("den")) if m.group("den") else 1.0
        return coef * math.pi / den
    value = float(s)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


def parse_bool(text: str) -> bool:
    s = text.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_subspace(text: str, n_i: int) -> ControlSubspace:
    """``all``, ``odd``, ``even``, ``first:N`` or an explicit ``1,3,5`` list."""
    s = text.strip().lower()
    if s == "all":
        return ControlSubspace.first(n_i)
    if s == "odd":
        return ControlSubspace.odd(n_i)
    if s == "even":
        return ControlSubspace(tuple(range(2, n_i + 1, 2)))
    if s.startswith("first:"):
        return ControlSubspace.first(int(s[6:]))
    return ControlSubspace(tuple(int(p) for p in s.split(",") if p.strip()))


@dataclass(frozen=True)
class RunConfig:
    command: str = "propagate"
    ni: int = 2
    nf: int = 1
    de: float = 0.4
    de_f: float | None = None
    detuning0: float = 0.0
    area: float = 5 * math.pi
    tau: float = 1.0
    t_start: float | None = None
    t_end: float | None = None
    dt: float | None = None
    subspace: str = "all"
    nc: int | None = None
    init: str = "g1"
    stride: int = 1
    area_min: float = 0.0
    area_max: float = 6 * math.pi
    area_step: float = 0.02 * math.pi
    area_kind: str = "extended"
    eigenvalues: bool = False
    subspaces: str = "all"
    n_list: str = ""
    minima: bool = False
    out: str = ""

    # derived views; every one of them validates its piece
    def system(self, n: int | None = None) -> SystemSpec:
        ni = nf = n
        if n is None:
            ni, nf = self.ni, self.nf
        return SystemSpec(ni, nf, self.de, self.de_f, self.detuning0)

    def pulse(self) -> PulseSpec:
        return PulseSpec(self.area, self.tau, self.t_start, self.t_end)

    def grid(self, system=None, pulse=None) -> TimeGrid:
        pulse = self.pulse() if pulse is None else pulse
        return TimeGrid.for_pulse(pulse, self.dt, system or self.system())

    def control(self, system=None) -> ControlSubspace:
        system = system or self.system()
        text = f"first:{self.nc}" if self.nc is not None else self.subspace
        return parse_subspace(text, system.n_i).validate(system)

    def control_list(self, system=None) -> list:
        system = system or self.system()
        return [parse_subspace(p, system.n_i).validate(system)
                for p in self.subspaces.split(";") if p.strip()]

    def sizes(self) -> list:
        return [int(p) for p in self.n_list.split(",") if p.strip()]

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in fields(RunConfig)}
_INT = {"ni", "nf", "stride"}
_BOOL = {"eigenvalues", "minima"}
_OPT_FLOAT = {"de_f", "t_start", "t_end", "dt"}
_STR = {"command", "subspace", "init", "area_kind", "subspaces", "n_list", "out"}


def _convert(key: str, raw: str):
    raw = raw.strip()
    try:
        if key == "nc":
            return None if raw.lower() in ("", "none", "all") else int(raw)
        if key in _INT:
            return int(raw)
        if key in _BOOL:
            return parse_bool(raw)
        if key in _OPT_FLOAT:
            return None if raw.lower() in ("", "auto", "none", "default") else parse_number(raw)
        if key in _STR:
            return re.sub(r"\s+", "", raw) if key in ("subspace", "subspaces", "n_list") else raw
        return parse_number(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse value {raw!r} ({exc})") from None


def parse_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, raw)
    return values


def validate(cfg: RunConfig) -> RunConfig:
    """Check every field against its core-type invariant."""
    def fail(key, why):
        raise ConfigError(f"{key}: {why}")

    if cfg.command not in COMMANDS:
        fail("command", f"must be one of {', '.join(COMMANDS)}")
    if cfg.stride < 1:
        fail("stride", "must be a positive integer")
    if cfg.area_kind not in ("area", "extended"):
        fail("area_kind", "must be 'area' or 'extended'")
    if cfg.init not in ("g1", "uniform", "transparent", "optimal"):
        fail("init", "must be one of g1, uniform, transparent, optimal")
    checks = [
        ("ni/nf/de/de_f/detuning0", cfg.system),
        ("area/tau/t_start/t_end", cfg.pulse),
        ("dt", lambda: cfg.grid()),
    ]
    for key, build in checks:
        try:
            build()
        except DomainError as exc:
            fail(key, str(exc))
    if cfg.nc is not None:
        if cfg.subspace != "all":
            fail("nc", "give either nc or subspace, not both")
        if not 1 <= cfg.nc <= cfg.ni:
            fail("nc", f"must satisfy 1 <= nc <= ni (nc = {cfg.nc}, ni = {cfg.ni})")
    try:
        cfg.control()
    except (DomainError, ValueError) as exc:
        fail("subspace", f"{exc} (ni = {cfg.ni})")
    if cfg.command == "sweep-area":
        try:
            SweepSpec(cfg.system(), cfg.area_min, cfg.area_max, cfg.area_step)
        except DomainError as exc:
            fail("area_min/area_max/area_step", str(exc))
        try:
            sizes = cfg.sizes()
        except ValueError as exc:
            fail("n_list", str(exc))
        if any(n < 1 for n in sizes):
            fail("n_list", "sizes must be positive integers")
        if sizes and (cfg.subspace != "all" or cfg.nc is not None):
            fail("subspace", "must be 'all' when n_list is given")
    if cfg.command == "sweep-subspace":
        try:
            if not cfg.control_list():
                fail("subspaces", "at least one subspace is required")
        except (DomainError, ValueError) as exc:
            fail("subspaces", f"{exc} (ni = {cfg.ni})")
        if cfg.area_step <= 0 or cfg.area_min > cfg.area_max or cfg.area_min < 0:
            fail("area_min/area_max/area_step", "need 0 <= area_min <= area_max, area_step > 0")
    if cfg.init == "transparent" and cfg.ni < 2:
        fail("init", "transparent initial state needs ni >= 2")
    if cfg.command == "oracle-check" and cfg.ni < 2:
        fail("ni", "oracle-check needs ni >= 2 (Lambda system)")
    return cfg


def parse_config(text: str = "", overrides: dict | None = None) -> RunConfig:
    """Build a validated :class:`RunConfig` from text plus flag overrides."""
    values = parse_text(text)
    for key, value in (overrides or {}).items():
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _convert(key, value) if isinstance(value, str) else value
    return validate(RunConfig(**values))


def load_config_text(name: str) -> str:
    path = Path(name)
    if path.is_file():
        return path.read_text()
    resource = resources.files("manifold_control") / CONFIG_DIR / f"{name}.cfg"
    if resource.is_file():
        return resource.read_text()
    raise ConfigError(f"config {name!r} is neither a file nor a shipped figure config")


def shipped_configs() -> list:
    root = resources.files("manifold_control") / CONFIG_DIR
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


# ---------------------------------------------------------------- emission

def _fmt(x) -> str:
    return format(float(x), ".12g")


def _write(path, text: str):
    if not path or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_trace(trace: PopulationTrace, path):
    n_i = trace.n_i
    n_f = trace.per_level.shape[1] - n_i
    header = ["t", "p_g_total", "p_e_total"]
    header += [f"p_g_{j}" for j in range(1, n_i + 1)]
    header += [f"p_e_{k}" for k in range(1, n_f + 1)]
    lines = [",".join(header)]
    pg, pe = trace.p_ground, trace.p_excited
    for i, t in enumerate(trace.times):
        row = [t, pg[i], pe[i], *trace.per_level[i]]
        lines.append(",".join(_fmt(v) for v in row))
    _write(path, "\n".join(lines) + "\n")


def spectrum_document(ys: YieldSpectrum) -> dict:
    return {
        "area": float(ys.area),
        "area_extended": float(ys.area_extended),
        "indices": list(ys.indices),
        "eigenvalues": [float(v) for v in ys.eigenvalues],
        "eigenvectors": [
            [[float(z.real) + 0.0, float(z.imag) + 0.0] for z in ys.eigenvectors[:, j]]
            for j in range(ys.eigenvectors.shape[1])
        ],
    }


def emit_spectrum(ys: YieldSpectrum, path):
    _write(path, json.dumps(spectrum_document(ys), indent=2) + "\n")


def emit_sweep(rows, path, eigenvalues: bool = False):
    header = ["area", "area_extended", "chi_max", "chi_min", "bare"]
    width = max((len(r.eigenvalues) for r in rows if r.eigenvalues is not None), default=0)
    if eigenvalues:
        header += [f"chi_{j}" for j in range(1, width + 1)]
    lines = [",".join(header)]
    for r in rows:
        vals = [r.area, r.area_extended, r.chi_max, r.chi_min, r.bare]
        if eigenvalues:
            vals += list(r.eigenvalues)
        lines.append(",".join(_fmt(v) for v in vals))
    _write(path, "\n".join(lines) + "\n")


def emit_minima(table, path):
    lines = ["n,order,area_extended,chi_max"]
    for n, minima in table:
        for order, (ae, chi) in enumerate(minima, 1):
            lines.append(f"{n},{order},{_fmt(ae)},{_fmt(chi)}")
    _write(path, "\n".join(lines) + "\n")


def emit_subspace_table(table, path):
    lines = [",".join(["area", "area_extended", *table.labels])]
    for i, a in enumerate(table.areas):
        vals = [a, table.area_extended[i], *table.chi_max[i]]
        lines.append(",".join(_fmt(v) for v in vals))
    _write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------- commands

def initial_state(cfg: RunConfig, system: SystemSpec, pulse, grid) -> StateVector:
    sub = cfg.control(system)
    if cfg.init == "g1":
        return StateVector.basis(system, 1)
    if cfg.init == "uniform":
        return sub.embed(system, np.ones(sub.n_c))
    if cfg.init == "transparent":
        if sub.n_c < 2:
            raise ConfigError("init: transparent needs a subspace with at least 2 levels")
        coeffs = np.zeros(sub.n_c)
        coeffs[:2] = (1.0, -1.0)
        return sub.embed(system, coeffs)
    return spectrum(system, pulse, grid, sub).state(system, 0)


def run_propagate(cfg: RunConfig, workers=None):
    system, pulse = cfg.system(), cfg.pulse()
    grid = cfg.grid(system, pulse)
    psi0 = initial_state(cfg, system, pulse, grid)
    _, trace = propagate(system, pulse, grid, psi0, stride=cfg.stride)
    emit_trace(trace, cfg.out)


def run_optimize(cfg: RunConfig, workers=None):
    system, pulse = cfg.system(), cfg.pulse()
    emit_spectrum(spectrum(system, pulse, cfg.grid(system, pulse), cfg.control(system)), cfg.out)


def _sweep_spec(cfg: RunConfig, system: SystemSpec, subspace=None) -> SweepSpec:
    return SweepSpec(
        system, cfg.area_min, cfg.area_max, cfg.area_step,
        subspace=subspace, extended=cfg.area_kind == "extended",
        tau=cfg.tau, t_start=cfg.t_start, t_end=cfg.t_end, dt=cfg.dt,
    )


def run_sweep_area(cfg: RunConfig, workers=None):
    sizes = cfg.sizes()
    if not sizes:
        rows = sweep_area(_sweep_spec(cfg, cfg.system(), cfg.control()), cfg.eigenvalues, workers)
        if cfg.minima:
            emit_minima([(cfg.ni, sweep_minima(rows))], cfg.out)
        else:
            emit_sweep(rows, cfg.out, cfg.eigenvalues)
        return
    table = []
    for n in sizes:
        rows = sweep_area(_sweep_spec(cfg, cfg.system(n)), cfg.eigenvalues, workers)
        if cfg.minima:
            table.append((n, sweep_minima(rows)))
        else:
            out = cfg.out
            if out and out != "-":
                p = Path(out)
                out = str(p.with_name(f"{p.stem}_n{n}{p.suffix or '.csv'}"))
            emit_sweep(rows, out, cfg.eigenvalues)
    if cfg.minima:
        emit_minima(table, cfg.out)


def run_sweep_subspace(cfg: RunConfig, workers=None):
    system = cfg.system()
    values = _sweep_spec(cfg, system).areas()
    subs = cfg.control_list(system)
    labels = [p for p in cfg.subspaces.split(";") if p]
    table = sweep_subspace(system, values, subs, labels, cfg.tau, cfg.t_start, cfg.t_end,
                           cfg.dt, workers)
    emit_subspace_table(table, cfg.out)


def oracle_report(cfg: RunConfig) -> dict:
    """Degenerate RK4-vs-matrix-exponential and closed-form comparisons."""
    system = SystemSpec(cfg.ni, cfg.nf)
    pulse = cfg.pulse()
    grid = TimeGrid.for_pulse(pulse, cfg.dt, system)
    thetas = window_area(pulse, grid.times())

    report = {"ni": cfg.ni, "nf": cfg.nf, "area": pulse.area, "dt": grid.dt, "cases": []}
    worst = 0.0
    for n_p in sorted({1, cfg.ni}):
        cspec = CollectiveSpec(cfg.ni, cfg.nf, n_p)
        psi0 = collective_embed(cspec, CollectiveState(1.0, 0.0, 0.0))
        _, trace = propagate(system, pulse, grid, psi0, keep_states=True)
        exact = np.stack(
            [propagate_degenerate_oracle(system, pulse, 0.0, psi0.amplitudes, theta=t)
             for t in thetas]
        )
        dev_state = float(np.max(np.abs(exact - trace.states)))
        closed = closed_form_populations(cspec, thetas)
        dev_pe = float(np.max(np.abs(closed.p_e - trace.p_excited)))
        worst = max(worst, dev_state, dev_pe)
        report["cases"].append({
            "n_p": n_p,
            "max_state_deviation_rk4_vs_expm": dev_state,
            "max_p_e_deviation_rk4_vs_closed_form": dev_pe,
            "max_norm_drift": float(np.max(np.abs(trace.norms - 1.0))),
        })
    theta = np.linspace(0.0, pulse.area, 2001)
    comparison = []
    for n_p in range(1, cfg.ni + 1):
        c = closed_form_populations(CollectiveSpec(cfg.ni, cfg.nf, n_p), theta)
        comparison.append({
            "n_p": n_p,
            "lambda_model_prefactor": n_p / cfg.ni,
            "reference_prefactor": n_p * cfg.ni / (n_p**2 + (cfg.ni - n_p) ** 2),
            "max_abs_difference": float(np.max(np.abs(c.p_e_reference - c.p_e))),
        })
    report["excited_population_prefactor_comparison"] = comparison
    report["max_deviation"] = worst
    return report


def run_oracle_check(cfg: RunConfig, workers=None):
    report = oracle_report(cfg)
    _write(cfg.out, json.dumps(report, indent=2) + "\n")
    if report["max_deviation"] > 1e-8:
        raise NumericalAccuracyError(
            f"oracle deviation {report['max_deviation']:.3e} exceeds 1e-8"
        )


RUNNERS = {
    "propagate": run_propagate,
    "optimize": run_optimize,
    "sweep-area": run_sweep_area,
    "sweep-subspace": run_sweep_subspace,
    "oracle-check": run_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manifold-control",
        description="Broadband population inversion between sublevel manifolds.",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("-c", "--config", help="config file or shipped figure name (e.g. fig1a)")
    parser.add_argument("--serial", action="store_true", help="evaluate sweeps serially")
    parser.add_argument("--echo-config", action="store_true",
                        help="print the resolved configuration and exit")
    parser.add_argument("--list-configs", action="store_true", help="list shipped figure configs")
    group = parser.add_argument_group("configuration keys")
    for name in _FIELDS:
        if name == "command":
            continue
        flags = {f"--{name}", f"--{name.replace('_', '-')}"}
        group.add_argument(*sorted(flags), dest=f"key_{name}", metavar="VALUE")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_configs:
        print("\n".join(shipped_configs()))
        return 0
    try:
        text = load_config_text(args.config) if args.config else ""
        overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("key_") and v is not None}
        if args.command:
            overrides["command"] = args.command
        cfg = parse_config(text, overrides)
        if args.echo_config:
            sys.stdout.write(cfg.to_text())
            return 0
        RUNNERS[cfg.command](cfg, 1 if args.serial else None)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationAccuracyError, NumericalAccuracyError) as exc:
        print(f"numerical accuracy error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
