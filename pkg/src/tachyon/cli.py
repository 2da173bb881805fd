"""Command-line scenario runner.

Configuration is a flat ``key=value`` file (``#`` starts a comment).  Values
can be overridden by ``key=value`` tokens or ``--key value`` flags on the
command line, in that order of precedence.  Every run writes CSV tables and a
``manifest.cfg`` that is itself a valid config for the same run.

Exit status: 0 success, 2 configuration error, 3 numerical guard tripped,
4 statistics error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .analytic import (
    correlation_asymptote,
    correlation_exact,
    dispersion,
    eigenspinor,
    group_velocity,
    tunneling_probability,
)
from .core import SERIES_COLUMNS, ObservableSeries, gaussian_packet, make_grid, observables, positive_energy_packet
from .errors import ComplexBandError, ConfigurationError, InsufficientDataError, TachyonError
from .params import DiracParams, MassType

SCENARIOS = ("dispersion", "free", "correlation", "klein", "lz", "ion", "duality", "measurement", "sweep")


@dataclass(frozen=True)
class Option:
    name: str
    kind: type
    default: Any
    help: str
    choices: tuple = ()


OPTIONS = [
    Option("scenario", str, "free", "what to run", SCENARIOS),
    Option("output_dir", str, "tachyon-out", "directory for CSV, manifest and plots"),
    Option("seed", int, 0, "master seed for stochastic runs"),
    Option("emit_plots", bool, False, "also write SVG plots (needs matplotlib)"),
    Option("mass", float, None, "mass magnitude m' (natural units)"),
    Option("mass_type", str, "tachyon", "normal or tachyon", ("normal", "tachyon")),
    Option("p_o", float, None, "central momentum"),
    Option("width", float, 1.0, "packet width in units of Delta"),
    Option("x0", float, 0.0, "packet centre"),
    Option("packet", str, None, "gaussian (separable) or positive (+ branch only)", ("gaussian", "positive")),
    Option("g", float, None, "linear potential slope"),
    Option("n_points", int, None, "spatial grid points (power of two)"),
    Option("extent", float, None, "box length"),
    Option("dt", float, 5e-4, "split-step time step"),
    Option("t_final", float, None, "final time t'"),
    Option("sample_stride", int, 20, "steps between observable samples"),
    Option("snapshot_stride", int, 0, "steps between density snapshots (0: none)"),
    Option("slope_t0", float, 0.5, "start of the late-time slope fit"),
    Option("slope_t1", float, 2.0, "end of the late-time slope fit"),
    Option("p_min", float, -4.0, "dispersion table start"),
    Option("p_max", float, 4.0, "dispersion table end"),
    Option("n_p", int, 81, "dispersion table rows per mass type"),
    Option("lz_scale", float, 8.0, "ramp endpoints +-scale * max(1, m)"),
    Option("basis_order", int, 1, "0: plain eigenbasis, 1: superadiabatic endpoints", (0, 1)),
    Option("eta", float, 0.05, "Lamb-Dicke parameter"),
    Option("omega_tilde_hz", float, 100e3, "carrier strength / 2 pi"),
    Option("nu_hz", float, 1e6, "trap frequency / 2 pi"),
    Option("gamma_hz", float, 80e3, "optical pumping rate / 2 pi"),
    Option("gamma_d_ratio", float, 0.002, "pumping-error rate as a fraction of gamma"),
    Option("detuning_hz", float, 0.0, "common laser detuning / 2 pi"),
    Option("laser_phase", float, 0.0, "laser phase phi"),
    Option("delta_x", float, 3.4e-9, "ground-state size in metres"),
    Option("n_max", int, None, "Fock cutoff"),
    Option("readout_fidelity", float, 1.0, "probability a decay is detected"),
    Option("n_traj", int, 0, "quantum trajectories (0: conditioned evolution only)"),
    Option("mass_source", str, "decay", "ion mass from decay (tachyon) or detuning (normal)", ("decay", "detuning")),
    Option("compare_ideal", bool, True, "ion: also run the ideal Dirac solver"),
    Option("k_max", float, 0.02, "largest displacement strength in the protocol"),
    Option("lattice_n", int, 64, "duality: coarsest lattice size"),
    Option("lattice_levels", int, 2, "duality: number of refinement levels"),
    Option("base", str, "lz", "sweep: scenario run in every cell", SCENARIOS[:-1]),
    Option("workers", int, 1, "sweep: worker processes"),
]
SCHEMA = {o.name: o for o in OPTIONS}

SCENARIO_DEFAULTS = {
    "dispersion": {"mass": 1.0},
    "free": {"mass": 2.0, "p_o": 3.5, "packet": "gaussian", "t_final": 2.0, "n_points": 1024, "extent": 40.0},
    "correlation": {"mass": 1.0, "p_o": 10.0, "packet": "positive", "n_points": 1024, "extent": 40.0},
    "klein": {"mass": 1.0, "p_o": 8.0, "g": 2.0, "t_final": 30.0, "n_points": 2048, "extent": 60.0},
    "lz": {"mass": 1.0, "g": 2.0},
    "ion": {"p_o": 3.5, "t_final": 1.0, "n_max": 128},
    "duality": {"mass": 1.0, "p_o": 3.0, "g": 2.0},
    "measurement": {"mass": 1.0, "p_o": 10.0, "n_points": 1024, "extent": 40.0},
}
GENERIC_DEFAULTS = {
    "mass": 1.0, "p_o": 3.5, "g": 2.0, "t_final": 1.0, "n_points": 1024,
    "extent": 40.0, "packet": "gaussian", "n_max": 128,
}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(option: Option, text: str):
    try:
        if option.kind is bool:
            value = _parse_bool(text)
        elif option.kind is int:
            value = int(text)
        elif option.kind is float:
            value = float(text)
        else:
            value = text.strip()
    except ValueError as exc:
        raise ConfigurationError(f"{option.name}: {exc}") from exc
    if option.choices and value not in option.choices:
        raise ConfigurationError(f"{option.name} must be one of {option.choices}, got {value!r}")
    return value


def parse_config_text(text: str) -> dict[str, str]:
    """Raw key -> string mapping from ``key=value`` lines."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def _split_sweeps(raw: dict[str, str]) -> tuple[dict[str, str], dict[str, str]]:
    plain, sweeps = {}, {}
    for key, value in raw.items():
        if key.startswith("sweep_"):
            sweeps[key[len("sweep_"):]] = value
        else:
            plain[key] = value
    return plain, sweeps


def resolve(raw: dict[str, str]) -> dict[str, Any]:
    """Typed, fully defaulted config; unknown keys are an error.

    ``sweep_<key>`` entries hold comma-separated values of ``<key>`` and
    are kept as lists under their original name.
    """
    plain, sweeps = _split_sweeps(raw)
    unknown = sorted(set(plain) - set(SCHEMA)) + sorted(f"sweep_{k}" for k in set(sweeps) - set(SCHEMA))
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {name: (_convert(SCHEMA[name], plain[name]) if name in plain else None) for name in SCHEMA}
    for name, opt in SCHEMA.items():
        if cfg[name] is None and opt.default is not None:
            cfg[name] = opt.default
    scenario = cfg["base"] if cfg["scenario"] == "sweep" else cfg["scenario"]
    for name, value in {**GENERIC_DEFAULTS, **SCENARIO_DEFAULTS.get(scenario, {})}.items():
        if cfg[name] is None:
            cfg[name] = value
    if scenario == "measurement" and "n_max" not in plain:
        cfg["n_max"] = int(max(64, math.ceil((cfg["p_o"] + 6) ** 2)))
    if cfg["scenario"] == "sweep":
        if not sweeps:
            raise ConfigurationError("sweep needs at least one sweep_<key>=v1,v2,... entry")
        cfg["sweep"] = {k: [_convert(SCHEMA[k], v) for v in sweeps[k].split(",")] for k in sorted(sweeps)}
    elif sweeps:
        raise ConfigurationError("sweep_<key> entries are only valid with scenario=sweep")
    return cfg


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def manifest_text(cfg: dict[str, Any], extra: dict[str, Any] | None = None) -> str:
    lines = [f"# tachyon-sim {__version__}"]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: {format_value(value)}")
    for key in SCHEMA:
        lines.append(f"{key}={format_value(cfg[key])}")
    for key, values in cfg.get("sweep", {}).items():
        lines.append(f"sweep_{key}=" + ",".join(format_value(v) for v in values))
    return "\n".join(lines) + "\n"


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([format_value(v) for v in row])
        return buf.getvalue()


@dataclass
class ScenarioOutput:
    summary: dict[str, Any]
    tables: dict[str, Table] = field(default_factory=dict)
    series: ObservableSeries | None = None


def _dirac(cfg, slope: float = 0.0) -> DiracParams:
    return DiracParams(cfg["mass"], cfg["mass_type"], slope)


def _series_table(series: ObservableSeries, extra: dict[str, np.ndarray] | None = None) -> Table:
    cols = list(SERIES_COLUMNS) + list(extra or {})
    data = [series.columns()[c] for c in SERIES_COLUMNS] + list((extra or {}).values())
    return Table(cols, [list(r) for r in zip(*data)])


def _snapshot_table(snapshots) -> Table:
    t = Table(["t", "x", "density", "up", "down"])
    for s in snapshots:
        for row in zip(itertools.repeat(s.time), s.x, s.density, s.up, s.down):
            t.rows.append(list(row))
    return t


@dataclass
class _Snap:
    time: float
    x: np.ndarray
    density: np.ndarray
    up: np.ndarray
    down: np.ndarray


def run_dispersion(cfg) -> ScenarioOutput:
    table = Table(["p", "mass_type", "e_plus_re", "e_plus_im", "e_minus_re", "e_minus_im", "group_velocity"])
    ps = np.round(np.linspace(cfg["p_min"], cfg["p_max"], cfg["n_p"]), 12)
    for kind in ("normal", "tachyon"):
        params = DiracParams(cfg["mass"], kind)
        for p in ps:
            e = dispersion(float(p), params)
            try:
                v = group_velocity(float(p), params)
            except ComplexBandError:
                v = float("nan")
            table.rows.append([float(p), kind, e.plus.real, e.plus.imag, e.minus.real, e.minus.imag, v])
    e_branch = dispersion(cfg["mass"], DiracParams(cfg["mass"], "tachyon")).plus
    return ScenarioOutput({"mass": cfg["mass"], "tachyon_energy_at_p_eq_m": abs(e_branch)}, {"dispersion": table})


def _packet(cfg, grid, params):
    if cfg["packet"] == "positive":
        return positive_energy_packet(grid, cfg["p_o"], cfg["width"], params, x0=cfg["x0"])
    return gaussian_packet(grid, cfg["p_o"], cfg["width"], eigenspinor(cfg["p_o"], params, +1), x0=cfg["x0"])


def _velocity_residual_or_nan(series, params) -> float:
    from .evolution import velocity_residual

    # the check needs samples at most 0.01 apart; coarser runs just skip it
    try:
        return velocity_residual(series, params)
    except InsufficientDataError:
        return float("nan")


def run_free(cfg) -> ScenarioOutput:
    from .evolution import EvolutionConfig, evolve, fit_slope, light_cone_crossing

    params = _dirac(cfg)
    grid = make_grid(cfg["n_points"], cfg["extent"])
    config = EvolutionConfig(params, cfg["dt"], cfg["t_final"], cfg["sample_stride"], cfg["snapshot_stride"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = evolve(_packet(cfg, grid, params), config)
    s = res.series
    t1 = min(cfg["slope_t1"], cfg["t_final"])
    slope = fit_slope(s, cfg["slope_t0"], t1) if t1 > cfg["slope_t0"] else float("nan")
    crossing = light_cone_crossing(s)
    try:
        v_g = group_velocity(cfg["p_o"], params)
    except ComplexBandError:
        v_g = float("nan")
    summary = {
        "late_time_slope": slope,
        "group_velocity": v_g,
        "initial_velocity": float(np.gradient(s.mean_x, s.time)[0]) if len(s) > 1 else float("nan"),
        "light_cone_crossing": crossing if crossing is not None else float("nan"),
        "velocity_residual": _velocity_residual_or_nan(s, params),
        "final_norm_sq": float(s.norm_sq[-1]),
        "max_edge_probability": res.max_edge_probability,
        "boundary_warnings": len(res.warnings),
    }
    velocity = np.gradient(s.mean_x, s.time) if len(s) > 1 else np.zeros(len(s))
    snaps = [_Snap(sn.time, grid.x, sn.density, sn.up, sn.down) for sn in res.snapshots]
    tables = {"series": _series_table(s, {"velocity": velocity})}
    if snaps:
        tables["snapshots"] = _snapshot_table(snaps)
    return ScenarioOutput(summary, tables, s)


def run_correlation(cfg) -> ScenarioOutput:
    params = _dirac(cfg)
    grid = make_grid(cfg["n_points"], cfg["extent"])
    f = _packet(cfg, grid, params)
    rec = observables(f)
    dens = f.density()
    norm = np.sum(np.abs(f.psi) ** 2) * grid.dx
    snap = _Snap(0.0, grid.x, dens, np.abs(f.up) ** 2 / norm, np.abs(f.down) ** 2 / norm)
    asym = correlation_asymptote(cfg["p_o"], params)
    summary = {
        "correlation_xz": rec.correlation_xz,
        "asymptote": asym,
        "quadrature": correlation_exact(cfg["p_o"], cfg["width"], params),
        "peak_up": float(grid.x[np.argmax(snap.up)]),
        "peak_down": float(grid.x[np.argmax(snap.down)]),
    }
    return ScenarioOutput(summary, {"snapshots": _snapshot_table([snap])})


def run_klein(cfg) -> ScenarioOutput:
    from .evolution import EvolutionConfig, scattering_run
    from .landau_zener import default_config, lz_tunnel_probability

    params = _dirac(cfg, cfg["g"])
    grid = make_grid(cfg["n_points"], cfg["extent"])
    config = EvolutionConfig(params, cfg["dt"], cfg["t_final"], cfg["sample_stride"], cfg["snapshot_stride"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sc = scattering_run(cfg["p_o"], params, config, grid, cfg["width"], cfg["x0"])
    lz_cfg = default_config(params, cfg["g"], cfg["lz_scale"])
    summary = {
        "tunneled": sc.tunneled,
        "reflected": sc.reflected,
        "closed_form": tunneling_probability(params, cfg["g"]),
        "lz": lz_tunnel_probability(lz_cfg),
        "x_cut": sc.x_cut,
        "t_separated": sc.t_separated,
    }
    return ScenarioOutput(summary, {"series": _series_table(sc.result.series)}, sc.result.series)


def run_lz(cfg) -> ScenarioOutput:
    from .landau_zener import LZConfig, branch_populations, default_config, lz_evolve

    params = _dirac(cfg)
    base = default_config(params, cfg["g"], cfg["lz_scale"])
    lz_cfg = LZConfig(base.p_start, base.p_end, base.g, params, basis_order=cfg["basis_order"])
    state = lz_evolve(lz_cfg)
    pops = branch_populations(state, params, cfg["g"] if cfg["basis_order"] else 0.0)
    summary = {
        "p_start": lz_cfg.p_start,
        "p_end": lz_cfg.p_end,
        "lz": pops.minus,
        "closed_form": tunneling_probability(params, cfg["g"]),
        "final_norm_sq": state.norm_sq,
    }
    return ScenarioOutput(summary)


def _ion_params(cfg):
    from .ion import IonParams

    two_pi = 2 * math.pi
    return IonParams(
        eta=cfg["eta"],
        omega_tilde=two_pi * cfg["omega_tilde_hz"],
        nu=two_pi * cfg["nu_hz"],
        delta=two_pi * cfg["detuning_hz"],
        phi=cfg["laser_phase"],
        gamma=two_pi * cfg["gamma_hz"],
        gamma_d=cfg["gamma_d_ratio"] * two_pi * cfg["gamma_hz"],
        delta_x=cfg["delta_x"],
        n_max=cfg["n_max"],
        readout_fidelity=cfg["readout_fidelity"],
    )


def run_ion(cfg) -> ScenarioOutput:
    from .evolution import EvolutionConfig, evolve, light_cone_crossing
    from .ion import evolve_conditioned, coherent_initial_state, ideal_mapping, run_trajectories, sigma_z_form_norm_sq

    ion = _ion_params(cfg)
    mapping = ideal_mapping(ion, cfg["mass_source"])
    dirac = mapping.dirac
    initial = coherent_initial_state(cfg["p_o"], dirac, ion.n_max)
    run = evolve_conditioned(initial, ion, cfg["t_final"])
    gamma = ion.natural("gamma")
    s = run.series
    summary = {
        "c_si": mapping.speed_of_light,
        "time_unit_s": mapping.time_unit,
        "m_prime": mapping.m_prime,
        "success_probability": run.success_probability,
        "sigma_z_form_norm_sq": float(sigma_z_form_norm_sq(run.success_probability, s.time[-1], gamma)),
        "analytic_success": math.exp(-0.5 * gamma * s.time[-1]),
        "max_truncation": run.max_truncation,
    }
    tables = {"series": _series_table(s)}
    if cfg["compare_ideal"]:
        grid = make_grid(cfg["n_points"], cfg["extent"])
        ideal_cfg = EvolutionConfig(dirac, cfg["dt"], cfg["t_final"], cfg["sample_stride"])
        f = gaussian_packet(grid, cfg["p_o"], 1.0, eigenspinor(cfg["p_o"], dirac, +1))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ideal = evolve(f, ideal_cfg).series
        x_ideal = np.interp(s.time, ideal.time, ideal.mean_x)
        summary["ideal_deviation_x"] = float(np.max(np.abs(s.mean_x - x_ideal)) / np.max(np.abs(x_ideal)))
    if cfg["n_traj"] > 0:
        ens = run_trajectories(ion, initial, cfg["t_final"], cfg["n_traj"], cfg["seed"])
        e = ens.series
        summary.update(
            n_traj=ens.n_total,
            n_no_jump=ens.n_no_jump,
            n_heralded=ens.n_heralded,
            no_jump_fraction=ens.no_jump_fraction,
            binomial_sigma=ens.binomial_sigma(run.success_probability),
            n_pumping_errors=int(np.sum(ens.jump_channels == "pumping")),
        )
        crossing = light_cone_crossing(e)
        summary["ensemble_light_cone_crossing"] = crossing if crossing is not None else float("nan")
        tables["ensemble"] = _series_table(e)
        jumps = Table(["trajectory", "time", "channel"])
        jumps.rows = [list(r) for r in zip(ens.jump_trajectory, ens.jump_times, ens.jump_channels)]
        tables["jumps"] = jumps
    return ScenarioOutput(summary, tables, s)


def run_duality(cfg) -> ScenarioOutput:
    from .duality import dual_transform, equation_residual, evolved_lattice, plane_wave_lattice, residual_convergence

    table = Table(["case", "n", "spacing", "source_residual", "dual_residual", "ratio"])
    pw = plane_wave_lattice(3.0, DiracParams(4.0), cfg["lattice_n"])
    r_src, r_dual = equation_residual(pw), equation_residual(dual_transform(pw))
    table.rows.append(["plane_wave", cfg["lattice_n"], pw.dx, r_src, r_dual, r_dual / r_src])
    params = DiracParams(cfg["mass"], MassType.NORMAL, cfg["g"])
    window = 4.0
    sources, duals = [], []
    for level in range(cfg["lattice_levels"]):
        n = cfg["lattice_n"] * 2**level
        h = window / n
        grid = make_grid(int(round(32.0 / h)), 32.0)
        f = positive_energy_packet(grid, cfg["p_o"], cfg["width"], params, x0=-window / 2)
        src = evolved_lattice(f, params, n, x_start=-window)
        dual = dual_transform(src)
        sources.append(src)
        duals.append(dual)
        rs, rd = equation_residual(src), equation_residual(dual)
        table.rows.append(["linear_potential", n, h, rs, rd, rd / rs])
    summary = {"plane_wave_dual_residual": r_dual, "worst_ratio": max(r[5] for r in table.rows[1:])}
    if len(sources) >= 2:
        summary["source_order"] = float(residual_convergence(sources).orders[-1])
        summary["dual_order"] = float(residual_convergence(duals).orders[-1])
    return ScenarioOutput(summary, {"residuals": table})


def run_measurement(cfg) -> ScenarioOutput:
    from .ion import fock_from_field, measure_correlation_protocol

    params = _dirac(cfg)
    grid = make_grid(cfg["n_points"], cfg["extent"])
    state = fock_from_field(positive_energy_packet(grid, cfg["p_o"], cfg["width"], params), cfg["n_max"])
    k = cfg["k_max"]
    table = Table(["k_max", "estimate", "direct", "error"])
    direct = state.observables().correlation_xz
    for scale in (1.0, 0.5):
        ks = scale * k * np.array([-1.0, -0.5, 0.5, 1.0])
        est = measure_correlation_protocol(state, ks).correlation
        table.rows.append([scale * k, est, direct, est - direct])
    summary = {"direct": direct, "estimate": table.rows[0][1], "error": table.rows[0][3],
               "error_ratio": table.rows[0][3] / table.rows[1][3] if table.rows[1][3] else float("nan")}
    return ScenarioOutput(summary, {"protocol": table})


RUNNERS: dict[str, Callable[[dict], ScenarioOutput]] = {
    "dispersion": run_dispersion,
    "free": run_free,
    "correlation": run_correlation,
    "klein": run_klein,
    "lz": run_lz,
    "ion": run_ion,
    "duality": run_duality,
    "measurement": run_measurement,
}


def _sweep_cell(args):
    cfg, overrides = args
    cell = dict(cfg, **overrides, scenario=cfg["base"])
    return RUNNERS[cfg["base"]](cell).summary


def run_sweep(cfg) -> ScenarioOutput:
    axes = cfg["sweep"]
    keys = list(axes)
    cells = [dict(zip(keys, combo)) for combo in itertools.product(*(axes[k] for k in keys))]
    jobs = [(cfg, c) for c in cells]
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            summaries = list(pool.map(_sweep_cell, jobs))
    else:
        summaries = [_sweep_cell(j) for j in jobs]
    columns = keys + list(summaries[0])
    table = Table(columns, [[c[k] for k in keys] + list(s.values()) for c, s in zip(cells, summaries)])
    return ScenarioOutput({"cells": len(cells)}, {"summary": table})


RUNNERS["sweep"] = run_sweep


def run(cfg: dict[str, Any]) -> ScenarioOutput:
    return RUNNERS[cfg["scenario"]](cfg)


def _write_atomic(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_outputs(cfg, out: ScenarioOutput, wall_time: float) -> Path:
    outdir = Path(cfg["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    tables = dict(out.tables)
    if "summary" not in tables:
        tables["summary"] = Table(list(out.summary), [list(out.summary.values())])
    for name, table in tables.items():
        _write_atomic(outdir / f"{name}.csv", table.to_csv())
    extra = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"), "wall_time_s": round(wall_time, 3)}
    _write_atomic(outdir / "manifest.cfg", manifest_text(cfg, extra))
    if cfg["emit_plots"]:
        try:
            _plot(cfg, out, outdir)
        except Exception as exc:  # plots never change the exit status
            print(f"warning: plotting failed: {exc}", file=sys.stderr)
    return outdir


def _plot(cfg, out: ScenarioOutput, outdir: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if out.series is not None:
        s = out.series
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(s.time, s.mean_x, label="<x>")
        ax.plot(s.time, s.mean_x[0] + s.time, "k--", lw=0.8, label="light cone")
        ax.set_xlabel("t'")
        ax.set_ylabel("<x>")
        ax.legend()
        fig.tight_layout()
        fig.savefig(outdir / "series.svg")
        plt.close(fig)
    if "dispersion" in out.tables:
        t = out.tables["dispersion"]
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for kind in ("normal", "tachyon"):
            rows = [r for r in t.rows if r[1] == kind]
            ax.plot([r[0] for r in rows], [r[2] for r in rows], label=f"{kind} Re E+")
        ax.set_xlabel("p")
        ax.set_ylabel("E")
        ax.legend()
        fig.tight_layout()
        fig.savefig(outdir / "dispersion.svg")
        plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tachyon-sim",
        description="Run Dirac / Dirac-tachyon scenarios and write CSV results.",
    )
    parser.add_argument("items", nargs="*", help="optional config file followed by key=value overrides")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--manifest-only", action="store_true", help="print the resolved config and exit")
    for opt in OPTIONS:
        parser.add_argument(f"--{opt.name.replace('_', '-')}", dest=f"opt_{opt.name}", metavar="VALUE", help=opt.help)
    return parser


def gather(args) -> dict[str, str]:
    raw: dict[str, str] = {}
    overrides: dict[str, str] = {}
    config_path = None
    for item in args.items:
        if "=" in item:
            key, value = item.split("=", 1)
            overrides[key.strip()] = value.strip()
        elif config_path is None:
            config_path = item
        else:
            raise ConfigurationError(f"unexpected argument {item!r}")
    if config_path is not None:
        try:
            raw.update(parse_config_text(Path(config_path).read_text(encoding="utf-8")))
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {config_path}: {exc}") from exc
    raw.update(overrides)
    for opt in OPTIONS:
        value = getattr(args, f"opt_{opt.name}")
        if value is not None:
            raw[opt.name] = value
    return raw


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_intermixed_args(argv)
    try:
        cfg = resolve(gather(args))
        if args.manifest_only:
            sys.stdout.write(manifest_text(cfg))
            return 0
        start = time.perf_counter()
        out = run(cfg)
        outdir = write_outputs(cfg, out, time.perf_counter() - start)
    except TachyonError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    summary = ", ".join(f"{k}={format_value(v)}" for k, v in out.summary.items())
    print(f"{cfg['scenario']}: {summary}")
    print(f"wrote {outdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
