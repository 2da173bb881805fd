"""Split-step spectral propagation of the 1+1D Dirac / Dirac-tachyon equation.

    i d/dt psi = (c p sx + M sz + g x) psi,   M = m c^2 (normal) or -i m c^2 (tachyon)

Strang splitting: half a step of the position-diagonal part (mass and linear
potential), a full exact step of c p sx in momentum space, then the second
half step.  The state is never renormalised while stepping; the raw norm is
the no-decay probability of the conditioned dynamics.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field, replace
from typing import Iterator

import numpy as np

from .analytic import dispersion
from .core import ObservableSeries, SpatialGrid, SpinorField, make_grid, observables, positive_energy_packet
from .errors import ConfigurationError, InconclusiveScatteringError, InsufficientDataError
from .params import C, DiracParams

STABILITY_BOUND = 0.5
EDGE_FRACTION = 0.025
EDGE_TOL = 1e-10
SEPARATION_TOL = 1e-6


class BoundaryWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class EvolutionConfig:
    params: DiracParams
    dt: float = 5e-4
    t_final: float = 1.0
    sample_stride: int = 20
    snapshot_stride: int = 0

    def __post_init__(self):
        if not self.dt > 0 or not self.t_final >= 0:
            raise ConfigurationError("dt must be > 0 and t_final >= 0")
        if self.sample_stride < 1 or self.snapshot_stride < 0:
            raise ConfigurationError("sample_stride must be >= 1 and snapshot_stride >= 0")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def check_grid(self, grid: SpatialGrid):
        courant = self.dt * grid.p_max * C
        if courant >= STABILITY_BOUND:
            raise ConfigurationError(
                f"dt * p_max * c = {courant:.3g} violates the bound {STABILITY_BOUND} "
                f"(dt={self.dt}, p_max={grid.p_max:.4g})"
            )


@dataclass(frozen=True)
class Snapshot:
    time: float
    density: np.ndarray
    up: np.ndarray
    down: np.ndarray


@dataclass
class EvolutionResult:
    series: ObservableSeries
    snapshots: list
    final: SpinorField
    warnings: list = dc_field(default_factory=list)
    max_edge_probability: float = 0.0


class SplitStepPropagator:
    """Precomputed Strang factors for one grid and configuration.

    ``dt`` overrides ``config.dt`` and may be negative, which composition
    schemes built from Strang steps need.
    """

    def __init__(self, grid: SpatialGrid, config: EvolutionConfig, dt: float | None = None):
        dt = config.dt if dt is None else dt
        replace(config, dt=abs(dt)).check_grid(grid)
        self.grid = grid
        self.config = config
        params = config.params
        half = 0.5 * dt
        potential = np.exp(-1j * params.potential_slope * grid.x * half)
        mass = params.mass_coefficient
        # exp(-i M sz dt/2) is diagonal: exp(-i M dt/2) on up, exp(+i M dt/2) on down
        self.half_up = np.exp(-1j * mass * half) * potential
        self.half_down = np.exp(1j * mass * half) * potential
        p = grid.p
        self.cos = np.cos(C * p * dt)
        self.isin = 1j * np.sin(C * p * dt)

    def step(self, psi: np.ndarray) -> np.ndarray:
        up = psi[0] * self.half_up
        down = psi[1] * self.half_down
        a = np.fft.fft(up)
        b = np.fft.fft(down)
        up = np.fft.ifft(self.cos * a - self.isin * b) * self.half_up
        down = np.fft.ifft(self.cos * b - self.isin * a) * self.half_down
        return np.stack([up, down])

    def run(self, psi: np.ndarray, n_steps: int, stride: int = 1) -> Iterator[tuple[int, np.ndarray]]:
        """Yield (step_index, psi) at step 0, every ``stride`` steps and the last step."""
        psi = np.array(psi, dtype=complex)
        yield 0, psi
        for n in range(1, n_steps + 1):
            psi = self.step(psi)
            if n % stride == 0 or n == n_steps:
                yield n, psi


def step(field: SpinorField, config: EvolutionConfig) -> SpinorField:
    """One Strang step (second order in dt, each sub-step exact)."""
    prop = SplitStepPropagator(field.grid, config)
    return SpinorField(field.grid, prop.step(field.psi))


def edge_probability(field: SpinorField) -> float:
    """Renormalised probability in the outer EDGE_FRACTION of the box on each side."""
    dens = np.sum(np.abs(field.psi) ** 2, axis=0)
    k = max(1, int(EDGE_FRACTION * field.grid.n_points))
    return float((dens[:k].sum() + dens[-k:].sum()) / dens.sum())


def probability_current(field: SpinorField) -> np.ndarray:
    """c psi^dag sx psi on the renormalised state, per unit length."""
    psi = field.psi
    total = np.sum(np.abs(psi) ** 2) * field.grid.dx
    return 2 * C * np.real(np.conj(psi[0]) * psi[1]) / total


def evolve(field: SpinorField, config: EvolutionConfig) -> EvolutionResult:
    """Propagate to ``config.t_final`` recording observables and snapshots.

    Emits a :class:`BoundaryWarning` (and a warning record in the result) once
    the probability near the box edge exceeds EDGE_TOL, since the periodic
    domain would then wrap the packet.
    """
    grid = field.grid
    prop = SplitStepPropagator(grid, config)
    records, snapshots, notes = [], [], []
    max_edge = 0.0
    sample, snap = config.sample_stride, config.snapshot_stride
    stride = math.gcd(sample, snap) if snap else sample
    psi = field.psi
    for n, psi in prop.run(field.psi, config.n_steps, stride):
        t = n * config.dt
        current = SpinorField(grid, psi)
        last = n == config.n_steps
        if n % sample == 0 or last:
            records.append(observables(current, t))
            edge = edge_probability(current)
            max_edge = max(max_edge, edge)
            if edge > EDGE_TOL and not notes:
                msg = f"boundary density {edge:.3g} > {EDGE_TOL:g} at t={t:.4g}: packet may wrap"
                notes.append(msg)
                warnings.warn(msg, BoundaryWarning, stacklevel=2)
        if snap and (n % snap == 0 or last):
            d_up = np.abs(psi[0]) ** 2
            d_down = np.abs(psi[1]) ** 2
            norm = (d_up.sum() + d_down.sum()) * grid.dx
            snapshots.append(Snapshot(t, (d_up + d_down) / norm, d_up / norm, d_down / norm))
    return EvolutionResult(
        series=ObservableSeries.from_records(records),
        snapshots=snapshots,
        final=SpinorField(grid, psi),
        warnings=notes,
        max_edge_probability=max_edge,
    )


def velocity_rhs(series: ObservableSeries, params: DiracParams) -> np.ndarray:
    """c<sx> - 2 m c^2 (<x sz> - <x><sz>) for tachyons, c<sx> otherwise."""
    rhs = C * series.mean_sigma_x
    if params.is_tachyon:
        rhs = rhs - 2 * params.rest_energy * series.correlation_xz
    return rhs


def central_velocity(series: ObservableSeries) -> np.ndarray:
    """Second-order finite-difference d<x>/dt on interior samples (uniform spacing)."""
    t, x = series.time, series.mean_x
    return (x[2:] - x[:-2]) / (t[2:] - t[:-2])


def velocity_residual(series: ObservableSeries, params: DiracParams, max_spacing: float = 0.01) -> float:
    """Max |finite-difference d<x>/dt - velocity law| over interior samples."""
    if len(series) < 3:
        raise InsufficientDataError(f"need at least 3 samples, got {len(series)}")
    spacing = np.diff(series.time)
    if spacing.max() > max_spacing + 1e-12:
        raise InsufficientDataError(f"sample spacing {spacing.max():.3g} exceeds {max_spacing}")
    # the final sample may be closer than the stride; drop it to keep spacing uniform
    if len(series) > 3 and not np.isclose(spacing[-1], spacing[0]):
        series = series.window(series.time[0], series.time[-2])
    v = central_velocity(series)
    return float(np.max(np.abs(v - velocity_rhs(series, params)[1:-1])))


def superluminal_violations(series: ObservableSeries, params: DiracParams, eps: float) -> np.ndarray:
    """Times where |v| > c but |corr| <= (|v| - c)/(2 m c^2) - eps.

    Restates the velocity law as an inequality: superluminal motion requires
    spin-motion correlation.  An empty array means the inequality holds.
    """
    v = central_velocity(series)
    corr = np.abs(series.correlation_xz[1:-1])
    t = series.time[1:-1]
    fast = np.abs(v) > C
    if not fast.any():
        return np.array([])
    if params.rest_energy == 0:
        return t[fast]
    bound = (np.abs(v) - C) / (2 * params.rest_energy) - eps
    return t[fast & (corr <= bound)]


def fit_slope(series: ObservableSeries, t_start: float, t_end: float) -> float:
    """Least-squares slope of <x>(t) over [t_start, t_end]."""
    w = series.window(t_start, t_end)
    if len(w) < 2:
        raise InsufficientDataError("fit window contains fewer than two samples")
    return float(np.polyfit(w.time, w.mean_x, 1)[0])


def light_cone_crossing(series: ObservableSeries, tol: float = 0.0) -> float | None:
    """First sampled time t > 0 with <x>(t) - <x>(0) > c t + tol, or None."""
    excess = series.mean_x - series.mean_x[0] - C * series.time
    hits = np.nonzero((series.time > 0) & (excess > tol))[0]
    return float(series.time[hits[0]]) if hits.size else None


@dataclass
class ScatteringResult:
    result: EvolutionResult
    tunneled: float
    reflected: float
    x_cut: float
    t_separated: float


def scattering_run(
    p_o: float,
    params: DiracParams,
    config: EvolutionConfig | None = None,
    grid: SpatialGrid | None = None,
    width: float = 1.0,
    x0: float = 0.0,
) -> ScatteringResult:
    """Send a positive-energy packet into the potential g x and split the outcome.

    The cut sits at the classical turning point x0 + E/g.  The run stops once
    the probability current through the cut has dropped below SEPARATION_TOL
    of its peak; ``tunneled`` is the renormalised weight beyond the cut then.
    """
    g = params.potential_slope
    if not g > 0:
        raise ConfigurationError("scattering needs a positive potential slope")
    grid = grid or make_grid(2048, 60.0)
    config = config or EvolutionConfig(params=params, dt=5e-4, t_final=30.0, sample_stride=20)
    if config.params != params:
        config = EvolutionConfig(params, config.dt, config.t_final, config.sample_stride, config.snapshot_stride)
    energy = dispersion(p_o, params).plus
    if not dispersion(p_o, params).is_real:
        raise ConfigurationError(f"p_o={p_o} lies in the complex band")
    x_cut = x0 + energy.real / g
    if not grid.x[0] + 8 * width < x_cut < grid.x[-1] - 8 * width:
        raise ConfigurationError(f"turning point x={x_cut:.3g} is not inside the grid")
    field = positive_energy_packet(grid, p_o, width, params, x0=x0)
    prop = SplitStepPropagator(grid, config)
    i_cut = int(np.searchsorted(grid.x, x_cut))
    records, notes = [], []
    peak = 0.0
    t_transit = (x_cut - x0) / C
    max_edge = 0.0
    psi = field.psi
    for n, psi in prop.run(field.psi, config.n_steps, config.sample_stride):
        t = n * config.dt
        current = SpinorField(grid, psi)
        records.append(observables(current, t))
        edge = edge_probability(current)
        max_edge = max(max_edge, edge)
        if edge > EDGE_TOL and not notes:
            notes.append(f"boundary density {edge:.3g} > {EDGE_TOL:g} at t={t:.4g}: packet may wrap")
            warnings.warn(notes[-1], BoundaryWarning, stacklevel=2)
        j = abs(probability_current(current)[i_cut])
        peak = max(peak, j)
        if t > t_transit and j < SEPARATION_TOL * peak:
            dens = np.sum(np.abs(psi) ** 2, axis=0)
            total = dens.sum()
            tunneled = float(dens[i_cut:].sum() / total)
            reflected = float(dens[:i_cut].sum() / total)
            result = EvolutionResult(
                ObservableSeries.from_records(records), [], current, notes, max_edge
            )
            return ScatteringResult(result, tunneled, reflected, float(grid.x[i_cut]), t)
    raise InconclusiveScatteringError(
        f"lobes did not separate by t={config.t_final} (current {j:.3g}, peak {peak:.3g})"
    )
