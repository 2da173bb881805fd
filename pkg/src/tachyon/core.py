"""Grids, spinor fields, initial-state builders and observable extraction."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable

import numpy as np

from .analytic import eigenspinors
from .errors import ConfigurationError, DegenerateStateError, DomainTooSmallError, IllConditionedPacketError
from .params import C, DiracParams

BOUNDARY_TAIL_TOL = 1e-12
EXCLUDED_WEIGHT_TOL = 1e-8


@dataclass(frozen=True)
class SpatialGrid:
    """Periodic grid centred on x = 0 with its FFT-ordered momentum dual."""

    n_points: int
    extent: float

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 16 or n & (n - 1):
            raise ConfigurationError(f"n_points must be a power of two >= 16, got {n}")
        if not self.extent > 0:
            raise ConfigurationError(f"extent must be > 0, got {self.extent}")

    @property
    def dx(self) -> float:
        return self.extent / self.n_points

    @property
    def dp(self) -> float:
        return 2 * np.pi / self.extent

    @property
    def p_max(self) -> float:
        return np.pi / self.dx

    @property
    def x(self) -> np.ndarray:
        return self.dx * (np.arange(self.n_points) - self.n_points // 2)

    @property
    def p(self) -> np.ndarray:
        """Momenta in FFT order (0, dp, ..., -dp)."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    def to_momentum(self, values: np.ndarray) -> np.ndarray:
        """Samples of sum_j f(x_j) exp(-i p_k x_j), FFT-ordered in k."""
        return np.fft.fft(np.fft.ifftshift(values, axes=-1), axis=-1)

    def to_position(self, values: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_momentum`: f(x_j) = (1/N) sum_k F_k exp(i p_k x_j)."""
        return np.fft.fftshift(np.fft.ifft(values, axis=-1), axes=-1)


def make_grid(n_points: int, extent: float) -> SpatialGrid:
    return SpatialGrid(int(n_points), float(extent))


class SpinorField:
    """Two-component wavefunction sampled on a :class:`SpatialGrid`.

    The amplitudes are stored as a read-only (2, n_points) array, row 0 for
    spin up.  Operations return new fields.
    """

    __slots__ = ("grid", "psi")

    def __init__(self, grid: SpatialGrid, psi):
        psi = np.array(psi, dtype=complex)
        if psi.shape != (2, grid.n_points):
            raise ConfigurationError(f"expected amplitudes of shape (2, {grid.n_points}), got {psi.shape}")
        psi.flags.writeable = False
        self.grid = grid
        self.psi = psi

    @property
    def up(self) -> np.ndarray:
        return self.psi[0]

    @property
    def down(self) -> np.ndarray:
        return self.psi[1]

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.dx)

    def scaled(self, factor: complex) -> "SpinorField":
        return SpinorField(self.grid, self.psi * factor)

    def normalized(self) -> "SpinorField":
        n = self.norm_sq
        if not n > 0:
            raise DegenerateStateError("cannot normalise a zero field")
        return self.scaled(1 / np.sqrt(n))

    def density(self) -> np.ndarray:
        """Renormalised probability density per unit length."""
        d = np.sum(np.abs(self.psi) ** 2, axis=0)
        return d / (d.sum() * self.grid.dx)

    def __repr__(self):
        return f"SpinorField(n_points={self.grid.n_points}, extent={self.grid.extent}, norm_sq={self.norm_sq:.6g})"


@dataclass(frozen=True)
class ObservableRecord:
    time: float
    mean_x: float
    mean_p: float
    mean_sigma_x: float
    mean_sigma_y: float
    mean_sigma_z: float
    correlation_xz: float
    norm_sq: float


SERIES_COLUMNS = tuple(f.name for f in fields(ObservableRecord))


@dataclass
class ObservableSeries:
    """Column-oriented time series of :class:`ObservableRecord` entries."""

    time: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray
    mean_sigma_x: np.ndarray
    mean_sigma_y: np.ndarray
    mean_sigma_z: np.ndarray
    correlation_xz: np.ndarray
    norm_sq: np.ndarray

    @classmethod
    def from_records(cls, records: Iterable[ObservableRecord]) -> "ObservableSeries":
        records = list(records)
        return cls(**{name: np.array([getattr(r, name) for r in records], dtype=float) for name in SERIES_COLUMNS})

    def __len__(self):
        return len(self.time)

    def __getitem__(self, i) -> ObservableRecord:
        return ObservableRecord(**{name: float(getattr(self, name)[i]) for name in SERIES_COLUMNS})

    def columns(self) -> dict:
        return {name: getattr(self, name) for name in SERIES_COLUMNS}

    def window(self, t_start: float, t_end: float) -> "ObservableSeries":
        keep = (self.time >= t_start - 1e-12) & (self.time <= t_end + 1e-12)
        return ObservableSeries(**{k: v[keep] for k, v in self.columns().items()})


def _check_fits(grid: SpatialGrid, psi: np.ndarray, what: str, tol: float = BOUNDARY_TAIL_TOL):
    dens = np.sum(np.abs(psi) ** 2, axis=0)
    dens = dens / dens.max()
    edge = max(dens[0], dens[-1])
    if edge > tol:
        raise DomainTooSmallError(f"{what} is clipped by the grid boundary (edge density {edge:.3g})")
    power = np.sum(np.abs(grid.to_momentum(psi)) ** 2, axis=0)
    power = power / power.max()
    nyq = power[grid.n_points // 2]
    if nyq > tol:
        raise DomainTooSmallError(f"{what} is not resolved: momentum tail {nyq:.3g} at p_max")


def _normalize(grid: SpatialGrid, psi: np.ndarray) -> np.ndarray:
    return psi / np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)


def gaussian_packet(grid: SpatialGrid, p_o: float, width: float, spinor, x0: float = 0.0) -> SpinorField:
    """Separable packet N exp(i p_o x) exp(-(x - x0)^2 / 4 width^2) * spinor."""
    if not width > 0:
        raise ConfigurationError(f"width must be > 0, got {width}")
    spinor = np.asarray(spinor, dtype=complex)
    if spinor.shape != (2,) or not np.isclose(np.linalg.norm(spinor), 1.0, atol=1e-10):
        raise ConfigurationError("spinor must be a normalised 2-vector")
    x = grid.x
    envelope = np.exp(1j * p_o * (x - x0) - (x - x0) ** 2 / (4 * width**2))
    psi = spinor[:, None] * envelope[None, :]
    _check_fits(grid, psi, "gaussian packet")
    return SpinorField(grid, _normalize(grid, psi))


def positive_energy_packet(
    grid: SpatialGrid,
    p_o: float,
    width: float,
    params: DiracParams,
    x0: float = 0.0,
    max_excluded_weight: float = EXCLUDED_WEIGHT_TOL,
    boundary_tol: float = BOUNDARY_TAIL_TOL,
) -> SpinorField:
    """Superposition of + branch eigenspinors with a Gaussian momentum profile.

    Discretises  int dp exp(-width^2 (p - p_o)^2) exp(i p (x - x0)) u_+(p)
    as a sum over the grid momenta.  For tachyons the modes with |p| <= mc
    (complex energies) are dropped; if they carry more than
    ``max_excluded_weight`` of the Gaussian weight the packet is rejected.
    The hard cut leaves slowly decaying tails in x when the band weight is not
    negligible, so ``boundary_tol`` usually has to be relaxed together with it.
    """
    if not width > 0:
        raise ConfigurationError(f"width must be > 0, got {width}")
    p = grid.p
    weight = np.exp(-(width**2) * (p - p_o) ** 2)
    if params.is_tachyon and params.mass > 0:
        band = np.abs(p) <= params.mass * C
        excluded = np.sum(weight[band] ** 2) / np.sum(weight**2)
        if excluded > max_excluded_weight:
            raise IllConditionedPacketError(
                f"{excluded:.3g} of the packet weight lies in the complex band |p| <= mc "
                f"(threshold {max_excluded_weight:g})"
            )
        weight = np.where(band, 0.0, weight)
    amps = eigenspinors(p, params, +1) * (weight * np.exp(-1j * p * x0))[None, :]
    psi = grid.to_position(amps)
    _check_fits(grid, psi, "positive-energy packet", boundary_tol)
    return SpinorField(grid, _normalize(grid, psi))


def observables(field: SpinorField, time: float = 0.0) -> ObservableRecord:
    """Expectation values on the renormalised state; norm_sq of the raw one."""
    psi = field.psi
    up, down = psi[0], psi[1]
    dens = np.abs(up) ** 2 + np.abs(down) ** 2
    total = dens.sum()
    if not total > 0:
        raise DegenerateStateError("observables of a zero-norm field are undefined")
    x = field.grid.x
    cross = np.conj(up) * down
    sz = (np.abs(up) ** 2 - np.abs(down) ** 2)
    mean_x = np.dot(x, dens) / total
    mean_sz = sz.sum() / total
    mean_xsz = np.dot(x, sz) / total
    power = np.abs(np.fft.fft(psi, axis=-1)) ** 2
    power_tot = power.sum(axis=0)
    mean_p = np.dot(field.grid.p, power_tot) / power_tot.sum()
    return ObservableRecord(
        time=float(time),
        mean_x=float(mean_x),
        mean_p=float(mean_p),
        mean_sigma_x=float(2 * cross.real.sum() / total),
        mean_sigma_y=float(2 * cross.imag.sum() / total),
        mean_sigma_z=float(mean_sz),
        correlation_xz=float(mean_xsz - mean_x * mean_sz),
        norm_sq=float(total * field.grid.dx),
    )
