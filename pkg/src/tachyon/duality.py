"""Spacetime duality between normal particles and tachyons.

With minimal coupling

    i d_t psi = [c (p - A) sx + m c^2 sz + phi] psi            (normal)
    i d_t psi = [c (p - A) sx - i m c^2 sz + phi] psi          (tachyon)

exchanging the roles of x and t maps a normal solution psi(x, t) with
potentials (phi, A) onto a tachyon solution

    psi'(x', t') = U^-1 psi(x = t', t = x'),   U = (I + i sx) / sqrt(2),

with phi'(x', t') = -A(t', x') and A'(x', t') = -phi(t', x').  A static
phi(x) = g x therefore becomes a time-dependent vector potential
A'(t') = -g t'.  (Here c = 1.)

Solutions live on stored (t, x) lattices and are checked through equation
residuals: each axis is differentiated spectrally when the lattice is
periodic along it and with 4th-order central differences otherwise.  The
dual swaps the axes together with their periodicity flags, so both sides
see identical stencils.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import branch_energies, eigenspinors
from .core import SpinorField
from .errors import ConfigurationError, ResolutionError
from .evolution import EvolutionConfig, SplitStepPropagator
from .params import C, DiracParams, MassType

U = (np.eye(2) + 1j * np.array([[0, 1], [1, 0]])) / math.sqrt(2)
U_INV = U.conj().T

# Yoshida triple jump: S(w1 h) S(w0 h) S(w1 h) is 4th order when S is Strang
_W1 = 1 / (2 - 2 ** (1 / 3))
_W0 = 1 - 2 * _W1


@dataclass(frozen=True)
class SpacetimeSolution:
    """Spinor samples psi[t_index, spin, x_index] on a uniform lattice.

    ``phi`` and ``A`` are sampled on the full (t, x) lattice.
    """

    values: np.ndarray
    t: np.ndarray
    x: np.ndarray
    params: DiracParams
    phi: np.ndarray
    A: np.ndarray
    periodic_t: bool = False
    periodic_x: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        nt, nx = len(self.t), len(self.x)
        if v.shape != (nt, 2, nx):
            raise ConfigurationError(f"values must have shape ({nt}, 2, {nx}), got {v.shape}")
        for name in ("phi", "A"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (nt, nx))
            object.__setattr__(self, name, arr)
        for axis in (self.t, self.x):
            steps = np.diff(axis)
            if axis.size < 5 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                raise ConfigurationError("lattice axes need >= 5 uniformly spaced points")
        object.__setattr__(self, "values", v)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def is_square(self) -> bool:
        return len(self.t) == len(self.x) and math.isclose(self.dt, self.dx, rel_tol=1e-12)


def _derivative(values: np.ndarray, axis: int, h: float, periodic: bool) -> np.ndarray:
    if periodic:
        n = values.shape[axis]
        k = 2 * np.pi * np.fft.fftfreq(n, d=h)
        shape = [1] * values.ndim
        shape[axis] = n
        return np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(values, axis=axis), axis=axis)
    f = np.moveaxis(values, axis, 0)
    d = np.full_like(f, np.nan)
    d[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    return np.moveaxis(d, 0, axis)


def residual_field(solution: SpacetimeSolution) -> np.ndarray:
    """Pointwise i d_t psi - H psi; NaN where a stencil leaves the lattice."""
    psi = solution.values
    dpsi_t = _derivative(psi, 0, solution.dt, solution.periodic_t)
    dpsi_x = _derivative(psi, 2, solution.dx, solution.periodic_x)
    flip = psi[:, ::-1, :]
    sx_dx = dpsi_x[:, ::-1, :]
    sz = np.array([1.0, -1.0])[None, :, None]
    A, phi = solution.A[:, None, :], solution.phi[:, None, :]
    h_psi = -1j * C * sx_dx - C * A * flip + solution.params.mass_coefficient * sz * psi + phi * psi
    return 1j * dpsi_t - h_psi


def equation_residual(solution: SpacetimeSolution) -> float:
    """max |i d_t psi - [c (p - A) sx + M sz + phi] psi| over interior points."""
    r = np.abs(residual_field(solution))
    return float(np.nanmax(np.max(r, axis=1)))


def swap_spacetime(solution: SpacetimeSolution, params: DiracParams | None = None) -> SpacetimeSolution:
    """Exchange x and t, conjugate the spinor with U^-1 and map (phi, A) -> (-A, -phi)."""
    swapped = np.transpose(solution.values, (2, 1, 0))
    return SpacetimeSolution(
        values=np.einsum("ij,tjx->tix", U_INV, swapped),
        t=solution.x.copy(),
        x=solution.t.copy(),
        params=params or solution.params,
        phi=-solution.A.T,
        A=-solution.phi.T,
        periodic_t=solution.periodic_x,
        periodic_x=solution.periodic_t,
    )


def dual_transform(solution: SpacetimeSolution) -> SpacetimeSolution:
    """Tachyon solution dual to a normal-mass ``solution`` on a square lattice.

    Applying the underlying swap twice gives U^-2 psi = -i sx psi, the
    original field up to a global unitary.
    """
    if solution.params.is_tachyon:
        raise ConfigurationError("dual_transform expects a normal-mass solution")
    if not solution.is_square:
        raise ConfigurationError(
            f"lattice must be square: n_t={len(solution.t)}, n_x={len(solution.x)}, "
            f"dt={solution.dt:.6g}, dx={solution.dx:.6g}"
        )
    return swap_spacetime(solution, solution.params.with_(mass_type=MassType.TACHYON, potential_slope=0.0))


def plane_wave_lattice(
    p: float, params: DiracParams, n: int, extent: float = 2 * math.pi, branch: int = +1
) -> SpacetimeSolution:
    """exp(i (p x - E t)) u(p) on an n x n lattice of side ``extent``.

    An axis is flagged periodic when the wave fits a whole number of periods
    into ``extent`` along it (p = 3, m = 4, E = 5 fits both for extent 2 pi).
    """
    e = branch * complex(branch_energies(p, params))
    if abs(e.imag) > 0:
        raise ConfigurationError(f"p={p} is inside the complex band")
    e = e.real
    u = eigenspinors(p, params, branch)[:, 0]
    axis = extent * np.arange(n) / n
    phase = np.exp(1j * (p * axis[None, :] - e * axis[:, None]))
    values = phase[:, None, :] * u[None, :, None]

    def fits(k):
        cycles = k * extent / (2 * np.pi)
        return abs(cycles - round(cycles)) < 1e-9

    return SpacetimeSolution(values, axis.copy(), axis.copy(), params, 0.0, 0.0, fits(e), fits(p))


def evolved_lattice(
    field: SpinorField,
    params: DiracParams,
    n: int,
    x_start: float | None = None,
    substeps: int = 16,
) -> SpacetimeSolution:
    """Square lattice from propagating ``field`` under ``params``.

    The lattice spacing equals the grid spacing dx in both directions.  Each
    lattice step is ``substeps`` 4th-order composite split steps, so the
    propagation error stays far below the residual stencil error.  The
    window covers n grid points from ``x_start`` (the whole periodic grid
    when n equals the number of grid points).
    """
    grid = field.grid
    h = grid.dx
    if n == grid.n_points:
        i0 = 0
    else:
        if x_start is None:
            raise ConfigurationError("x_start is required for a window smaller than the grid")
        i0 = int(np.searchsorted(grid.x, x_start - 1e-12 * h))
        if i0 + n > grid.n_points:
            raise ConfigurationError("lattice window extends beyond the grid")
    sub = h / substeps
    cfg = EvolutionConfig(params, dt=sub, t_final=h * (n - 1))
    outer = SplitStepPropagator(grid, cfg, dt=_W1 * sub)
    inner = SplitStepPropagator(grid, cfg, dt=_W0 * sub)
    psi = np.array(field.psi)
    rows = [psi[:, i0 : i0 + n]]
    for _ in range(n - 1):
        for _ in range(substeps):
            psi = outer.step(inner.step(outer.step(psi)))
        rows.append(psi[:, i0 : i0 + n])
    x = grid.x[i0 : i0 + n]
    t = h * np.arange(n)
    phi = params.potential_slope * np.broadcast_to(x, (n, n))
    return SpacetimeSolution(np.array(rows), t, x.copy(), params, phi, 0.0, False, n == grid.n_points)


@dataclass(frozen=True)
class ConvergenceReport:
    spacings: np.ndarray
    residuals: np.ndarray

    @property
    def orders(self) -> np.ndarray:
        return np.log(self.residuals[:-1] / self.residuals[1:]) / np.log(self.spacings[:-1] / self.spacings[1:])


def residual_convergence(solutions, min_order: float = 3.0) -> ConvergenceReport:
    """Residuals of successively refined lattices and their observed orders.

    Raises
    ------
    ResolutionError
        If the finest refinement converges slower than ``min_order``.
    """
    solutions = list(solutions)
    if len(solutions) < 2:
        raise ConfigurationError("need at least two lattices")
    report = ConvergenceReport(
        np.array([s.dt for s in solutions]), np.array([equation_residual(s) for s in solutions])
    )
    if not report.orders[-1] >= min_order:
        raise ResolutionError(
            f"residuals {report.residuals} converge at order {report.orders[-1]:.2f} < {min_order}; refine the lattice"
        )
    return report
