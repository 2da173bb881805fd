"""Closed-form results for the 1+1D Dirac and Dirac-tachyon Hamiltonians.

These functions are the oracle layer: the PDE, Landau-Zener and ion solvers
are all checked against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import ComplexBandError, ConfigurationError, ExceptionalPointError
from .params import C, SIGMA_X, SIGMA_Z, DiracParams

EXCEPTIONAL_POINT_TOL = 1e-12


@dataclass(frozen=True)
class BranchEnergy:
    plus: complex
    minus: complex
    is_real: bool


@dataclass(frozen=True)
class DecayStatistics:
    mu: float
    p_success: float


def dirac_hamiltonian(p: float, params: DiracParams) -> np.ndarray:
    """2x2 momentum-space Hamiltonian c p sx + (m c^2 | -i m c^2) sz."""
    return C * p * SIGMA_X + params.mass_coefficient * SIGMA_Z


def _energy_squared(p, params: DiracParams):
    rest2 = params.rest_energy**2
    p2 = (C * np.asarray(p, dtype=float)) ** 2
    return p2 - rest2 if params.is_tachyon else p2 + rest2


def dispersion(p: float, params: DiracParams) -> BranchEnergy:
    """Both branch energies at momentum ``p``; complex inside the tachyon gap."""
    e2 = float(_energy_squared(p, params))
    plus = np.sqrt(complex(e2))
    return BranchEnergy(plus=plus, minus=-plus, is_real=e2 >= 0)


def branch_energies(p, params: DiracParams) -> np.ndarray:
    """Vectorised + branch energy (complex dtype) for an array of momenta."""
    return np.sqrt(_energy_squared(p, params).astype(complex))


def _phase_fix(u: np.ndarray) -> np.ndarray:
    # first component real and >= 0; fall back to the second when the first vanishes
    lead = np.where(u[0] != 0, u[0], u[1])
    # exact sign for real leads keeps real eigenvectors free of rounding noise
    phase = np.where(lead.imag == 0, np.where(lead.real < 0, -1.0, 1.0), np.exp(-1j * np.angle(lead)))
    u = u * phase
    first = u[0] != 0
    u[0] = np.where(first, u[0].real, u[0])
    u[1] = np.where(first, u[1], u[1].real)
    return u


def eigenspinors(p, params: DiracParams, branch: int = +1) -> np.ndarray:
    """Normalised right eigenvectors for an array of momenta, shape (2, n).

    Uses the adjugate of H - E: its columns span the eigenvector whenever the
    eigenvalue is simple.  At the massless, zero-momentum point the
    Hamiltonian vanishes and the p -> 0+ limit (1, +-1)/sqrt(2) is returned.
    No exceptional-point check is done here; see :func:`eigenspinor`.
    """
    if branch not in (+1, -1):
        raise ConfigurationError(f"branch must be +1 or -1, got {branch}")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    a = params.mass_coefficient
    e = branch * branch_energies(p, params)
    cp = C * p + 0j
    col0 = np.array([-a - e, -cp])
    col1 = np.array([-cp, a - e])
    n0 = np.linalg.norm(col0, axis=0)
    n1 = np.linalg.norm(col1, axis=0)
    u = np.where(n0 >= n1, col0, col1)
    norm = np.maximum(n0, n1)
    zero = norm == 0
    norm = np.where(zero, 1.0, norm)
    u = u / norm
    if np.any(zero):
        u[:, zero] = np.array([[1.0], [float(branch)]]) / math.sqrt(2)
    return _phase_fix(u)


def eigenspinor(p: float, params: DiracParams, branch: int = +1) -> np.ndarray:
    """Right eigenvector of H(p) on the requested branch.

    Raises
    ------
    ExceptionalPointError
        For a tachyon with |p| = mc, where H(p) is defective.
    """
    if params.is_tachyon and params.mass > 0:
        if abs((C * p) ** 2 - params.rest_energy**2) < EXCEPTIONAL_POINT_TOL:
            raise ExceptionalPointError(
                f"p={p} is an exceptional point of the tachyon Hamiltonian (|p| = mc)"
            )
    return eigenspinors(p, params, branch)[:, 0]


def group_velocity(p: float, params: DiracParams) -> float:
    """dE/dp on the + branch."""
    e2 = float(_energy_squared(p, params))
    if params.is_tachyon and e2 <= 0 and params.mass > 0:
        raise ComplexBandError(f"|p|={abs(p)} <= mc: tachyon energies are complex")
    if e2 == 0:
        return math.copysign(C, p) if p != 0 else 0.0
    return C**2 * p / math.sqrt(e2)


def tunneling_probability(params: DiracParams, g: float) -> float:
    """Transmission through a linear potential of slope g.

    normal: exp(-pi m^2 c^3 / g) (Sauter); tachyon: e^a / (2 e^a - 1) with
    a = pi m^2 c^3 / g.
    """
    if not g > 0:
        raise ConfigurationError(f"slope g must be > 0, got {g}")
    a = math.pi * params.mass**2 * C**3 / g
    if not params.is_tachyon:
        return math.exp(-a)
    # e^a / (2 e^a - 1) = 1 / (2 - e^-a), stable for large a
    return 1.0 / (2.0 - math.exp(-a))


def decay_statistics(m_prime: float, t_prime: float, n_ions: int = 1) -> DecayStatistics:
    """Mean decay count and zero-decay probability with <sz> set to 0."""
    if m_prime < 0 or t_prime < 0:
        raise ConfigurationError("m_prime and t_prime must be >= 0")
    if n_ions < 1:
        raise ConfigurationError("n_ions must be >= 1")
    mu = 2.0 * m_prime * t_prime * n_ions
    return DecayStatistics(mu=mu, p_success=math.exp(-mu))


def correlation_asymptote(p_o: float, params: DiracParams) -> float:
    """Large-p_o limit of <x sz> - <x><sz> for the positive-energy packet."""
    if not params.is_tachyon:
        return 0.0
    return -params.mass * C / (2.0 * p_o**2)


def correlation_exact(p_o: float, width: float, params: DiracParams, n: int = 4001) -> float:
    """Quadrature of the same correlation without the p_o >> mc expansion.

    For the tachyon positive-energy spinor the lower component carries the
    phase arg(E + i m c^2), whose p-derivative -m c / (p E) shifts it along x;
    the correlation is half the weighted mean of that derivative.
    """
    if not params.is_tachyon:
        return 0.0
    m = params.mass
    lo = max(m * C * (1 + 1e-9), p_o - 12.0 / width)
    p = np.linspace(lo, p_o + 12.0 / width, n)
    w = np.exp(-2.0 * width**2 * (p - p_o) ** 2)
    e = np.sqrt(p**2 - m**2)
    dtheta = -m / (p * e)
    return float(0.5 * trapezoid(w * dtheta, p) / trapezoid(w, p))
