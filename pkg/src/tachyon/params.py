"""Parameter containers shared by every solver.

Everything is in natural units: hbar = c = Delta = 1, so masses are m' = m c Delta
and times are t' = t c / Delta.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

C = 1.0

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


class MassType(str, enum.Enum):
    NORMAL = "normal"
    TACHYON = "tachyon"


@dataclass(frozen=True)
class DiracParams:
    """Mass magnitude, mass type and linear-potential slope.

    ``normal`` selects H = c p sx + m c^2 sz, ``tachyon`` selects
    H = c p sx - i m c^2 sz.  The potential is g x (times the identity).
    """

    mass: float = 0.0
    mass_type: MassType = MassType.NORMAL
    potential_slope: float = 0.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "mass_type", MassType(self.mass_type))
        except ValueError as exc:
            raise ConfigurationError(f"unknown mass_type {self.mass_type!r}") from exc
        if not np.isfinite(self.mass) or self.mass < 0:
            raise ConfigurationError(f"mass must be finite and >= 0, got {self.mass}")
        if not np.isfinite(self.potential_slope) or self.potential_slope < 0:
            raise ConfigurationError(
                f"potential_slope must be finite and >= 0, got {self.potential_slope}"
            )

    @property
    def is_tachyon(self) -> bool:
        return self.mass_type is MassType.TACHYON

    @property
    def rest_energy(self) -> float:
        return self.mass * C**2

    @property
    def mass_coefficient(self) -> complex:
        """Coefficient multiplying sigma_z in the Hamiltonian."""
        if self.is_tachyon:
            return -1j * self.rest_energy
        return complex(self.rest_energy)

    def with_(self, **changes) -> "DiracParams":
        fields = {
            "mass": self.mass,
            "mass_type": self.mass_type,
            "potential_slope": self.potential_slope,
        }
        fields.update(changes)
        return DiracParams(**fields)


@dataclass(frozen=True)
class NaturalUnits:
    """SI scales for display; computations never leave natural units.

    length_unit is the ground-state size Delta in metres, time_unit is
    Delta / c in seconds.
    """

    length_unit: float
    time_unit: float

    @property
    def speed_of_light(self) -> float:
        return self.length_unit / self.time_unit

    def length_to_si(self, x):
        return np.asarray(x) * self.length_unit

    def length_from_si(self, x_si):
        return np.asarray(x_si) / self.length_unit

    def time_to_si(self, t):
        return np.asarray(t) * self.time_unit

    def time_from_si(self, t_si):
        return np.asarray(t_si) / self.time_unit

    def mass_prime(self, rest_energy_si: float) -> float:
        """m' from a rest energy m c^2 given as an angular frequency (hbar = 1)."""
        return rest_energy_si * self.time_unit
