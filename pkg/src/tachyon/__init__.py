"""Dirac and Dirac-tachyon dynamics in 1+1D, with a trapped-ion realisation.

Natural units hbar = c = Delta = 1 throughout.  Submodules:

- ``params``, ``core``: parameters, grids, spinor fields, observables
- ``analytic``: closed-form dispersions, tunneling and decay statistics
- ``evolution``: split-step propagation, velocity-law checks, scattering
- ``landau_zener``: momentum-space two-level reduction of scattering
- ``ion``: sideband Hamiltonian, conditioned evolution, quantum trajectories
- ``duality``: normal <-> tachyon spacetime duality and equation residuals
- ``cli``: scenario runner
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    NumericalGuardError,
    StatisticsError,
    TachyonError,
)
from .params import DiracParams, MassType, NaturalUnits  # noqa: E402

__all__ = [
    "ConfigurationError",
    "DiracParams",
    "MassType",
    "NaturalUnits",
    "NumericalGuardError",
    "StatisticsError",
    "TachyonError",
    "__version__",
]
