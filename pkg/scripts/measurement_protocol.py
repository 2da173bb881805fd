"""Displacement protocol for <x sz> on a Fock-space image of the positive-energy packet."""

from tachyon.core import make_grid, positive_energy_packet
from tachyon.ion import fock_from_field, measure_correlation_protocol
from tachyon.params import DiracParams

grid = make_grid(1024, 40.0)
state = fock_from_field(positive_energy_packet(grid, 10.0, 1.0, DiracParams(1.0, "tachyon")), 256)
direct = state.observables().correlation_xz
print(f"direct correlation {direct:.7f}")
print("   k_max    estimate      error")
for k in (0.04, 0.02, 0.01, 0.005):
    res = measure_correlation_protocol(state, [-k, -k / 2, k / 2, k])
    print(f"{k:8.4f} {res.correlation:11.7f} {abs(res.correlation - direct):10.2e}")
