"""Spin-motion correlation of the positive-energy packet versus p_o."""

from tachyon.analytic import correlation_asymptote, correlation_exact
from tachyon.core import make_grid, observables, positive_energy_packet
from tachyon.params import DiracParams

grid = make_grid(2048, 40.0)
print("  p_o     grid packet     quadrature    -m/(2 p_o^2)")
for kind in ("tachyon", "normal"):
    params = DiracParams(1.0, kind)
    print(kind)
    for p_o in (5.0, 10.0, 20.0, 40.0):
        corr = observables(positive_energy_packet(grid, p_o, 1.0, params)).correlation_xz
        print(f"{p_o:5.1f} {corr:14.3e} {correlation_exact(p_o, 1.0, params):14.3e} {correlation_asymptote(p_o, params):14.3e}")
