"""Equation residuals of normal solutions and their tachyon duals under refinement."""

from tachyon.core import make_grid, positive_energy_packet
from tachyon.duality import dual_transform, equation_residual, evolved_lattice, plane_wave_lattice
from tachyon.params import DiracParams

pw = plane_wave_lattice(3.0, DiracParams(4.0), 64)
print(f"plane wave: source {equation_residual(pw):.1e}, dual {equation_residual(dual_transform(pw)):.1e}")

for g in (0.0, 2.0):
    params = DiracParams(1.0, potential_slope=g)
    print(f"\nphi = {g} x")
    print("    n    spacing      source        dual")
    for n in (64, 128, 256):
        h = 4.0 / n
        grid = make_grid(int(round(32.0 / h)), 32.0)
        src = evolved_lattice(positive_energy_packet(grid, 3.0, 1.0, params, x0=-2.0), params, n, x_start=-4.0)
        print(f"{n:5d} {h:10.5f} {equation_residual(src):11.3e} {equation_residual(dual_transform(src)):11.3e}")
