"""Separable tachyon packet: <x>(t), light-cone crossing and late-time slope."""

import argparse

from tachyon.analytic import eigenspinor, group_velocity
from tachyon.core import gaussian_packet, make_grid
from tachyon.evolution import EvolutionConfig, evolve, fit_slope, light_cone_crossing, velocity_residual
from tachyon.params import DiracParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p-o", type=float, default=3.5)
    ap.add_argument("--mass", type=float, default=2.0)
    ap.add_argument("--t-final", type=float, default=2.0)
    ap.add_argument("--dt", type=float, default=5e-4)
    args = ap.parse_args()

    params = DiracParams(args.mass, "tachyon")
    grid = make_grid(1024, 40.0)
    field = gaussian_packet(grid, args.p_o, 1.0, eigenspinor(args.p_o, params))
    s = evolve(field, EvolutionConfig(params, dt=args.dt, t_final=args.t_final)).series

    print(f"light-cone crossing : t' = {light_cone_crossing(s)}")
    print(f"late-time slope     : {fit_slope(s, 0.5, args.t_final):.5f}")
    print(f"group velocity      : {group_velocity(args.p_o, params):.5f}")
    print(f"velocity residual   : {velocity_residual(s, params):.2e}")
    print("\n   t'      <x>     <sx>   corr_xz   norm^2")
    for i in range(0, len(s), max(1, len(s) // 20)):
        rec = s[i]
        print(f"{rec.time:5.2f} {rec.mean_x:8.4f} {rec.mean_sigma_x:8.4f} {rec.correlation_xz:9.5f} {rec.norm_sq:8.4f}")


if __name__ == "__main__":
    main()
