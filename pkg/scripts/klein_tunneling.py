"""Tunneling through a linear potential: PDE, two-level sweep and closed form."""

import argparse
import time

from tachyon.analytic import tunneling_probability
from tachyon.evolution import scattering_run
from tachyon.landau_zener import LZConfig, lz_tunnel_probability
from tachyon.params import DiracParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mass", type=float, default=1.0)
    ap.add_argument("--g", type=float, default=2.0)
    ap.add_argument("--p-o", type=float, default=8.0)
    args = ap.parse_args()

    print(f"{'kind':8s} {'pde':>8s} {'two-level':>10s} {'closed':>8s} {'time':>6s}")
    for kind in ("normal", "tachyon"):
        start = time.perf_counter()
        params = DiracParams(args.mass, kind, potential_slope=args.g)
        pde = scattering_run(args.p_o, params).tunneled
        lz = lz_tunnel_probability(LZConfig(args.p_o, -args.p_o, args.g, DiracParams(args.mass, kind)))
        closed = tunneling_probability(params, args.g)
        print(f"{kind:8s} {pde:8.4f} {lz:10.4f} {closed:8.4f} {time.perf_counter() - start:5.1f}s")


if __name__ == "__main__":
    main()
