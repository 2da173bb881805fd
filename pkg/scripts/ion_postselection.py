"""Trapped-ion tachyon: conditioned evolution, heralding and error channels."""

import argparse
import math

import numpy as np

from tachyon.evolution import light_cone_crossing
from tachyon.ion import IonParams, evolve_conditioned, coherent_initial_state, ideal_mapping, run_trajectories


def fmt(t):
    return "none" if t is None else f"{t:.3f}"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-traj", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--t-final", type=float, default=1.0)
    args = ap.parse_args()

    params = IonParams()
    mapping = ideal_mapping(params)
    print(f"c = {mapping.speed_of_light:.3e} m/s, Delta/c = {mapping.time_unit * 1e6:.2f} us, m' = {mapping.m_prime:.3f}")
    initial = coherent_initial_state(3.5, mapping.dirac, params.n_max)
    run = evolve_conditioned(initial, params, args.t_final)
    gamma = params.natural("gamma")
    print(f"success probability {run.success_probability:.4f} (exp(-gamma t/2) = {math.exp(-0.5 * gamma * args.t_final):.4f})")
    print(f"conditioned crossing t' = {fmt(light_cone_crossing(run.series))}")

    reference = None
    for label, p in [
        ("gamma_d = 0", params.with_(gamma_d=0.0)),
        ("gamma_d = 0.002 gamma", params),
        ("gamma_d = 0.1 gamma", params.with_(gamma_d=0.1 * params.gamma)),
        ("readout F = 0.995", params.with_(readout_fidelity=0.995)),
    ]:
        ens = run_trajectories(p, initial, args.t_final, args.n_traj, args.seed)
        s = ens.series
        if reference is None:
            reference = s
        dev = np.max(np.abs(s.mean_x - reference.mean_x)) / np.max(np.abs(reference.mean_x))
        print(
            f"{label:22s} heralded {ens.n_heralded:5d}/{ens.n_total}  "
            f"<x>(t') deviation {dev:6.2%}  crossing {fmt(light_cone_crossing(s))}"
        )


if __name__ == "__main__":
    main()
