"""Benchmark the compiled stepping kernel against the numpy reference path.

Runs the same seeded lattice integration through both backends, reports
steps/second and the maximum elementwise deviation between the final
configurations (which should sit at round-off level).

Usage: python3 benchmarks/backend_bench.py [--n 3] [--replicas 256]
       [--steps 2000] [--h 1e-3]
"""

import argparse
import time

import numpy as np

from hypolattice.interactions import InteractionSpec
from hypolattice.lattice import Box
from hypolattice.simulate import HAVE_KERNELS, LatticeSystem, NoisePlan, simulate


def run(backend, system, plan, replicas):
    state0 = system.initial_state(0.5)
    start = time.perf_counter()
    traj = simulate(system, state0, plan, record=["config"],
                    record_stride=plan.n_steps, replicas=replicas,
                    backend=backend)
    elapsed = time.perf_counter() - start
    return elapsed, traj.configs[-1]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=3, help="box size")
    parser.add_argument("--replicas", type=int, default=256)
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--h", type=float, default=1e-3)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    box = Box(d=1, r=1, n=args.n)
    system = LatticeSystem("heisenberg", box,
                           InteractionSpec(family="tanh", C=1.0))
    plan = NoisePlan(seed=args.seed, h=args.h, T=args.steps * args.h)
    site_steps = args.steps * args.replicas * box.nsites

    print(f"box n={args.n} ({box.nsites} sites), {args.replicas} replicas, "
          f"{args.steps} steps")
    t_py, final_py = run("python", system, plan, args.replicas)
    print(f"python   : {t_py:8.3f}s  ({site_steps / t_py:12.0f} site-steps/s)")
    if not HAVE_KERNELS:
        print("compiled : unavailable (extension not built)")
        return
    t_c, final_c = run("compiled", system, plan, args.replicas)
    print(f"compiled : {t_c:8.3f}s  ({site_steps / t_c:12.0f} site-steps/s)")
    diff = float(np.max(np.abs(final_py - final_c)))
    print(f"speedup  : {t_py / t_c:8.2f}x")
    print(f"max |python - compiled| at T: {diff:.3e}")


if __name__ == "__main__":
    main()
