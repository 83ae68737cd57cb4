"""Time the compiled and numpy Langevin kernels on the same ensemble.

Usage: python benchmarks/bench_langevin.py [n_trajectories] [n_steps]
"""

import sys
import time

import numpy as np

from qdwell import langevin, spectrum


def bench(backend, n, steps):
    pot = spectrum.build_potential(12 ** 0.5, 23.0)
    cfg = langevin.LangevinConfig(2.5e-9, 1e7, 0.05 / pot.omega, n, seed=1)
    state = langevin.sample_initial(cfg, pot)
    t0 = time.perf_counter()
    res = langevin.evolve_ensemble(state, cfg, pot, steps * cfg.dt, record_every=steps, backend=backend)
    wall = time.perf_counter() - t0
    return wall, res


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
    steps = int(sys.argv[2]) if len(sys.argv) > 2 else 2000
    backends = ["python"] + (["compiled"] if langevin._compiled is not None else [])
    results = {}
    for b in backends:
        wall, res = bench(b, n, steps)
        results[b] = res
        print(f"{b:9s} {wall:8.3f} s  {1e9 * wall / (n * steps):7.1f} ns/step  P_left={res.p_left[-1]:.5f}")
    if len(results) == 2:
        dx = np.max(np.abs(results["python"].state.x - results["compiled"].state.x))
        print(f"max |x_python - x_compiled| = {dx:.2e}")


if __name__ == "__main__":
    main()
