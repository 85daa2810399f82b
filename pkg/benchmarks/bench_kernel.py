#!/usr/bin/env python3
"""Time the compiled RK4 kernel against the pure numpy/scipy fallback.

Both steppers advance the same vectorized density matrix with the same step
size and stage order, so the wall-clock ratio isolates kernel overhead and
the printed final-state difference should sit at roundoff.

Usage: python benchmarks/bench_kernel.py [--atoms 2 4 6 8] [--steps 400]
"""

import argparse
import time
from math import sqrt

import numpy as np

from mlsr import _backend, dynamics


def time_stepper(stepper, y0, h, nsteps, repeats):
    """Best-of-``repeats`` wall time and the advanced vector."""
    best = float("inf")
    y = None
    for _ in range(repeats):
        y = y0.copy()
        start = time.perf_counter()
        stepper(y, h, nsteps)
        best = min(best, time.perf_counter() - start)
    return best, y


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--atoms", type=int, nargs="+", default=[2, 4, 6, 8])
    parser.add_argument("--steps", type=int, default=400)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)

    scheme = dynamics.LevelScheme.fla(
        omega_minus=6.0, omega0=7.0, omega_plus=8.0,
        gamma=[[1.0, 1.0], [1.0, 1.0]], gamma_plus=1.0, gamma_minus=1.0,
    )
    if not _backend.HAVE_COMPILED:
        print("compiled kernel not built; timing the python fallback only")
        print(f"{'N':>3} {'dim':>7} {'nnz':>9} {'python':>10}")
    else:
        print(f"{'N':>3} {'dim':>7} {'nnz':>9} {'python':>10} {'compiled':>10}"
              f" {'speedup':>8} {'max|diff|':>10}")

    for n_atoms in args.atoms:
        gen = dynamics.build_generator(scheme, n_atoms)
        rho0 = dynamics.symmetric_init(scheme, n_atoms, 1 / sqrt(2), 1 / sqrt(2))
        y0 = rho0.data.reshape(-1).astype(np.complex128)
        h = dynamics.default_step(scheme, n_atoms)
        dim = y0.size
        nnz = gen.matrix.nnz

        fallback = _backend.make_stepper(gen.matrix, force_python=True)
        t_py, y_py = time_stepper(fallback, y0, h, args.steps, args.repeats)
        if not _backend.HAVE_COMPILED:
            print(f"{n_atoms:>3} {dim:>7} {nnz:>9} {t_py:>9.4f}s")
            continue

        compiled = _backend.make_stepper(gen.matrix)
        t_c, y_c = time_stepper(compiled, y0, h, args.steps, args.repeats)
        diff = float(np.max(np.abs(y_c - y_py)))
        print(f"{n_atoms:>3} {dim:>7} {nnz:>9} {t_py:>9.4f}s {t_c:>9.4f}s"
              f" {t_py / t_c:>7.1f}x {diff:>10.2e}")


if __name__ == "__main__":
    main()
