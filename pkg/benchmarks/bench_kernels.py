"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import random
import time

import numpy as np

from hbspectra import _backend, zoo
from hbspectra.simulate import TrajectoryConfig, trajectory
from hbspectra.spectral import eigenvalues_symmetric


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = _backend.available()
    rng = np.random.default_rng(0)
    rows = []
    for n in (50, 100, 200):
        a = rng.normal(size=(n, n))
        a = a + a.T
        rows.append((f"jacobi N={n}",
                     {b: best_of(lambda: eigenvalues_symmetric(a, backend=b), args.repeat)
                      for b in backends}))
    spec = zoo.random_spec(random.Random(1), max_states=12)
    cfg = TrajectoryConfig(seed=7, steps=100_000)
    rows.append(("trajectory 1e5 steps",
                 {b: best_of(lambda: trajectory(spec, cfg, backend=b), args.repeat)
                  for b in backends}))
    print(f"{'kernel':<22s}" + "".join(f"{b:>12s}" for b in backends) + "     speedup")
    for name, t in rows:
        speed = f"{t['python'] / t['cython']:9.1f}x" if "cython" in t else "        -"
        print(f"{name:<22s}" + "".join(f"{t[b]:11.4f}s" for b in backends) + "  " + speed)


if __name__ == "__main__":
    main()
