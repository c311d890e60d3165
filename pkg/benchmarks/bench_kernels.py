"""Time the compiled and pure-Python neighbour kernels on a Lorenz trajectory.

Run with ``python benchmarks/bench_kernels.py [n_samples]``. Both backends
must return identical neighbour indices; the script exits non-zero if they
disagree.
"""

import argparse
import sys
import time

import numpy as np

from koopman_sensing import _kernels_py
from koopman_sensing.metrics import delay_embed
from koopman_sensing.synth import lorenz_trajectory

try:
    from koopman_sensing import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("n_samples", type=int, nargs="?", default=20000)
    parser.add_argument("--dim", type=int, default=7)
    parser.add_argument("--lag", type=int, default=10)
    parser.add_argument("--horizon", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    if _kernels is None:
        print("compiled kernels not built; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    x = lorenz_trajectory(args.n_samples, 0.01, rng=rng)[:, 0]
    emb = delay_embed(x, args.dim, args.lag)
    n_ref = emb.shape[0] - args.horizon + 1
    theiler = 100

    rows = []
    nn = {}
    for name, mod in (("cython", _kernels), ("python", _kernels_py)):
        t_nn, nn[name] = best_of(lambda: mod.nearest_neighbours(emb, n_ref, theiler), args.repeat)
        t_div, _ = best_of(lambda: mod.divergence_curve(emb, nn[name], args.horizon, 1e-8),
                           args.repeat)
        rows.append((name, t_nn, t_div))

    print(f"n_ref={n_ref} dim={args.dim} horizon={args.horizon}")
    print(f"{'backend':<8} {'neighbours_s':>13} {'divergence_s':>13}")
    for name, t_nn, t_div in rows:
        print(f"{name:<8} {t_nn:13.4f} {t_div:13.4f}")
    print(f"speed-up  {rows[1][1] / rows[0][1]:12.1f}x {rows[1][2] / rows[0][2]:12.1f}x")

    if not np.array_equal(nn["cython"], nn["python"]):
        print("backends disagree on neighbour indices", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
