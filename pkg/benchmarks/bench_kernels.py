"""Time the compiled and numpy kernel backends on the same inputs.

Run with ``python3 benchmarks/bench_kernels.py [--n N] [--repeat R]``.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from w2alink.kernels import available_backends
from w2alink.pointing import LinkGeometry
from w2alink.montecarlo import kernel_args
from w2alink.scenario import Environment, build_scenario


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(1)
    u = rng.random(args.n)
    scn = build_scenario(LinkGeometry(), Environment())
    kargs = kernel_args(scn)
    x = rng.random(args.n)
    lx, l1x = np.log(x), np.log1p(-x)

    backends = available_backends()
    cases = {
        "channel_batch": lambda k: k.channel_batch(u, *kargs),
        "betainc": lambda k: k.betainc(x, 2.5, 4.0),
        "beta_mixture_estep": lambda k: k.beta_mixture_estep(lx, l1x, 0.3, 0.8, 3.0, 6.0, 1.2),
    }
    print(f"n={args.n} best of {args.repeat}")
    print(f"{'kernel':<20}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for case, run in cases.items():
        times = {name: _best(lambda: run(mod), args.repeat) for name, mod in backends.items()}
        line = f"{case:<20}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times.values())
        if "cython" in times and "python" in times:
            line += f"{times['python'] / times['cython']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
