"""Timing comparison of the compiled vs pure-python kernel backends.

Run as: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from thermoflat.kernels import get_backend


def make_power_case(rng, dim):
    mat = rng.normal(scale=2.0, size=(dim, dim))
    # sprinkle structural zeros while keeping the matrix primitive
    mask = rng.random((dim, dim)) < 0.15
    np.fill_diagonal(mask, False)
    mat[mask] = -np.inf
    return mat


def make_chain(rng, states):
    start = rng.dirichlet(np.ones(states))
    trans = rng.dirichlet(np.ones(states), size=states)
    start_cum = np.cumsum(start)
    start_cum[-1] = 1.0
    trans_cum = np.cumsum(trans, axis=1)
    trans_cum[:, -1] = 1.0
    return start_cum, trans_cum


def bench(fn, repeat):
    times = timeit.repeat(fn, number=1, repeat=repeat)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    try:
        cy = get_backend("cython")
    except ImportError:
        print("compiled backend not built; run `python3 setup.py build_ext --inplace`")
        return 1
    py = get_backend("python")
    rng = np.random.default_rng(0)

    cases = []

    for dim in (16, 64, 256):
        mat = make_power_case(rng, dim)
        cases.append(
            (
                f"power_iteration_log dim={dim}",
                lambda b, m=mat: b.power_iteration_log(m, 1e-13, 20000),
            )
        )

    for num, steps in ((2000, 500), (5000, 1000)):
        start_cum, trans_cum = make_chain(rng, 4)
        uniforms = rng.random((num, steps))
        cases.append(
            (
                f"sample_state_paths {num}x{steps}",
                lambda b, s=start_cum, t=trans_cum, u=uniforms: b.sample_state_paths(
                    s, t, u
                ),
            )
        )

    k, memory = 2, 2
    table = rng.normal(size=k**memory)
    symbols = rng.integers(0, k, size=(5000, 1000))
    cases.append(
        (
            "birkhoff_averages 5000x1000 mem=2",
            lambda b: b.birkhoff_averages(symbols, table, memory, k),
        )
    )

    print(f"{'kernel':<38}{'python':>12}{'cython':>12}{'speedup':>10}")
    for name, fn in cases:
        t_py = bench(lambda: fn(py), args.repeat)
        t_cy = bench(lambda: fn(cy), args.repeat)
        print(f"{name:<38}{t_py * 1e3:>10.2f}ms{t_cy * 1e3:>10.2f}ms{t_py / t_cy:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
