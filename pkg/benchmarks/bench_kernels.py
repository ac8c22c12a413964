"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends run the same inputs; outputs are checked for agreement
before timings are reported.
"""

import argparse
import timeit

import numpy as np

from latbudget import _pykernels, kernels
from latbudget.fixtures import table


def em_case():
    counts = table("table3").counts.astype(float)
    rng = np.random.default_rng(0)
    A = rng.dirichlet(np.ones(3), size=6)
    B = rng.dirichlet(np.ones(4), size=3).T
    # negative tolerance: always run the full iteration count
    return (counts, A, B, 2000, -1.0)


def sgd_case(n=800, I=6, L=8, J=4):
    rng = np.random.default_rng(1)
    X = np.eye(I)[rng.integers(0, I, n)]
    Y = np.eye(J)[rng.integers(0, J, n)]
    params = [rng.normal(scale=0.05, size=s) for s in ((I, L), (L,), (L, J), (J,))]
    return X, Y, params


def run_sgd(mod, X, Y, params, epochs=20):
    p = [q.copy() for q in params]
    for _ in range(epochs):
        mod.sgd_epoch(X, Y, *p, kernels.RELU, kernels.SOFTMAX, kernels.CROSS_ENTROPY, 0.01, 32)
    return p


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    cy = kernels.compiled()
    if cy is None:
        raise SystemExit("compiled extension not built; run `pip install -e .` first")

    em = em_case()
    X, Y, params = sgd_case()
    np.testing.assert_allclose(_pykernels.em_fit(*em)[0], cy.em_fit(*em)[0], atol=1e-10)
    for a, b in zip(run_sgd(_pykernels, X, Y, params), run_sgd(cy, X, Y, params)):
        np.testing.assert_allclose(a, b, atol=1e-9)

    cases = {
        "EM, 6x4 table, K=3, 2000 iterations": lambda mod: mod.em_fit(*em),
        "SGD, 800 rows, 6-8-4 net, 20 epochs": lambda mod: run_sgd(mod, X, Y, params),
    }
    print(f"{'case':<40} {'python (s)':>11} {'cython (s)':>11} {'speedup':>8}")
    for name, fn in cases.items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat))
        print(f"{name:<40} {t_py:>11.4f} {t_cy:>11.4f} {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
