"""Compare the compiled and numpy kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from bayesnr import _kernels
from bayesnr.distributions import reference_model
from bayesnr.numerics import rng_uniform


def cases():
    alpha, p, beta = reference_model().closed_params()
    y = np.linspace(-30.0, 30.0, 200_000)
    for name in ("lm_pdf", "lm_tail", "lm_dfunc", "lm_numerator", "lm_mmse"):
        yield f"{name} (2e5 points)", lambda b, name=name: getattr(b, name)(y, alpha, p, beta)
    for n in (16, 64, 128):
        a = rng_uniform(n).standard_normal((n, n))
        a = a + a.T
        yield f"jacobi_eig (order {n})", lambda b, a=a: b.jacobi_eig(a)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = _kernels.backends()
    names = [b.BACKEND for b in backends]
    print(f"{'kernel':28s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, fn in cases():
        times = [min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat)) for b in backends]
        row = f"{label:28s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) > 1:
            row += f"{times[1] / times[0]:11.1f}x"
        print(row)
    if len(names) == 1:
        print("compiled backend not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
