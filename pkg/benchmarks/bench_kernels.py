"""Time the compiled fixed-point kernels against the pure-numpy reference.

Usage: python benchmarks/bench_kernels.py [--repeats 5]

Reports best-of-N wall time for the damped MMSE fixed point and the
backward cancellation sweep at several grid sizes, plus the speedup of
the active backend over ``kernels._reference``.  Run after an editable
install; if the extension failed to build the two columns coincide and
the speedup is 1.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from cdma_nash import kernels, rng
from cdma_nash.kernels import _reference

SIZES = ((64, 64), (128, 128), (256, 256), (512, 512))


def _draw(nf: int, nx: int, seed: int = 0):
    stream = rng.substream(seed, 12000, nf, nx)
    gains2 = stream.uniform(0.1, 2.0, (nf, nx))
    powers = stream.uniform(0.5, 2.0, nx)
    wf = np.full(nf, 1.0 / nf)
    wx = np.full(nx, 0.125 / nx)
    return gains2, powers, wf, wx


def _best_of(fn, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats per case (default 5)")
    args = parser.parse_args()

    print(f"active backend: {kernels.BACKEND}")
    header = f"{'kernel':>10s} {'grid':>9s} {'active':>10s} {'reference':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for nf, nx in SIZES:
        gains2, powers, wf, wx = _draw(nf, nx)
        sigma2 = 1e-3

        cases = (
            ("fixed-pt",
             lambda: kernels.mmse_fixed_point(gains2, powers, wf, wx, sigma2,
                                              exclude_self=True),
             lambda: _reference.mmse_fixed_point(gains2, powers, wf, wx, sigma2,
                                                 exclude_self=True)),
            ("sic-sweep",
             lambda: kernels.sic_backward_sweep(gains2, powers, wf, wx, sigma2),
             lambda: _reference.sic_backward_sweep(gains2, powers, wf, wx,
                                                   sigma2)),
        )
        for name, active, reference in cases:
            beta_a = active()[0]
            beta_r = reference()[0]
            np.testing.assert_allclose(beta_a, beta_r, rtol=1e-10)
            t_active = _best_of(active, args.repeats)
            t_ref = _best_of(reference, args.repeats)
            print(f"{name:>10s} {nf:>4d}x{nx:<4d} {t_active * 1e3:>8.2f}ms "
                  f"{t_ref * 1e3:>8.2f}ms {t_ref / t_active:>7.2f}x")


if __name__ == "__main__":
    main()
