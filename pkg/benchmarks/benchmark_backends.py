"""Throughput comparison of the compiled and pure-Python simulation kernels.

Runs the NPV, Parisian and exit kernels on a Cramer-Lundberg and a
jump-diffusion model with a modest path count, times both backends, and
checks that the outputs agree bit for bit.

Usage: python3 benchmarks/benchmark_backends.py [--paths N] [--dt DT]
"""

import argparse
import time

import numpy as np

from snlevy import _simfallback as fallback
from snlevy.levy_models import make_model, JumpComponent

try:
    from snlevy import _simkernel as compiled
except ImportError:
    compiled = None


def _time(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return time.perf_counter() - t0, out


def _report(name, t_py, t_c, same, n_paths):
    speedup = t_py / t_c if t_c > 0 else float("inf")
    tag = "bit-identical" if same else "MISMATCH"
    print(f"{name:22s}  python {t_py * 1e3:9.1f} ms"
          f"  compiled {t_c * 1e3:8.1f} ms"
          f"  speedup {speedup:6.1f}x  [{tag}]"
          f"  ({n_paths / t_c:,.0f} paths/s compiled)")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--paths", type=int, default=2000)
    parser.add_argument("--dt", type=float, default=1e-3)
    args = parser.parse_args()
    if compiled is None:
        print("compiled kernel unavailable; nothing to compare")
        return

    models = {
        "cramer-lundberg": make_model(2.0, 0.0, (JumpComponent(1.0, 1.0, 1.0),)),
        "jump-diffusion": make_model(1.0, 1.0, (JumpComponent(0.5, 2.0, 1.0),)),
    }
    q, r, horizon, seed = 3.0, 1.0, 4.6, 11
    b1, b2, x0 = 0.4, 1.5, 1.0

    for label, model in models.items():
        rates = np.array([j.rate for j in model.jumps])
        phases = np.array([j.phase for j in model.jumps])
        common = (model.drift, model.gaussian_coeff, rates, phases)
        print(f"\n{label}  (paths={args.paths}, dt={args.dt})")

        npv_args = (*common, x0, b1, b2, q, r, args.dt, horizon, seed,
                    args.paths)
        t_py, out_py = _time(fallback.npv_kernel, *npv_args)
        t_c, out_c = _time(compiled.npv_kernel, *npv_args)
        same = all(np.array_equal(a, b) for a, b in zip(out_py, out_c))
        _report("npv_kernel", t_py, t_c, same, args.paths)

        par_args = (*common, x0, b1, b2, r, args.dt, horizon, seed, args.paths)
        t_py, out_py = _time(fallback.parisian_kernel, *par_args)
        t_c, out_c = _time(compiled.parisian_kernel, *par_args)
        same = all(np.array_equal(a, b) for a, b in zip(out_py, out_c))
        _report("parisian_kernel", t_py, t_c, same, args.paths)

        exit_args = (*common, x0, 2.0, 0.0, args.dt, horizon, seed, args.paths)
        t_py, out_py = _time(fallback.exit_kernel, *exit_args)
        t_c, out_c = _time(compiled.exit_kernel, *exit_args)
        same = all(np.array_equal(a, b) for a, b in zip(out_py, out_c))
        _report("exit_kernel", t_py, t_c, same, args.paths)


if __name__ == "__main__":
    main()
