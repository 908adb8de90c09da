"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np
import scipy.linalg

from vsgss import kernels
from vsgss.analysis import _canonical
from vsgss.simulate import run_simulation, sim_preset
from vsgss.model import default_base_case
from vsgss.tfbuild import build_transfer_matrix


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def zoh_case():
    ch = build_transfer_matrix(default_base_case())["q_to_w"]
    a, b, c, d = _canonical(ch)
    n = a.shape[0]
    block = np.zeros((n + 1, n + 1))
    block[:n, :n] = a * 1e-3
    block[:n, n] = b * 1e-3
    phi = scipy.linalg.expm(block)
    return phi[:n, :n], phi[:n, n], c, d, 30000


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.compiled is None:
        print("compiled kernels not built; only the Python fallback is available")
    backends = [("python", kernels.python)]
    if kernels.compiled is not None:
        backends.append(("cython", kernels.compiled))

    zoh = zoh_case()
    sc = sim_preset("base")
    rows = []
    for name, impl in backends:
        t_zoh = best_of(lambda: impl.zoh_step_series(*zoh), args.repeat)
        t_rk4 = best_of(lambda: run_simulation(sc, backend=impl), args.repeat)
        rows.append((name, t_zoh, t_rk4))
    print(f"{'backend':<8} {'zoh 7th order, 30001 steps':>28} {'rk4 sim, 40001 steps':>22}")
    for name, t_zoh, t_rk4 in rows:
        print(f"{name:<8} {t_zoh * 1e3:>25.1f} ms {t_rk4 * 1e3:>19.1f} ms")
    if len(rows) == 2:
        print(f"speed-up: zoh {rows[0][1] / rows[1][1]:.0f}x, rk4 {rows[0][2] / rows[1][2]:.0f}x")


if __name__ == "__main__":
    main()
