"""Time each hot kernel under the pure-Python and compiled backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from uqr_web_lab import kernels


def workloads():
    rng = np.random.default_rng(0)
    co = np.array([-6.0, 0.0, 1.0], dtype=complex)
    z = 3 * (rng.random(20_000) - 0.5) + 3j * (rng.random(20_000) - 0.5)
    roots = np.exp(2j * np.pi * np.arange(1024) / 1024) * 3.3 + 0.01j
    t = 2 * np.pi * np.arange(512) / 512
    ca = np.column_stack([np.cos(t), np.sin(t), 0 * t])
    cb = np.column_stack([1 + np.cos(t), 0 * t, np.sin(t)])
    poly = np.exp(1j * t)
    pts = 2 * (rng.random(4096) - 0.5) + 2j * (rng.random(4096) - 0.5)
    n = 96
    frames = np.array([np.eye(3)] * 3)
    centers = np.array([[0, 0, 0], [1, 1, 1], [-1, -1, 1]], float)
    vox_args = ((-1.5, -1.5, -1.5), 3.0 / n, (n, n, n), np.array([0, 1, 2]), centers, frames,
                np.array([0.8, 0.3, 0.4]), np.array([0.2, 0.0, 0.25]))
    free = np.ones((n, n, n), np.uint8)
    free[n // 2] = 0
    seeds = np.zeros_like(free)
    seeds[0, 0, 0] = 1
    ratio = kernels.quad_newton_ratio(roots, -6.0, 10)
    return {
        "poly_iterate (20k pts, 12 steps)": ("poly_iterate", (co, z, 12, 1e6)),
        "poly_log_abs (20k pts, 40 steps)": ("poly_log_abs", (co, z + 4, 40, 1e8)),
        "quad_newton_ratio (1024 roots, p=10)": ("quad_newton_ratio", (roots, -6.0, 10)),
        "aberth_correction (1024 roots)": ("aberth_correction", (roots, ratio)),
        "gauss_linking (512 x 512)": ("gauss_linking", (ca, cb)),
        "winding_numbers (512-gon, 4096 pts)": ("winding_numbers", (poly, pts)),
        "voxelize (96^3, 3 shapes)": ("voxelize", vox_args),
        "flood_fill6 (96^3)": ("flood_fill6", (free, seeds)),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    impls = kernels.implementations()
    names = list(impls)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':40s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, (fn, fargs) in workloads().items():
        times = []
        for n in names:
            f = getattr(impls[n], fn)
            times.append(min(timeit.repeat(lambda: f(*fargs), number=1, repeat=args.repeat)))
        row = f"{label:40s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) > 1:
            row += f"{times[0] / times[1]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
