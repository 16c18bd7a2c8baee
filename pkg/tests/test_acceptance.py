"""Acceptance criteria, each at its stated tolerance and runtime budget.

A summary line per criterion is printed at the end of the pytest run.
"""
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from uqr_web_lab.cantor import (
    TorusFrame,
    build_necklace,
    export_mesh,
    initial_stage,
    iterate_stage,
    verify_stage,
    voxel_complement_connected,
)
from uqr_web_lab.geom import min_modulus
from uqr_web_lab.growth import GrowthConstants, mu_threshold, qs_ratio, sandwich_check
from uqr_web_lab.linearizer import linearize, make_linearizer, residual
from uqr_web_lab.maps import evaluate, example28_map, polynomial, quadratic
from uqr_web_lab.periodic import density_gap, julia_sample, periodic_points, root_count
from uqr_web_lab.report import strip_timestamp
from uqr_web_lab.web import certify_web


def disk_points(n, radius, seed):
    rng = np.random.default_rng(seed)
    return radius * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))


@pytest.mark.criterion(1, "example composite: f(1) = -1/5 and m(1, f) <= 1/5 with 1e4 samples, < 1 s")
def test_c1_example_min_modulus():
    t0 = time.perf_counter()
    f = example28_map("f")
    v = complex(evaluate(f, 1.0 + 0j))
    mm = min_modulus(f, 1.0, 10_000)
    elapsed = time.perf_counter() - t0
    print(f"f(1) = {v!r}, m(1, f) = {mm!r}, {elapsed:.3f} s")
    assert abs(v - (-0.2)) < 1e-12
    assert mm <= 0.2 + 1e-9
    assert elapsed < 1.0


@pytest.mark.criterion(2, "linearizer of z^2 at 1 equals exp on |z| <= 2 within 1e-8, < 10 s")
def test_c2_linearizer_closed_form():
    t0 = time.perf_counter()
    L = make_linearizer(polynomial((0.0, 0.0, 1.0)), 1.0, multiplier=2.0, rho=2.5)
    z = disk_points(200, 2.0, seed=2)
    err = float(np.max(np.abs(linearize(L, z) - np.exp(z))))
    elapsed = time.perf_counter() - t0
    print(f"sup error {err:.3e}, {elapsed:.3f} s")
    assert err < 1e-8
    assert elapsed < 10.0


@pytest.mark.criterion(3, "functional equation for z^2 - 6 at 3: relative residual < 1e-6 on |z| <= 10, < 30 s")
def test_c3_functional_equation():
    t0 = time.perf_counter()
    L = make_linearizer(quadratic(-6.0), 3.0)
    assert L.multiplier == pytest.approx(6.0, abs=1e-12)
    z = disk_points(512, 10.0, seed=3)
    res = float(np.max(residual(L, z, relative=True)))
    elapsed = time.perf_counter() - t0
    print(f"max relative residual {res:.3e}, {elapsed:.3f} s")
    assert res < 1e-6
    assert elapsed < 30.0


@pytest.mark.criterion(4, "c = -6, periods <= 8: all repelling, 256 roots, multipliers {6,-4} and -20, gap monotone, < 60 s")
def test_c4_periodic_points():
    t0 = time.perf_counter()
    by_p = {p: periodic_points(-6.0, p) for p in range(1, 9)}
    assert root_count(by_p[8]) == 256
    for p, recs in by_p.items():
        assert root_count(recs) == 2**p
        assert all(r.modulus > 1 and r.classification == "repelling" for r in recs)
    mult1 = sorted(r.multiplier.real for r in by_p[1])
    assert mult1 == [-4.0, 6.0]
    prim2 = [r for r in by_p[2] if r.period == 2]
    assert len(prim2) == 1
    assert abs(prim2[0].multiplier - (-20.0)) < 1e-6
    sample = julia_sample(-6.0, 2000, seed=0)
    gaps = [density_gap(by_p[p], sample) for p in (2, 4, 6, 8)]
    elapsed = time.perf_counter() - t0
    print(f"density gaps {gaps}, {elapsed:.2f} s")
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))
    assert elapsed < 60.0


@pytest.mark.criterion(5, "web certificate for c = -6, R = 20: 4 levels pass and survive doubled samples, < 5 min")
def test_c5_web_certificate():
    t0 = time.perf_counter()
    L = make_linearizer(quadratic(-6.0), 3.0)
    mu = 1.05 * mu_threshold(2, 1.0, 6.0).mu_min
    base = certify_web(L, 20.0, mu, 4, samples=1024, resolution=256)
    doubled = certify_web(L, 20.0, mu, 4, samples=2048, resolution=512, ball_samples=128)
    elapsed = time.perf_counter() - t0
    for cert in (base, doubled):
        assert cert.verdict == "pass"
        assert len(cert.levels) == 4
        for lvl in cert.levels:
            assert lvl.ball_containment and lvl.separation and lvl.image_winding_ok
    assert [lvl.p_exponent for lvl in base.levels] == [lvl.p_exponent for lvl in doubled.levels]
    print(f"exponents {[lvl.p_exponent for lvl in base.levels]}, {elapsed:.2f} s")
    assert elapsed < 300.0


@pytest.mark.criterion(6, "ring exponent threshold: log 6 / log 2 and 1 within 1e-12")
def test_c6_mu_threshold():
    assert abs(mu_threshold(2, 1, 6).mu_min - math.log(6) / math.log(2)) < 1e-12
    assert abs(mu_threshold(2, 1, 2).mu_min - 1.0) < 1e-12


@pytest.mark.criterion(7, "growth sandwich for z^2 - 6 with (0.5, 2, 4), |x| in {10, 20, 50}, j <= 4")
def test_c7_sandwich():
    f = quadratic(-6.0)
    assert complex(evaluate(f, 10.0 + 0j)) == 94.0
    assert complex(evaluate(f, 94.0 + 0j)) == 8830.0
    consts = GrowthConstants(0.5, 2.0, 4.0, 2)
    for x in (10.0, 20.0, 50.0):
        for j in range(1, 5):
            rep = sandwich_check(f, consts, x, j)
            assert rep.passed, rep.details


@pytest.mark.criterion(8, "example composite, s = 1, t = 2: ratio(12) <= 1.05 max_{m <= 6} ratio(m)")
def test_c8_qs_ratio_bounded():
    f = example28_map("f")
    ratios = [qs_ratio(f, 1.0, 2.0, m) for m in range(1, 13)]
    print(f"ratios {ratios}")
    assert all(math.isfinite(r) for r in ratios)
    assert ratios[11] <= 1.05 * max(ratios[:6])


@pytest.mark.criterion(9, "necklace m = 8 (major 2, minor 0.6, sub 0.55/0.15): depths 1-3 verify, 512 pieces, chi = 0, voxels at 128^3, < 3 min")
def test_c9_antoine_necklace(tmp_path):
    t0 = time.perf_counter()
    base = TorusFrame.standard(2.0, 0.6)
    ifs = build_necklace(8, base, 0.55, 0.15)
    stage = initial_stage(base)
    for depth in (1, 2, 3):
        stage = iterate_stage(stage, ifs)
        assert len(stage) == 8**depth
        rep = verify_stage(stage)
        assert rep.passed
        for link in rep.links:
            assert link.residual < 0.05
        assert voxel_complement_connected(stage, 128).connected
        objs = export_mesh(stage, tmp_path / f"stage{depth}.obj", 48, 24)
        assert all(o.euler_characteristic == 0 for o in objs)
    assert len(stage) == 512
    assert time.perf_counter() - t0 < 180.0


SUITE = [
    ("web", []),
    ("periodic", []),
    ("growth", []),
    ("linearize", []),
    ("necklace", ["depth=2", "export_depth=1", "mesh_u=12", "mesh_v=6"]),
]


def _run_suite(out: Path, threads: str) -> dict:
    env = dict(os.environ, OMP_NUM_THREADS=threads, OPENBLAS_NUM_THREADS=threads, MKL_NUM_THREADS=threads)
    texts = {}
    for cmd, extra in SUITE:
        d = out / cmd
        d.mkdir(parents=True)
        args = [sys.executable, "-m", "uqr_web_lab", cmd, "--out", str(d), "--seed", "7"]
        if extra:
            cfg = d / "run.cfg"
            cfg.write_text("\n".join(extra) + "\n")
            args += ["--config", str(cfg)]
        proc = subprocess.run(args, env=env, capture_output=True, text=True)
        texts[cmd] = (proc.returncode, strip_timestamp((d / f"{cmd}.json").read_text()))
    return texts


@pytest.mark.criterion(10, "determinism: repeated suite runs agree to 17 digits across thread counts")
def test_c10_determinism(tmp_path):
    a = _run_suite(tmp_path / "a", "1")
    b = _run_suite(tmp_path / "b", "4")
    for cmd in a:
        assert a[cmd][0] == b[cmd][0], cmd
        assert a[cmd][1] == b[cmd][1], cmd
