import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from uqr_web_lab import kernels

IMPLS = kernels.implementations()
needs_both = pytest.mark.skipif(len(IMPLS) < 2, reason="compiled kernels not built")

complexes = st.complex_numbers(max_magnitude=4.0, allow_nan=False, allow_infinity=False)


def test_backend_is_reported():
    assert kernels.BACKEND in ("python", "cython")
    assert "python" in IMPLS


def test_pure_fallback_selected_by_environment():
    env = dict(os.environ, UQR_WEB_LAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from uqr_web_lab import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_both
@settings(max_examples=40, deadline=None)
@given(st.lists(complexes, min_size=1, max_size=20), complexes, st.integers(0, 12))
def test_poly_iterate_agrees(zs, c, n):
    co = np.array([c, 0, 1], dtype=complex)
    z = np.array(zs)
    w1, s1 = IMPLS["python"].poly_iterate(co, z, n, 1e6)
    w2, s2 = IMPLS["cython"].poly_iterate(co, z, n, 1e6)
    np.testing.assert_array_equal(s1, s2)
    np.testing.assert_allclose(w1, w2, rtol=1e-13, atol=1e-13)


@needs_both
@settings(max_examples=40, deadline=None)
@given(st.lists(complexes, min_size=1, max_size=20), st.integers(0, 40))
def test_poly_log_abs_agrees(zs, n):
    co = np.array([-6, 0, 1], dtype=complex)
    z = np.array(zs) + 4.0
    a = IMPLS["python"].poly_log_abs(co, z, n, 1e8)
    b = IMPLS["cython"].poly_log_abs(co, z, n, 1e8)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)


def test_poly_log_abs_brackets_exact_value():
    co = np.array([-6, 0, 1], dtype=complex)
    z = np.array([10.0 + 0j])
    lo, hi = kernels.poly_log_abs(co, z, 3, 1e3)
    exact = np.log(8830.0**2 - 6)
    assert lo[0] <= exact <= hi[0]
    assert hi[0] - lo[0] < 1e-6


@needs_both
@settings(max_examples=30, deadline=None)
@given(st.lists(complexes, min_size=2, max_size=16, unique=True), st.integers(1, 8))
def test_newton_and_aberth_agree(zs, p):
    z = np.array(zs) + 0.01j
    d = np.abs(z[:, None] - z[None, :]) + np.eye(len(z))
    assume(d.min() > 1e-3)
    r1 =IMPLS["python"].quad_newton_ratio(z, -6.0, p)
    r2 = IMPLS["cython"].quad_newton_ratio(z, -6.0, p)
    np.testing.assert_allclose(r1, r2, rtol=1e-10, atol=1e-12)
    a1 = IMPLS["python"].aberth_correction(z, r1)
    a2 = IMPLS["cython"].aberth_correction(z, r1)
    np.testing.assert_allclose(a1, a2, rtol=1e-10, atol=1e-12)


def test_newton_ratio_matches_direct_formula():
    z = np.array([0.3 + 0.2j, 1.1 - 0.4j])
    w, dw = z.copy(), np.ones_like(z)
    for _ in range(3):
        dw = 2 * w * dw
        w = w * w - 6
    np.testing.assert_allclose(kernels.quad_newton_ratio(z, -6.0, 3), (w - z) / (dw - 1), rtol=1e-13)


@pytest.mark.parametrize("impl", sorted(IMPLS))
def test_newton_ratio_finite_on_runaway_orbits(impl):
    # orbits pass 1e100 early, so w*w would overflow in later steps
    z = np.exp(2j * np.pi * np.arange(64) / 64) * 30.0
    r = IMPLS[impl].quad_newton_ratio(z, -6.0, 10)
    assert np.isfinite(r).all()
    # far from the Julia set f^p(z) ~ z^(2^p), so P/P' ~ z/2^p
    np.testing.assert_allclose(r * 2**10 / z, 1.0, atol=0.01)


@needs_both
def test_linking_and_winding_agree():
    t = 2 * np.pi * np.arange(128) / 128
    a = np.column_stack([np.cos(t), np.sin(t), 0 * t])
    b = np.column_stack([1 + np.cos(t), 0 * t, np.sin(t)])
    assert IMPLS["python"].gauss_linking(a, b) == pytest.approx(IMPLS["cython"].gauss_linking(a, b), abs=1e-12)
    v = np.exp(1j * t)
    pts = np.array([0, 0.5j, 2, -3 + 1j])
    np.testing.assert_allclose(IMPLS["python"].winding_numbers(v, pts), IMPLS["cython"].winding_numbers(v, pts),
                               atol=1e-12)


@needs_both
def test_voxelize_and_flood_agree():
    args = ((-1.5, -1.5, -1.5), 3.0 / 40, (40, 40, 40), np.array([0, 1, 2]),
            np.array([[0, 0, 0], [1, 1, 1], [-1, -1, 1]], float), np.array([np.eye(3)] * 3),
            np.array([0.8, 0.3, 0.4]), np.array([0.2, 0.0, 0.25]))
    o1 = IMPLS["python"].voxelize(*args)
    o2 = IMPLS["cython"].voxelize(*args)
    np.testing.assert_array_equal(o1, o2)
    free = (o1 == 0).astype(np.uint8)
    seeds = np.zeros_like(free)
    seeds[0, 0, 0] = 1
    np.testing.assert_array_equal(IMPLS["python"].flood_fill6(free, seeds), IMPLS["cython"].flood_fill6(free, seeds))


def test_flood_fill_respects_walls():
    free = np.ones((10, 10, 10), np.uint8)
    free[5] = 0
    seeds = np.zeros_like(free)
    seeds[0, 0, 0] = 1
    reached = kernels.flood_fill6(free, seeds)
    assert reached[:5].all() and not reached[6:].any()


def test_gauss_linking_hopf_pair():
    t = 2 * np.pi * np.arange(256) / 256
    a = np.column_stack([np.cos(t), np.sin(t), 0 * t])
    b = np.column_stack([1 + np.cos(t), 0 * t, np.sin(t)])
    assert abs(abs(kernels.gauss_linking(a, b)) - 1) < 1e-3
