import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uqr_web_lab.errors import EvaluationError, PreconditionError, ThresholdTooSmallError
from uqr_web_lab.geom import (
    ClosedCurve,
    Point,
    Ring,
    is_simple,
    iterated_max_modulus,
    max_modulus,
    min_modulus,
    modulus_on_set,
    sphere_sample,
    winding_number,
)
from uqr_web_lab.maps import MapSpec, example28_map, quadratic, similarity


def test_max_modulus_examples():
    f = quadratic(-6.0)
    assert max_modulus(f, 2.0) == pytest.approx(10.0, rel=1e-5)
    assert max_modulus(f, 10.0) == pytest.approx(106.0, rel=1e-5)
    assert max_modulus(similarity(2.0), 3.0) == pytest.approx(6.0, rel=1e-12)


def test_min_modulus_examples():
    f = quadratic(-6.0)
    assert min_modulus(f, 2.0) == pytest.approx(2.0, rel=1e-4)
    assert min_modulus(similarity(2.0), 3.0) == pytest.approx(6.0, rel=1e-12)
    assert min_modulus(example28_map("f"), 1.0, 10_000) <= 0.2 + 1e-9


def test_iterated_max_modulus_examples():
    f = quadratic(-6.0)
    assert iterated_max_modulus(f, 2.0, 1) == pytest.approx(10.0, rel=1e-5)
    assert iterated_max_modulus(f, 2.0, 2) == pytest.approx(106.0, rel=1e-4)
    assert iterated_max_modulus(similarity(2.0), 1.0, 5) == pytest.approx(32.0, rel=1e-12)


def test_iterated_max_modulus_contraction():
    with pytest.raises(ThresholdTooSmallError):
        iterated_max_modulus(similarity(0.5), 1.0, 2)
    with pytest.raises(PreconditionError):
        iterated_max_modulus(similarity(2.0), 1.0, 0)


def test_modulus_on_set_examples():
    circ1 = ClosedCurve.circle(0j, 1.0, 256)
    assert modulus_on_set(similarity(2.0), circ1, "max") == pytest.approx(2.0, rel=1e-12)
    f = quadratic(-6.0)
    assert modulus_on_set(f, ClosedCurve.circle(0j, 2.0, 4096), "min") == pytest.approx(2.0, rel=1e-5)
    assert modulus_on_set(f, ClosedCurve.circle(0j, 10.0, 4096), "max") == pytest.approx(106.0, rel=1e-5)
    with pytest.raises(PreconditionError):
        modulus_on_set(f, np.array([], dtype=complex))


def test_preconditions():
    f = quadratic(-6.0)
    with pytest.raises(PreconditionError):
        max_modulus(f, 0.0)
    with pytest.raises(PreconditionError):
        max_modulus(f, 1.0, samples=32)
    with pytest.raises(PreconditionError):
        Ring(0j, 2.0, 1.0)
    with pytest.raises(PreconditionError):
        Point((math.nan, 0.0))
    with pytest.raises(PreconditionError):
        ClosedCurve(np.exp(2j * np.pi * np.arange(4) / 4), 2.0)
    with pytest.raises(PreconditionError):
        ClosedCurve(np.exp(2j * np.pi * np.arange(16) / 16), 0.01)


def test_non_finite_value_reports_point():
    f = MapSpec("polynomial", 2, coefficients=(0.0, 0.0, 1.0))
    bad = type("Bad", (), {"dimension": 2, "__call__": lambda self, x: np.where(np.abs(x.real) > 0.99, np.nan, x)})()
    assert max_modulus(f, 1.0) == pytest.approx(1.0)
    with pytest.raises(EvaluationError) as exc:
        max_modulus(bad, 1.0)
    assert exc.value.point is not None


def test_sphere_sample_on_sphere_and_nested():
    for n in (2, 3):
        s = sphere_sample(3.0, 500, n)
        r = np.abs(s.points) if n == 2 else np.linalg.norm(s.points, axis=1)
        assert np.max(np.abs(r / 3.0 - 1)) < 1e-12
        big = sphere_sample(3.0, 1000, n)
        np.testing.assert_allclose(big.points[:500], s.points, rtol=0, atol=1e-15)
        assert big.max_gap < s.max_gap


def test_winding_and_simplicity():
    c = ClosedCurve.circle(1 + 1j, 2.0, 64)
    assert winding_number(c, 1 + 1j) == 1
    assert winding_number(c, 10.0) == 0
    assert is_simple(c)
    t = 2 * np.pi * np.arange(64) / 64
    eight = ClosedCurve.from_vertices(np.sin(2 * t) + 1j * np.sin(t))
    assert not is_simple(eight)
    with pytest.raises(PreconditionError):
        winding_number(c, 3 + 1j, tolerance=1e-3)


def test_log_scaled_curve_winding():
    c = ClosedCurve.from_vertices(np.exp(2j * np.pi * np.arange(32) / 32), log_scale=800.0)
    assert c.max_norm() == math.inf or c.log_norms().max() == pytest.approx(800.0)
    assert winding_number(c, 0j) == 1


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 50), st.floats(-math.pi, math.pi))
def test_linear_maps_have_equal_max_and_min(c, r, theta):
    f = similarity(c, theta)
    mx, mn = max_modulus(f, r), min_modulus(f, r)
    assert mx == pytest.approx(c * r, rel=1e-10)
    assert mn == pytest.approx(c * r, rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(2.5, 6.0), st.integers(1, 3))
def test_iterated_max_modulus_recursion(R, m):
    f = quadratic(-1.0)
    lhs = iterated_max_modulus(f, R, m + 1)
    rhs = iterated_max_modulus(f, iterated_max_modulus(f, R, 1), m)
    assert lhs == rhs


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 20), st.permutations(list(range(64))))
def test_max_at_least_min_and_order_independent(r, perm):
    f = quadratic(-6.0)
    assert max_modulus(f, r, 64) >= min_modulus(f, r, 64)
    pts = sphere_sample(r, 64).points
    assert modulus_on_set(f, pts[perm]) == modulus_on_set(f, pts)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 20), st.integers(6, 10))
def test_max_modulus_monotone_in_samples(r, k):
    f = example28_map("f")
    assert max_modulus(f, r, 2 ** (k + 1)) >= max_modulus(f, r, 2**k)
    assert min_modulus(f, r, 2 ** (k + 1)) <= min_modulus(f, r, 2**k)
