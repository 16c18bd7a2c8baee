import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uqr_web_lab.errors import PreconditionError, RingTooThinError, SeedChainError, ThresholdTooSmallError
from uqr_web_lab.geom import ClosedCurve, winding_number
from uqr_web_lab.growth import mu_threshold
from uqr_web_lab.linearizer import linearize, make_linearizer
from uqr_web_lab.maps import polynomial, quadratic, similarity
from uqr_web_lab.web import (
    bracket_exponents,
    certify_web,
    escape_radius,
    fast_escape_test,
    julia_enclosing_curve,
    pull_back_curve,
    scale_curve,
)

T64 = 2 * np.pi * np.arange(64) / 64


@pytest.fixture(scope="module")
def c6():
    return make_linearizer(quadratic(-6.0), 3.0)


@pytest.fixture(scope="module")
def cert(c6):
    mu = 1.05 * mu_threshold(2, 1.0, 6.0).mu_min
    return certify_web(c6, 20.0, mu, 4)


def test_fast_escape_examples():
    f = quadratic(-6.0)
    rep = fast_escape_test(f, 10.0, 4.0, 20)
    assert rep.member_A_R and rep.member_A and not rep.undecided
    assert rep.orbit_norms[1:3] == pytest.approx([94.0, 8830.0])
    assert [math.exp(t) for t in rep.log_tower[:2]] == pytest.approx([22.0, 490.0], rel=1e-6)
    zero = fast_escape_test(f, 0.0, 4.0, 20)
    assert not zero.member_A_R and not zero.member_A
    assert fast_escape_test(similarity(2.0), 1.0, 1.0, 20).member_A_R


def test_fast_escape_offset_and_threshold():
    # 0 -> -6 -> 30: shifted by one step, |f^2(0)| = 30 >= M(4) = 22 and the tower stays behind
    rep = fast_escape_test(quadratic(-6.0), 0.0, 4.0, 20, maxP=3)
    assert rep.member_A and not rep.member_A_R and rep.offset_P == 1
    with pytest.raises(ThresholdTooSmallError):
        fast_escape_test(similarity(0.5), 1.0, 1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(-30, 30), st.floats(-30, 30), st.floats(4.0, 40.0), st.floats(1.0, 3.0))
def test_fast_escape_monotone_in_R(a, b, R, k):
    f = quadratic(-6.0)
    hi = fast_escape_test(f, complex(a, b), R * k, 12)
    if hi.member_A_R:
        assert fast_escape_test(f, complex(a, b), R, 12).member_A_R


def test_enclosing_curve_base_case():
    curve, rep = julia_enclosing_curve(-6.0, 0, 3.0, with_report=True)
    assert rep.escape_radius == pytest.approx(3.001)
    assert np.abs(np.abs(curve.vertices) - 3.001).max() < 1e-3
    assert winding_number(curve, 0j) == 1


def test_enclosing_curve_level_three():
    curve, rep = julia_enclosing_curve(-6.0, 3, 3.0, with_report=True)
    assert rep.diameter < 1.0 and rep.all_escape and rep.winding == 1
    assert winding_number(curve, 3.0) == 1


def test_enclosing_curve_preconditions():
    with pytest.raises(PreconditionError):
        julia_enclosing_curve(0.0, 3, 1.0)
    with pytest.raises(PreconditionError):
        julia_enclosing_curve(-6.0, 3, 2.0)
    assert escape_radius(-6.0) == 3.0


def test_pull_back_examples(c6):
    gamma = ClosedCurve.from_vertices(linearize(c6, 1e-3 * np.exp(1j * T64)))
    np.testing.assert_allclose(pull_back_curve(c6, gamma).vertices, 1e-3 * np.exp(1j * T64), atol=1e-8)
    sq = make_linearizer(polynomial((0.0, 0.0, 1.0)), 1.0, multiplier=2.0, rho=2.5)
    gamma = ClosedCurve.from_vertices(np.exp(np.exp(1j * T64)))
    np.testing.assert_allclose(pull_back_curve(sq, gamma).vertices, np.exp(1j * T64), atol=1e-7)
    with pytest.raises(SeedChainError):
        pull_back_curve(c6, ClosedCurve.circle(3.0, 20.0, 256))


def test_scale_curve_examples():
    unit = ClosedCurve.circle(0j, 1.0, 64)
    assert np.abs(scale_curve(unit, 6.0, 2).vertices) == pytest.approx(36.0)
    assert scale_curve(unit, 6.0, 0) is unit
    small = ClosedCurve.circle(0j, 5e-4, 64)
    assert scale_curve(small, 6.0, 5).diameter() == pytest.approx(7776e-3, rel=1e-12)
    huge = scale_curve(unit, 6.0, 1000)
    assert huge.log_norms().max() == pytest.approx(1000 * math.log(6.0))
    with pytest.raises(PreconditionError):
        scale_curve(unit, 6.0, -1)


def test_bracket_examples():
    assert bracket_exponents(ClosedCurve.circle(0j, 1.0, 64), 2.0, 4.0, 3.0) == (3, 5)
    assert bracket_exponents(ClosedCurve.circle(0j, 10.0, 64), 2.0, 4.0, 3.0)[0] == 0
    with pytest.raises(RingTooThinError):
        bracket_exponents(ClosedCurve.circle(0j, 1.0, 64), 2.0, 1.5, 1.01)


def test_levels_zero_is_vacuous(c6):
    cert = certify_web(c6, 20.0, 3.0, 0)
    assert cert.verdict == "pass" and cert.levels == []


def test_certificate_levels(cert):
    assert cert.verdict == "pass"
    assert [lvl.p_exponent for lvl in cert.levels] == [9, 14, 20, 40]
    for lvl in cert.levels:
        assert lvl.passed and lvl.nesting and lvl.in_ring
        assert lvl.measured_min_mod > lvl.next_max_norm


def test_certificate_boundaries_wind_once(cert):
    for lvl in cert.levels:
        assert winding_number(lvl.boundary, 0j) == 1
        ln = lvl.boundary.log_norms()
        assert ln.min() > lvl.log_r_m
        assert ln.max() < cert.mu * lvl.log_r_m


def test_least_exponent_fails_separation(c6):
    mu = 1.05 * mu_threshold(2, 1.0, 6.0).mu_min
    low = certify_web(c6, 20.0, mu, 2, exponent="least")
    assert low.verdict == "fail" and low.failed_level == 1
    assert not low.levels[0].separation
