import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uqr_web_lab.errors import NotExpandingError, NoValidMuError, PreconditionError
from uqr_web_lab.growth import (
    GrowthConstants,
    centered_distortion,
    expansion_constants,
    mu_threshold,
    q_poly,
    qs_ratio,
    reggrowth_check,
    rm_sequence,
    sandwich_check,
)
from uqr_web_lab.linearizer import make_linearizer
from uqr_web_lab.maps import example28_map, quadratic, similarity


@pytest.fixture(scope="module")
def c6():
    return make_linearizer(quadratic(-6.0), 3.0)


def test_q_poly():
    assert q_poly(3, 2) == 7
    assert q_poly(1, 5) == 1
    assert q_poly(4, 3) == 40
    with pytest.raises(PreconditionError):
        q_poly(0, 2)


def test_mu_threshold_examples():
    assert mu_threshold(2, 1, 2).mu_min == pytest.approx(1.0, abs=1e-12)
    t = mu_threshold(2, 1, 6)
    assert t.mu_min == pytest.approx(math.log(6) / math.log(2), abs=1e-12)
    assert t.chosen_mu == pytest.approx(1.05 * t.mu_min)
    with pytest.raises(NoValidMuError):
        mu_threshold(2, 2, 2)


def test_expansion_constants():
    e6 = expansion_constants(similarity(6.0), [1, 2, 5])
    assert (e6.N, e6.C3) == (1, pytest.approx(6.0, rel=1e-12))
    e12 = expansion_constants(similarity(1.2), [1, 2, 5])
    assert (e12.N, e12.C3) == (4, pytest.approx(1.2**4, rel=1e-12))
    assert e12.eta_at_1 == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(NotExpandingError):
        expansion_constants(similarity(0.5), [1, 2])


def test_qs_ratio_examples():
    assert qs_ratio(similarity(2.0), 1, 3, 4) == pytest.approx(3.0, rel=1e-12)
    assert qs_ratio(similarity(6.0), 2, 2, 7) == pytest.approx(1.0, rel=1e-12)
    # m(1, f) = |f(1)| = 1/5 and M(2, f) = |f(-2)| = |g2(2 g2^-1(-2))| = |g2(40)| = 4
    assert qs_ratio(example28_map(), 1, 2, 1) == pytest.approx(20.000000000000004, rel=1e-12)
    with pytest.raises(PreconditionError):
        qs_ratio(similarity(2.0), 3, 1, 1)


def test_sandwich_examples():
    f = quadratic(-6.0)
    consts = GrowthConstants(0.5, 2.0, 4.0, 2)
    r1 = sandwich_check(f, consts, 10.0, 1)
    assert r1.passed
    assert math.exp(r1.details["log_lower"]) == pytest.approx(50.0)
    assert math.exp(r1.details["log_upper"]) == pytest.approx(200.0)
    r2 = sandwich_check(f, consts, 10.0, 2)
    assert r2.passed
    assert math.exp(r2.details["log_orbit"]) == pytest.approx(8830.0, rel=1e-12)
    assert math.exp(r2.details["log_lower"]) == pytest.approx(1250.0)
    assert math.exp(r2.details["log_upper"]) == pytest.approx(80000.0)


def test_sandwich_inconsistent_degree_fails_report():
    # linear growth falls below a claimed degree-2 lower envelope
    rep = sandwich_check(similarity(2.0), GrowthConstants(0.5, 2.0, 0.5, 2), 10.0, 6)
    assert not rep.passed
    assert rep.details["failed_sides"] == ["lower"]
    with pytest.raises(PreconditionError):
        sandwich_check(quadratic(-6.0), GrowthConstants(0.5, 2.0, 4.0, 2), 3.0, 1)


def test_growth_constants_validation():
    with pytest.raises(PreconditionError):
        GrowthConstants(2.0, 1.0, 1.0, 2)
    with pytest.raises(PreconditionError):
        GrowthConstants(0.5, 2.0, 1.0, 2, K=2.0)


def test_reggrowth(c6):
    rep = reggrowth_check(c6, 6.0, 0.5, 20.0, 2)
    assert rep.passed
    assert rep.details["slack"] == pytest.approx(0.741, abs=1e-3)
    assert reggrowth_check(c6, 6.0, 0.5, 20.0, 1).passed
    with pytest.raises(PreconditionError):
        reggrowth_check(c6, 6.0, 0.5, 0.5, 2)


def test_rm_sequence(c6):
    synth = rm_sequence(lambda lr: 2 * lr, 2.0, 2.0, 2)
    assert synth.values == pytest.approx([8.0, 64.0], rel=1e-12)
    seq = rm_sequence(c6, 6.0, 20.0, 3)
    assert all(b > a for a, b in zip(seq.log_r, seq.log_r[1:]))
    assert all(b - a > math.log(6.0) for a, b in zip(seq.log_r, seq.log_r[1:]))
    assert len(rm_sequence(c6, 6.0, 20.0, 0)) == 0


def test_rm_sequence_truncates_on_overflow():
    seq = rm_sequence(lambda lr: math.inf if lr > 100 else 10 * lr, 2.0, 2.0, 6)
    assert seq.truncated
    assert len(seq) < 6


def test_centered_distortion():
    d = 1e-4
    assert centered_distortion(quadratic(-6.0), 3.0, d, 1) == pytest.approx((6 + d) / (6 - d), rel=1e-9)
    assert centered_distortion(similarity(2.0), 0.5 + 1j, 0.3, 2) == pytest.approx(1.0, abs=1e-12)
    assert centered_distortion(example28_map("g1"), 0j, 1.0, 1) == pytest.approx(10.0, rel=1e-3)
    with pytest.raises(PreconditionError):
        centered_distortion(quadratic(0.0), 0.0, 0.5, 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.floats(1.01, 1.9), st.floats(1.1, 20), st.floats(1.01, 1.5))
def test_mu_threshold_monotonicity(d, K, C3, step):
    base = mu_threshold(d, K, C3).mu_min
    assert mu_threshold(d, K, C3 * step).mu_min > base
    if K * step < d:
        assert mu_threshold(d, K * step, C3).mu_min > base
    assert mu_threshold(d + 1, K, C3).mu_min < base


@settings(max_examples=30, deadline=None)
@given(st.floats(1.1, 8), st.floats(0.1, 5), st.floats(1.0, 4), st.integers(1, 6))
def test_conformal_qs_ratio_is_t_over_s(c, s, k, m):
    t = s * k
    assert qs_ratio(similarity(c, 0.7), s, t, m) == pytest.approx(t / s, rel=1e-10)


@pytest.mark.parametrize("x", [10.0, 20.0, 50.0, -20j, 35 + 35j])
@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_sandwich_grid(x, j):
    assert sandwich_check(quadratic(-6.0), GrowthConstants(0.5, 2.0, 4.0, 2), x, j).passed
