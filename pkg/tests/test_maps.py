import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uqr_web_lab.errors import PreconditionError, UnreliableEstimateError
from uqr_web_lab.geom import Point, Ring
from uqr_web_lab.maps import (
    MapSpec,
    degree,
    estimate_dilatation,
    evaluate,
    example28_map,
    g1,
    g1_inv,
    g_inv,
    g_map,
    loxodromic,
    polynomial,
    quadratic,
    similarity,
)


def test_evaluate_examples():
    assert evaluate(example28_map("f"), 1.0 + 0j) == pytest.approx(-0.2 + 0j, abs=1e-15)
    assert evaluate(example28_map("g1"), -1.0 + 0j) == pytest.approx(-0.1 + 0j, abs=1e-15)
    assert evaluate(quadratic(-6.0), 10.0) == 94.0
    assert evaluate(example28_map("f"), 0j) == 0
    assert evaluate(example28_map("g2"), 1.0 + 0j) == pytest.approx(-0.1 + 0j, abs=1e-15)


def test_evaluate_point_and_overflow():
    p = evaluate(quadratic(-6.0), Point((10.0, 0.0)))
    assert p.coords == (94.0, 0.0)
    big = evaluate(quadratic(0.0), 1e200)
    assert math.isinf(abs(big))
    q = evaluate(similarity(2.0, dimension=3), Point((1.0, 2.0, 3.0)))
    assert q.coords == (2.0, 4.0, 6.0)


def test_degree():
    assert degree(quadratic(1 + 1j)) == 2
    assert degree(similarity(3.0)) == 1
    assert degree(example28_map()) == 1
    assert polynomial((1, 2, 3, 4)).degree == 3


def test_mapspec_validation():
    with pytest.raises(PreconditionError):
        polynomial((1.0, 0.0))
    with pytest.raises(PreconditionError):
        similarity(0.0)
    with pytest.raises(PreconditionError):
        loxodromic(0.9)
    with pytest.raises(PreconditionError):
        MapSpec("bytecode")
    with pytest.raises(PreconditionError):
        similarity(1.0, rotation=[[1, 0], [0, -1]])
    with pytest.raises(PreconditionError):
        example28_map("h")


def test_config_round_trip():
    for f in (quadratic(-6.0), similarity(2.0, 0.3, (1.0, -1.0)), example28_map("g"),
              loxodromic(2.0, np.eye(3), dimension=3)):
        assert MapSpec.from_config(f.to_config()) == f


def test_dilatation_examples():
    assert estimate_dilatation(quadratic(-6.0), Ring(0j, 1.0, 2.0), 48).K == pytest.approx(1.0, abs=1e-6)
    k1 = estimate_dilatation(example28_map("g1"), Ring(0j, 0.1, 1.0), 32, sector=(0.6 * math.pi, 1.4 * math.pi))
    assert k1.K == pytest.approx(10.0, rel=0.01)
    assert estimate_dilatation(similarity(2.0), Ring(0j, 1.0, 3.0), 16).K == pytest.approx(1.0, abs=1e-6)
    assert estimate_dilatation(loxodromic(3.0, dimension=3), Ring((0.0, 0.0, 0.0), 1.0, 2.0), 8).K == pytest.approx(1.0, abs=1e-6)


def test_dilatation_of_interpolation_is_finite():
    est = estimate_dilatation(example28_map("g"), Ring(0j, 1.05, 1.95), 48)
    assert 1.0 <= est.K < 1e6
    assert est.skipped <= 0.01 * est.cells


class _Reflection:
    dimension = 2

    def __call__(self, z):
        return np.conj(np.asarray(z, dtype=complex))


def test_dilatation_degenerate_cells():
    with pytest.raises(UnreliableEstimateError):
        estimate_dilatation(_Reflection(), Ring(0j, 1.0, 2.0), 8)


def test_pieces_invert():
    rng = np.random.default_rng(0)
    z = 3 * (rng.random(400) - 0.5) + 3j * (rng.random(400) - 0.5)
    np.testing.assert_allclose(g_inv(g_map(z)), z, atol=1e-9)
    np.testing.assert_allclose(g1_inv(g1(z)), z, atol=1e-12)


def test_example_composite_matches_inner_piece():
    # exact on g1(B(0, 1/2)), where 2 g1^-1(z) stays in the unit disk
    rng = np.random.default_rng(1)
    u = 0.5 * np.sqrt(rng.random(500)) * np.exp(2j * np.pi * rng.random(500))
    z = g1(u)
    f = example28_map("f")
    np.testing.assert_array_equal(f(z), g1(2 * g1_inv(z)))


def test_example_composite_iterates_are_injective():
    f = example28_map("f")
    x = np.linspace(-3, 3, 61)
    grid = (x[:, None] + 1j * x[None, :]).ravel()
    img = f.iterate(grid, 3)
    d = np.abs(img[:, None] - img[None, :]) + np.eye(len(img))
    assert d.min() > 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5), st.floats(-math.pi, math.pi), st.floats(-3, 3), st.floats(-3, 3))
def test_similarity_dilatation_is_one(s, th, a, b):
    est = estimate_dilatation(similarity(s, th, (a, b)), Ring(0j, 0.5, 1.5), 8)
    assert est.K == pytest.approx(1.0, abs=1e-6)
