import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uqr_web_lab.errors import ConvergenceError, OutsideInjectivityError, PreconditionError
from uqr_web_lab.linearizer import (
    linearize,
    local_inverse,
    make_linearizer,
    poincare_series,
    residual,
)
from uqr_web_lab.maps import example28_map, loxodromic, polynomial, quadratic, similarity


@pytest.fixture(scope="module")
def sq():
    return make_linearizer(polynomial((0.0, 0.0, 1.0)), 1.0, multiplier=2.0, rho=2.5)


@pytest.fixture(scope="module")
def c6():
    return make_linearizer(quadratic(-6.0), 3.0)


def test_linearize_examples(sq, c6):
    assert complex(linearize(sq, 1.0)) == pytest.approx(math.e, abs=1e-8)
    assert complex(linearize(c6, 0.0)) == 3.0
    assert complex(linearize(sq, 0.0)) == 1.0
    assert abs(complex(linearize(c6, 1e-8)) - (3 + 1e-8)) < 1e-14


def test_residual_examples(sq, c6):
    assert residual(sq, 0.0) < 1e-12
    assert residual(sq, 1.5, relative=True) < 1e-8
    assert residual(c6, 2 + 1j, relative=True) < 1e-6


def test_local_inverse_examples(sq, c6):
    assert local_inverse(c6, 3.0) == 0
    assert local_inverse(sq, math.e) == pytest.approx(1.0, abs=1e-8)
    assert local_inverse(c6, 3.0001) == pytest.approx(1e-4, abs=1e-8)


def test_local_inverse_outside_chart(c6):
    with pytest.raises(OutsideInjectivityError):
        local_inverse(c6, 5000.0)


def test_poincare_series_of_square_is_exponential():
    a = poincare_series((0.0, 0.0, 1.0), 1.0, 2.0, 12)
    np.testing.assert_allclose(a.real, [1.0 / math.factorial(k) for k in range(13)], rtol=1e-12, atol=1e-15)
    assert a[0] == 1.0


def test_example_composite_linearizer():
    L = make_linearizer(example28_map("f"), 0j, multiplier=2.0, rho=0.5)
    # f^n = g o 2^n o g^-1 and g^-1 = g1^-1 near 0, so L = g o g1^-1 and L(4) = g2(4)
    assert complex(linearize(L, 4.0)) == pytest.approx(-0.4, abs=1e-9)


def test_model_preconditions():
    with pytest.raises(PreconditionError):
        make_linearizer(quadratic(-6.0), 2.0)
    with pytest.raises(PreconditionError):
        make_linearizer(quadratic(0.0), 0.0)
    with pytest.raises(PreconditionError):
        make_linearizer(similarity(2.0, dimension=3), (0.0, 0.0, 0.0))


def test_convergence_failure(c6):
    with pytest.raises(ConvergenceError) as exc:
        linearize(c6, 1e6, n_max=3)
    assert exc.value.diagnostic is not None


def test_spatial_similarity_linearizer():
    phi = loxodromic(2.0, dimension=3)
    f = similarity(2.0, translation=(1.0, 0.0, 0.0), dimension=3)
    L = make_linearizer(f, (-1.0, 0.0, 0.0), model_map=phi)
    z = np.array([0.3, -0.2, 0.5])
    np.testing.assert_allclose(linearize(L, z), z + np.array([-1.0, 0.0, 0.0]), atol=1e-12)
    assert residual(L, z) < 1e-12
    np.testing.assert_allclose(local_inverse(L, np.array([-0.7, -0.2, 0.5])), [0.3, -0.2, 0.5], atol=1e-10)


def test_closed_form_oracle_on_disk(sq):
    rng = np.random.default_rng(5)
    z = 2 * np.sqrt(rng.random(300)) * np.exp(2j * np.pi * rng.random(300))
    assert np.max(np.abs(linearize(sq, z) - np.exp(z))) < 1e-8


def test_functional_equation_on_large_disk(c6):
    rng = np.random.default_rng(6)
    z = 10 * np.sqrt(rng.random(512)) * np.exp(2j * np.pi * rng.random(512))
    assert np.max(residual(c6, z, relative=True)) < 1e-6


def test_more_iterations_do_not_raise_residual(c6):
    z = np.array([4 + 1j, -2 + 3j, 7.0])
    a = residual(c6, z, relative=True)
    L2 = make_linearizer(quadratic(-6.0), 3.0, tolerance=1e-14)
    b = residual(L2, z, relative=True)
    assert np.all(b <= a + 1e-13)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 0.7), st.floats(-math.pi, math.pi))
def test_round_trip(r, th):
    L = make_linearizer(quadratic(-6.0), 3.0)
    z = r * L.rho * np.exp(1j * th)
    back = local_inverse(L, complex(linearize(L, z)))
    assert abs(back - z) < 10 * L.tolerance * (1 + abs(z)) + 1e-10
