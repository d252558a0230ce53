import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cladp._validation import ContractError
from cladp.basis import g_sigma, make_polynomial_basis
from cladp.plant import CostSpec, make_model, scalar_model


def test_scalar_quadratic_basis():
    b = make_polynomial_basis(1, [2])
    assert b.L == 1
    np.testing.assert_allclose(b.sigma(3.0), [9.0])
    np.testing.assert_allclose(b.sigma_grad(3.0), [[6.0]])


def test_planar_quadratic_basis():
    b = make_polynomial_basis(2, [2])
    assert b.L == 3
    np.testing.assert_allclose(b.sigma([1.0, 2.0]), [1.0, 2.0, 4.0])
    np.testing.assert_allclose(b.sigma_grad([1.0, 2.0]), [[2.0, 0.0], [2.0, 1.0], [0.0, 4.0]])


@pytest.mark.parametrize("degrees", [[0], [1], [1, 2]])
def test_low_degrees_rejected(degrees):
    with pytest.raises(ContractError):
        make_polynomial_basis(2, degrees)


def test_mixed_degree_count():
    # 3 quadratic + 5 quartic monomials in two variables
    assert make_polynomial_basis(2, [2, 4]).L == 8


def test_vanishes_at_origin():
    b = make_polynomial_basis(3, [2, 3])
    np.testing.assert_array_equal(b.sigma(np.zeros(3)), 0.0)
    np.testing.assert_array_equal(b.sigma_grad(np.zeros(3)), 0.0)


def test_g_sigma_examples():
    b = make_polynomial_basis(1, [2])
    m = scalar_model()
    np.testing.assert_allclose(g_sigma(b, m, CostSpec(1.0, 1.0), 0.0), [[0.0]])
    np.testing.assert_allclose(g_sigma(b, m, CostSpec(1.0, 1.0), 1.0), [[4.0]])
    np.testing.assert_allclose(g_sigma(b, m, CostSpec(1.0, 2.0), 1.0), [[2.0]])


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(0)
    b = make_polynomial_basis(2, [2, 3, 4])
    h = 1e-5
    for _ in range(100):
        x = rng.uniform(-2, 2, size=2)
        fd = np.column_stack([(b.sigma(x + h * e) - b.sigma(x - h * e)) / (2 * h)
                              for e in np.eye(2)])
        J = b.sigma_grad(x)
        assert np.linalg.norm(J - fd) <= 1e-6 * max(1.0, np.linalg.norm(J))


@settings(max_examples=60, deadline=None)
@given(x=arrays(float, 2, elements=st.floats(-3, 3, allow_nan=False)))
def test_g_sigma_symmetric_psd(x):
    b = make_polynomial_basis(2, [2, 4])
    G = g_sigma(b, make_model("oscillator"), CostSpec(np.eye(2), 0.7), x)
    np.testing.assert_allclose(G, G.T, atol=1e-12)
    assert np.linalg.eigvalsh(G).min() >= -1e-10 * max(1.0, np.abs(G).max())
