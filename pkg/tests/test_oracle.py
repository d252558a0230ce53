import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cladp._validation import ContractError
from cladp.adp import bellman_error_hat, policy
from cladp.basis import make_polynomial_basis
from cladp.oracle import (LqrOracle, RiccatiConvergenceError, care_residual, ideal_weights,
                          solve_care, solve_lyapunov_kron)
from cladp.plant import CostSpec, linear_model

from conftest import P_SCALAR, W_PLANAR


def test_scalar_care():
    np.testing.assert_allclose(solve_care(-1.0, 1.0, 1.0, 1.0), [[P_SCALAR]], rtol=1e-12)
    np.testing.assert_allclose(solve_care(0.0, 1.0, 1.0, 1.0, K0=1.0), [[1.0]], rtol=1e-12)


def test_double_integrator_care():
    A = [[0.0, 1.0], [0.0, 0.0]]
    B = [[0.0], [1.0]]
    P = solve_care(A, B, np.eye(2), 1.0, K0=[[1.0, 1.0]])
    s3 = np.sqrt(3.0)
    np.testing.assert_allclose(P, [[s3, 1.0], [1.0, s3]], rtol=1e-12)
    assert np.linalg.norm(care_residual(A, B, np.eye(2), 1.0, P), 2) <= 1e-10


def test_lyapunov_solver():
    A = np.array([[-1.0, 2.0], [0.0, -3.0]])
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    P = solve_lyapunov_kron(A, Q)
    np.testing.assert_allclose(A.T @ P + P @ A + Q, 0.0, atol=1e-12)


def test_unstabilized_start_fails_fast():
    with pytest.raises(RiccatiConvergenceError):
        solve_care(0.0, 1.0, 1.0, 1.0)


def test_ideal_weight_examples():
    np.testing.assert_allclose(ideal_weights(0.7, make_polynomial_basis(1, [2])), [0.7])
    s3 = np.sqrt(3.0)
    b2 = make_polynomial_basis(2, [2])
    np.testing.assert_allclose(ideal_weights([[s3, 1.0], [1.0, s3]], b2), W_PLANAR)
    np.testing.assert_allclose(ideal_weights(np.eye(2), b2), [1.0, 0.0, 1.0])


def test_ideal_weights_basis_mismatch():
    with pytest.raises(ContractError):
        ideal_weights(np.eye(2), make_polynomial_basis(2, [2, 4]))


def random_stable_instance(rng, n):
    A = rng.normal(size=(n, n))
    B = rng.normal(size=(n, 1))
    # shift so that A - B K0 is Hurwitz with K0 = 0
    A -= (np.linalg.eigvals(A).real.max() + 0.5) * np.eye(n)
    M = rng.normal(size=(n, n))
    return A, B, M @ M.T + np.eye(n)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 4))
def test_oracle_invariants(seed, n):
    rng = np.random.default_rng(seed)
    A, B, Q = random_stable_instance(rng, n)
    model = linear_model(A, B, K0=np.zeros((1, n)))
    cost = CostSpec(Q, 1.0)
    basis = make_polynomial_basis(n, [2])
    orc = LqrOracle.from_model(model, cost, basis)
    assert orc.residual <= 1e-10 * max(1.0, np.linalg.norm(Q, 2))
    assert np.linalg.eigvalsh(orc.P).min() > 0
    np.testing.assert_allclose(orc.K, B.T @ orc.P)
    for x in rng.uniform(-1, 1, size=(10, n)):
        assert abs(orc.W_star @ basis.sigma(x) - x @ orc.P @ x) <= 1e-10
        np.testing.assert_allclose(policy(basis, model, cost, orc.W_star, x), -orc.K @ x,
                                   atol=1e-10)
        assert abs(bellman_error_hat(basis, model, cost, orc.W_star, orc.W_star,
                                     model.theta_star, x)) <= 1e-10


def test_to_dict(planar):
    d = LqrOracle.from_model(*planar).to_dict()
    assert set(d) == {"P", "K", "W_star", "care_residual"}
    np.testing.assert_allclose(d["W_star"], W_PLANAR)
    assert d["care_residual"] <= 1e-10
