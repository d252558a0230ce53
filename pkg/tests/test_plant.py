import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cladp._validation import ContractError
from cladp.plant import (CATALOG, CostSpec, PlantModel, drift, dynamics, instantaneous_cost,
                         make_model, scalar_model)

finite = st.floats(-5, 5, allow_nan=False)
# magnitudes whose squares do not underflow
nonzero_or_zero = st.one_of(st.just(0.0), st.floats(1e-6, 5), st.floats(-5, -1e-6))


def two_state_model():
    return PlantModel(n=2, m=1, p=2,
                      regressor=lambda x: np.array([[x[0], x[1]], [0.0, x[0]]]),
                      theta_star=np.array([1.0, 2.0]),
                      g=lambda x: np.array([[0.0], [1.0]]), name="two")


def test_drift_examples():
    m = scalar_model()
    np.testing.assert_allclose(drift(m, 0.0), [0.0])
    np.testing.assert_allclose(drift(m, 2.0), [-2.0])
    # second row is 0 * x1 + x1 * theta_2 = 2
    np.testing.assert_allclose(drift(two_state_model(), [1.0, 1.0]), [3.0, 2.0])


def test_dynamics_examples():
    m = scalar_model()
    np.testing.assert_allclose(dynamics(m, 0.0, 0.0), [0.0])
    np.testing.assert_allclose(dynamics(m, 1.0, 0.5), [-0.5])
    np.testing.assert_allclose(dynamics(m, 1.0, 1.0), [0.0])


def test_cost_examples():
    assert instantaneous_cost(CostSpec(1.0, 1.0), 0.0, 0.0) == 0.0
    assert instantaneous_cost(CostSpec(1.0, 1.0), 2.0, 1.0) == pytest.approx(5.0)
    assert instantaneous_cost(CostSpec(np.diag([1.0, 2.0]), 1.0), [1.0, 1.0], 0.0) == \
        pytest.approx(3.0)


def test_dimension_mismatch_rejected():
    with pytest.raises(ContractError):
        drift(scalar_model(), [1.0, 2.0])
    with pytest.raises(ContractError):
        dynamics(two_state_model(), [1.0, 1.0], [1.0, 2.0])


def test_nonzero_regressor_at_origin_rejected():
    with pytest.raises(ContractError):
        PlantModel(n=1, m=1, p=1, regressor=lambda x: np.array([[1.0]]),
                   theta_star=np.array([1.0]), g=lambda x: np.eye(1))


@pytest.mark.parametrize("Q,R", [(0.0, 1.0), (1.0, 0.0), ([[1.0, 2.0], [2.0, 1.0]], 1.0),
                                 ([[1.0, 0.5], [0.0, 1.0]], 1.0)])
def test_cost_requires_spd(Q, R):
    with pytest.raises(ContractError):
        CostSpec(Q, R)


def test_q_under_is_min_eigenvalue():
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    assert abs(CostSpec(Q, 1.0).q_under - np.linalg.eigvalsh(Q).min()) <= 1e-12


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_models_vanish_at_origin(name):
    kwargs = {"A": [[0.0, 1.0], [-1.0, -1.0]], "B": [[0.0], [1.0]]} if name == "linear" else {}
    m = make_model(name, **kwargs)
    np.testing.assert_array_equal(drift(m, np.zeros(m.n)), np.zeros(m.n))


@pytest.mark.parametrize("name", ["polynomial", "oscillator", "double_integrator"])
@settings(max_examples=50, deadline=None)
@given(x=arrays(float, 2, elements=finite))
def test_dynamics_with_zero_input_is_drift(name, x):
    m = make_model(name)
    np.testing.assert_array_equal(dynamics(m, x, np.zeros(m.m)), drift(m, x))
    # g stays bounded on the sampled box
    assert np.all(np.isfinite(m.gx(x))) and np.abs(m.gx(x)).max() <= 3.0


@settings(max_examples=100, deadline=None)
@given(x=arrays(float, 2, elements=nonzero_or_zero), u=nonzero_or_zero)
def test_cost_positive_definite(x, u):
    cost = CostSpec(np.diag([1.0, 2.0]), 0.5)
    r = instantaneous_cost(cost, x, u)
    assert r >= 0.0
    if np.any(x != 0) or u != 0:
        assert r > 0.0


def test_unknown_catalog_name():
    with pytest.raises(ContractError):
        make_model("pendulum")
