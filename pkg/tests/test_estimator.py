import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from cladp.estimator import OptimalRegulator


@pytest.fixture(scope="module")
def fitted():
    return OptimalRegulator(t_final=10.0).fit(np.linspace(-1, 1, 5)[:, None])


def test_params_and_clone():
    est = OptimalRegulator(config="planar_lqr.cfg", seed=2, t_final=3.0)
    assert est.get_params() == {"config": "planar_lqr.cfg", "seed": 2, "t_final": 3.0}
    assert clone(est).get_params() == est.get_params()


def test_predict_matches_lqr_gain(fitted):
    X = np.array([[0.5], [-1.0], [0.0]])
    u = fitted.predict(X)
    assert u.shape == (3, 1)
    np.testing.assert_allclose(u[:, 0], -(np.sqrt(2) - 1) * X[:, 0], atol=0.02)
    np.testing.assert_allclose(fitted.value(X), (np.sqrt(2) - 1) * X[:, 0] ** 2, atol=0.02)
    assert -1e-3 < fitted.score(X) <= 0.0


def test_not_fitted():
    with pytest.raises(NotFittedError):
        OptimalRegulator().predict([[1.0]])


def test_input_validation(fitted):
    with pytest.raises(ValueError):
        fitted.predict([[1.0, 2.0]])
    with pytest.raises(ValueError):
        fitted.predict([[np.nan]])
    with pytest.raises(ValueError):
        OptimalRegulator(t_final=0.1).fit([[1.0, 2.0]])
