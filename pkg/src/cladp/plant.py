"""Control-affine plants with linearly parameterized drift, and quadratic costs.

A plant is ``xdot = Y(x) @ theta_star + g(x) @ u``. The true parameter vector
is visible to the simulator only; learners see ``Y`` and ``g``.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._validation import ContractError, check_matrix, check_spd, check_vector

ORIGIN_TOL = 1e-12


@dataclass(frozen=True)
class PlantModel:
    """Control-affine plant ``f(x) = Y(x) theta_star`` with known ``g(x)``.

    Parameters
    ----------
    n, m, p : int
        State, input and parameter dimensions.
    regressor : callable
        ``x -> Y(x)`` with shape ``(n, p)``; must vanish at the origin.
    theta_star : array of shape (p,)
        True drift parameters.
    g : callable
        ``x -> g(x)`` with shape ``(n, m)``.
    name : str
        Catalog label, informational only.
    A, B : arrays or None
        Linear realization ``(A, B)`` when the plant is linear with constant
        input matrix; used by the LQR oracle.
    K0 : array or None
        A known stabilizing gain for ``(A, B)``.
    """

    n: int
    m: int
    p: int
    regressor: Callable
    theta_star: np.ndarray
    g: Callable
    name: str = "custom"
    A: np.ndarray = field(default=None, repr=False)
    B: np.ndarray = field(default=None, repr=False)
    K0: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        for dim in ("n", "m", "p"):
            if int(getattr(self, dim)) < 1:
                raise ContractError(f"{dim} must be a positive integer")
        object.__setattr__(self, "theta_star", check_vector(self.theta_star, self.p, "theta_star"))
        zero = np.zeros(self.n)
        Y0 = check_matrix(self.regressor(zero), (self.n, self.p), "Y(0)")
        if np.abs(Y0).max() > ORIGIN_TOL:
            raise ContractError("regressor must vanish at the origin so that f(0) = 0")
        check_matrix(self.g(zero), (self.n, self.m), "g(0)")

    def Y(self, x):
        return np.asarray(self.regressor(x), dtype=float).reshape(self.n, self.p)

    def gx(self, x):
        return np.asarray(self.g(x), dtype=float).reshape(self.n, self.m)

    @property
    def is_linear(self):
        return self.A is not None and self.B is not None


@dataclass(frozen=True)
class CostSpec:
    """Quadratic running cost ``x'Qx + u'Ru``."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        q_under = check_spd(Q, "Q")
        check_spd(R, "R")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "_q_under", q_under)
        object.__setattr__(self, "_R_inv", np.linalg.inv(R))

    @property
    def q_under(self):
        """Smallest eigenvalue of ``Q``."""
        return self._q_under

    @property
    def R_inv(self):
        return self._R_inv


def drift(model, x):
    """Drift ``Y(x) theta_star``."""
    x = check_vector(x, model.n)
    return model.Y(x) @ model.theta_star


def dynamics(model, x, u):
    """Right-hand side ``f(x) + g(x) u``."""
    x = check_vector(x, model.n)
    u = check_vector(u, model.m, "u")
    return model.Y(x) @ model.theta_star + model.gx(x) @ u


def instantaneous_cost(cost, x, u):
    x = check_vector(x, cost.Q.shape[0])
    u = check_vector(u, cost.R.shape[0], "u")
    return float(x @ cost.Q @ x + u @ cost.R @ u)


# ---------------------------------------------------------------------------
# catalog


def scalar_model(a=-1.0, b=1.0):
    """Scalar plant ``xdot = a x + b u`` with regressor ``Y(x) = x``."""
    b = float(b)
    return PlantModel(
        n=1, m=1, p=1,
        regressor=lambda x: np.reshape(x, (1, 1)),
        theta_star=[float(a)],
        g=lambda x: np.array([[b]]),
        name="scalar",
        A=np.array([[float(a)]]),
        B=np.array([[b]]),
        K0=np.array([[max(0.0, float(a)) / b + 1.0 / b]]) if b != 0 else None,
    )


def linear_model(A, B, K0=None):
    """Linear plant ``xdot = A x + B u``.

    Every entry of ``A`` is treated as unknown: ``Y(x) = kron(I_n, x')`` and
    ``theta_star`` is ``A`` flattened row by row, so ``p = n**2``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    m = B.shape[1]
    eye = np.eye(n)
    K0 = None if K0 is None else np.asarray(K0, dtype=float).reshape(m, n)
    return PlantModel(
        n=n, m=m, p=n * n,
        regressor=lambda x: np.kron(eye, np.reshape(x, (1, n))),
        theta_star=A.ravel(),
        g=lambda x: B,
        name="linear",
        A=A, B=B, K0=K0,
    )


def double_integrator():
    """``x1dot = x2, x2dot = u``; ``u = -x1 - x2`` stabilizes it."""
    return linear_model([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], K0=[[1.0, 1.0]])


def polynomial_model(theta=(-1.0, 1.0, -1.0, -1.0, -1.0)):
    """Two-state plant with cubic drift and constant input channel.

    ``x1dot = t0 x1 + t1 x2``,
    ``x2dot = t2 x1 + t3 x2 + t4 x1**2 x2 + u``.
    """

    def regressor(x):
        x1, x2 = x[0], x[1]
        return np.array([[x1, x2, 0.0, 0.0, 0.0],
                         [0.0, 0.0, x1, x2, x1 * x1 * x2]])

    B = np.array([[0.0], [1.0]])
    return PlantModel(n=2, m=1, p=5, regressor=regressor, theta_star=theta,
                      g=lambda x: B, name="polynomial")


def oscillator_model(theta=(-1.0, 1.0, -0.5, -0.5)):
    """Nonlinear plant whose optimal value for ``Q = I, R = 1`` is known.

    ``f = [-x1 + x2, -0.5 x1 - 0.5 x2 (1 - (cos(2 x1) + 2)**2)]`` and
    ``g = [0, cos(2 x1) + 2]``; the optimal value function is
    ``0.5 x1**2 + x2**2``.
    """

    def regressor(x):
        x1, x2 = x[0], x[1]
        c = np.cos(2.0 * x1) + 2.0
        return np.array([[x1, x2, 0.0, 0.0],
                         [0.0, 0.0, x1, x2 * (1.0 - c * c)]])

    def g(x):
        return np.array([[0.0], [np.cos(2.0 * x[0]) + 2.0]])

    return PlantModel(n=2, m=1, p=4, regressor=regressor, theta_star=theta, g=g,
                      name="oscillator")


CATALOG = {
    "scalar": scalar_model,
    "linear": linear_model,
    "double_integrator": double_integrator,
    "polynomial": polynomial_model,
    "oscillator": oscillator_model,
}


def make_model(name, **params):
    """Build a catalog plant by name."""
    try:
        factory = CATALOG[name]
    except KeyError:
        raise ContractError(
            f"unknown plant {name!r}; choose from {sorted(CATALOG)}") from None
    return factory(**params)
