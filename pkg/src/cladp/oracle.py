"""Ground truth for linear-quadratic instances.

For a linear plant and a quadratic basis the value function is exactly
``x' P x`` with ``P`` solving the continuous algebraic Riccati equation, so the
ideal critic/actor weights are known in closed form.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import ContractError
from .basis import _monomial_exponents


class RiccatiConvergenceError(RuntimeError):
    pass


def solve_lyapunov_kron(A, Q):
    """Solve ``A' P + P A + Q = 0`` through the Kronecker-product linear system."""
    A = np.atleast_2d(A)
    n = A.shape[0]
    eye = np.eye(n)
    # row-major vec: vec(A'P) = (A' kron I) vec(P), vec(PA) = (I kron A') vec(P)
    M = np.kron(A.T, eye) + np.kron(eye, A.T)
    P = np.linalg.solve(M, -np.asarray(Q, dtype=float).ravel()).reshape(n, n)
    return 0.5 * (P + P.T)


def care_residual(A, B, Q, R, P):
    A, B, Q, R, P = (np.atleast_2d(np.asarray(v, dtype=float)) for v in (A, B, Q, R, P))
    return A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q


def solve_care(A, B, Q, R, K0=None, tol=1e-12, max_iter=100):
    """Newton-Kleinman iteration for ``A'P + PA - P B R^-1 B' P + Q = 0``.

    Parameters
    ----------
    K0 : array (m, n), optional
        Stabilizing initial gain. Defaults to zero, which is only valid when
        ``A`` is Hurwitz.

    Raises
    ------
    RiccatiConvergenceError
        When ``A - B K0`` is not Hurwitz or the residual norm does not fall
        below ``tol * max(1, |Q|)`` within ``max_iter`` iterations.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    m = B.shape[1]
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    K = np.zeros((m, n)) if K0 is None else np.asarray(K0, dtype=float).reshape(m, n)

    if np.linalg.eigvals(A - B @ K).real.max() >= 0:
        raise RiccatiConvergenceError("initial gain does not stabilize (A, B)")

    scale = max(1.0, np.linalg.norm(Q, 2))
    for _ in range(max_iter):
        Acl = A - B @ K
        P = solve_lyapunov_kron(Acl, Q + K.T @ R @ K)
        K = np.linalg.solve(R, B.T @ P)
        res = np.linalg.norm(care_residual(A, B, Q, R, P), 2)
        if res <= tol * scale:
            return P
    raise RiccatiConvergenceError(f"Newton-Kleinman did not converge (residual {res:.3e})")


def ideal_weights(P, basis):
    """Weights of ``x' P x`` on the full degree-2 monomial basis.

    ``x_i**2`` gets ``P[i, i]``; ``x_i x_j`` with ``i < j`` gets ``2 P[i, j]``.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    n = P.shape[0]
    expected = np.array(_monomial_exponents(n, 2))
    E = getattr(basis, "exponents", None)
    if E is None or E.shape != expected.shape or np.any(E != expected):
        raise ContractError("ideal weights need the full degree-2 monomial basis")
    W = np.empty(E.shape[0])
    for k, e in enumerate(E):
        idx = np.flatnonzero(e)
        if idx.size == 1:
            W[k] = P[idx[0], idx[0]]
        else:
            W[k] = 2.0 * P[idx[0], idx[1]]
    return W


@dataclass(frozen=True)
class LqrOracle:
    A: np.ndarray
    B: np.ndarray
    P: np.ndarray
    K: np.ndarray
    W_star: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    @property
    def residual(self):
        return float(np.linalg.norm(care_residual(self.A, self.B, self.Q, self.R, self.P), 2))

    @classmethod
    def from_model(cls, model, cost, basis):
        if not model.is_linear:
            raise ContractError(f"plant {model.name!r} has no linear realization")
        P = solve_care(model.A, model.B, cost.Q, cost.R, K0=model.K0)
        K = np.linalg.solve(cost.R, model.B.T @ P)
        return cls(A=model.A, B=model.B, P=P, K=K, W_star=ideal_weights(P, basis),
                   Q=cost.Q, R=cost.R)

    def to_dict(self):
        return {
            "P": self.P.tolist(),
            "K": self.K.tolist(),
            "W_star": self.W_star.tolist(),
            "care_residual": self.residual,
        }
