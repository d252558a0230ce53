"""State observer and concurrent-learning parameter identifier.

The identifier keeps a small history stack of recorded ``(x_j, u_j, xdot_j)``
triples. Its regressor Gram matrix ``sum_j Y_j' Y_j`` certifies that the drift
parameters are identifiable from the stored data; once that matrix is
positive definite the parameter error decays exponentially without any
persistence of excitation along the current trajectory.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import ContractError, check_matrix, check_spd, check_vector

REPLACE_TOL = 1e-12
DEFAULT_RANK_THRESHOLD = 1e-6


class EmptyStackError(RuntimeError):
    """The history stack holds no data, so the concurrent term is undefined."""


@dataclass(frozen=True)
class StackEntry:
    x: np.ndarray
    u: np.ndarray
    xdot: np.ndarray
    Y: np.ndarray
    g: np.ndarray

    @classmethod
    def record(cls, model, x, u, xdot):
        """Build an entry, caching ``Y(x)`` and ``g(x)``."""
        x = check_vector(x, model.n)
        u = check_vector(u, model.m, "u")
        xdot = check_vector(xdot, model.n, "xdot")
        return cls(x=x, u=u, xdot=xdot, Y=model.Y(x), g=model.gx(x))

    @property
    def gram(self):
        return self.Y.T @ self.Y

    @property
    def target(self):
        # Y'(xdot - g u), equal to Y'Y theta_star for exact derivatives
        return self.Y.T @ (self.xdot - self.g @ self.u)


def _min_eig(gram):
    """Smallest eigenvalue, with values inside the solver's round-off band set to 0."""
    if gram.shape[0] == 0:
        return 0.0
    lam = float(np.linalg.eigvalsh(gram)[0])
    noise = 8.0 * gram.shape[0] * np.finfo(float).eps * float(np.trace(gram))
    return lam if lam > noise else 0.0


@dataclass(frozen=True)
class HistoryStack:
    """Recorded data for the concurrent-learning update.

    ``gram`` and ``target`` are maintained incrementally; ``recompute`` rebuilds
    them from the entries.
    """

    capacity: int
    p: int
    entries: tuple = ()
    gram: np.ndarray = field(default=None, repr=False)
    target: np.ndarray = field(default=None, repr=False)
    y_under: float = 0.0

    def __post_init__(self):
        if int(self.capacity) < 1:
            raise ContractError("stack capacity must be a positive integer")
        if len(self.entries) > self.capacity:
            raise ContractError("more entries than capacity")
        if self.gram is None:
            gram, target = self.recompute()
            object.__setattr__(self, "gram", gram)
            object.__setattr__(self, "target", target)
            object.__setattr__(self, "y_under", _min_eig(gram))

    @classmethod
    def empty(cls, capacity, p):
        return cls(capacity=capacity, p=p)

    def __len__(self):
        return len(self.entries)

    @property
    def full(self):
        return len(self.entries) >= self.capacity

    def recompute(self):
        gram = np.zeros((self.p, self.p))
        target = np.zeros(self.p)
        for e in self.entries:
            gram += e.gram
            target += e.target
        return gram, target


def stack_insert(stack, candidate):
    """Offer ``candidate`` to the stack.

    Below capacity the entry is appended. A full stack swaps out the entry
    whose replacement gives the largest minimum eigenvalue of the Gram
    matrix, but only when that strictly improves ``y_under`` by more than
    ``1e-12``.

    Returns
    -------
    stack : HistoryStack
        The updated stack (the input is returned unchanged on rejection).
    accepted : bool
    """
    if candidate.Y.shape != (candidate.Y.shape[0], stack.p):
        raise ContractError(f"candidate regressor has {candidate.Y.shape[1]} columns, "
                            f"stack expects {stack.p}")
    cand_gram = candidate.gram
    cand_target = candidate.target

    if not stack.full:
        gram = stack.gram + cand_gram
        gram = 0.5 * (gram + gram.T)
        return HistoryStack(stack.capacity, stack.p, stack.entries + (candidate,),
                            gram, stack.target + cand_target, _min_eig(gram)), True

    best_k, best_y, best_gram = None, stack.y_under, None
    for k, old in enumerate(stack.entries):
        gram = stack.gram - old.gram + cand_gram
        gram = 0.5 * (gram + gram.T)
        y = _min_eig(gram)
        if y > best_y + REPLACE_TOL:
            best_k, best_y, best_gram = k, y, gram
    if best_k is None:
        return stack, False

    old = stack.entries[best_k]
    entries = stack.entries[:best_k] + (candidate,) + stack.entries[best_k + 1:]
    target = stack.target - old.target + cand_target
    return HistoryStack(stack.capacity, stack.p, entries, best_gram, target, best_y), True


def rank_certificate(stack, threshold=DEFAULT_RANK_THRESHOLD):
    """Return ``(passed, y_under)``; passes when the Gram matrix is well conditioned
    enough that its minimum eigenvalue exceeds ``threshold``."""
    return stack.y_under > threshold, stack.y_under


@dataclass(frozen=True)
class IdentifierState:
    xhat: np.ndarray
    thetahat: np.ndarray


@dataclass(frozen=True)
class IdentifierGains:
    """Observer gain ``k_x`` (diagonal), adaptation gain ``Gamma_theta`` and
    concurrent-learning gain ``k_theta``.

    ``k_theta = 0`` is accepted and switches the recorded-data term off.
    """

    k_x: np.ndarray
    Gamma_theta: np.ndarray
    k_theta: float

    def __post_init__(self):
        k_x = np.asarray(self.k_x, dtype=float)
        if k_x.ndim <= 1:
            k_x = np.diag(np.atleast_1d(k_x))
        if np.any(k_x != np.diag(np.diag(k_x))):
            raise ContractError("k_x must be diagonal")
        if np.any(np.diag(k_x) <= 0):
            raise ContractError("k_x must have a positive diagonal")
        Gt = np.atleast_2d(np.asarray(self.Gamma_theta, dtype=float))
        check_spd(Gt, "Gamma_theta")
        k_theta = float(self.k_theta)
        if not np.isfinite(k_theta) or k_theta < 0:
            raise ContractError("k_theta must be a nonnegative finite number")
        object.__setattr__(self, "k_x", k_x)
        object.__setattr__(self, "Gamma_theta", Gt)
        object.__setattr__(self, "k_theta", k_theta)

    @property
    def k_x_under(self):
        return float(np.diag(self.k_x).min())


def observer_derivative(state, gains, model, x, u):
    """``Y(x) thetahat + g(x) u + k_x (x - xhat)``."""
    x = check_vector(x, model.n)
    u = check_vector(u, model.m, "u")
    xhat = check_vector(state.xhat, model.n, "xhat")
    thetahat = check_vector(state.thetahat, model.p, "thetahat")
    return model.Y(x) @ thetahat + model.gx(x) @ u + gains.k_x @ (x - xhat)


def theta_update_derivative(state, gains, stack, model, x, xtilde):
    """Concurrent-learning parameter update.

    ``Gamma_theta Y(x)' xtilde + Gamma_theta k_theta sum_j Y_j'(xdot_j - g_j u_j - Y_j thetahat)``

    Raises
    ------
    EmptyStackError
        If the stack holds no entries.
    """
    if len(stack) == 0:
        raise EmptyStackError("history stack is empty; identifier has no recorded data")
    x = check_vector(x, model.n)
    xtilde = check_vector(xtilde, model.n, "xtilde")
    thetahat = check_vector(state.thetahat, model.p, "thetahat")
    recorded = stack.target - stack.gram @ thetahat
    return gains.Gamma_theta @ (model.Y(x).T @ xtilde + gains.k_theta * recorded)


def smooth_derivative(trajectory, index, dt):
    """Central-difference derivative of a uniformly sampled trajectory.

    Parameters
    ----------
    trajectory : array of shape (T, n) or (T,)
    index : int
        Sample index; needs a neighbour on each side.
    dt : float
        Sampling step.
    """
    traj = np.asarray(trajectory, dtype=float)
    if traj.ndim == 1:
        traj = traj[:, None]
    if index < 1 or index > traj.shape[0] - 2:
        raise ContractError(f"central difference needs neighbours on both sides of index {index}")
    if dt <= 0:
        raise ContractError("dt must be positive")
    return (traj[index + 1] - traj[index - 1]) / (2.0 * dt)


def lyapunov_v0(xtilde, thetatilde, Gamma_theta):
    """``0.5 |xtilde|^2 + 0.5 thetatilde' Gamma_theta^-1 thetatilde``."""
    xtilde = np.atleast_1d(np.asarray(xtilde, dtype=float))
    thetatilde = np.atleast_1d(np.asarray(thetatilde, dtype=float))
    return 0.5 * float(xtilde @ xtilde) + 0.5 * float(
        thetatilde @ np.linalg.solve(np.atleast_2d(Gamma_theta), thetatilde))
