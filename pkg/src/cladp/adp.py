"""Actor-critic learning from Bellman errors at the current state and at
pre-sampled points of the state space.

The critic weights follow a normalized least-squares law with a forgetting
factor and a saturated gain matrix; the actor weights track the critic.
Because the plant model (with estimated parameters) is available, the
Bellman error can be evaluated anywhere, so a fixed set of sample points
supplies the excitation that would otherwise need probing noise.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import ContractError, check_matrix, check_positive, check_vector
from .basis import g_sigma

DEFAULT_C_THRESHOLD = 1e-6
BOUNDARY_RTOL = 1e-12


class EmptySampleSetError(RuntimeError):
    """The learning law needs at least one sample point."""


@dataclass(frozen=True)
class AdpGains:
    """Critic/actor gains.

    ``Gamma_under`` is the lower bound on ``lambda_min(Gamma)`` that the gain
    verifier and the bound checks assume; it does not enter the update laws.
    ``eta_a2`` may be zero (no actor leakage); every other gain is positive.
    """

    eta_c1: float
    eta_c2: float
    eta_a1: float
    eta_a2: float
    nu: float
    beta: float
    Gamma_bar: float
    Gamma_under: float

    def __post_init__(self):
        for name in ("eta_c1", "eta_c2", "eta_a1", "nu", "beta", "Gamma_bar", "Gamma_under"):
            object.__setattr__(self, name, check_positive(getattr(self, name), name))
        eta_a2 = float(self.eta_a2)
        if not np.isfinite(eta_a2) or eta_a2 < 0:
            raise ContractError("eta_a2 must be a nonnegative finite number")
        object.__setattr__(self, "eta_a2", eta_a2)
        if self.Gamma_under > self.Gamma_bar:
            raise ContractError("Gamma_under must not exceed Gamma_bar")


@dataclass(frozen=True)
class CriticActorState:
    W_c: np.ndarray
    W_a: np.ndarray
    Gamma: np.ndarray


@dataclass(frozen=True)
class SamplePointSet:
    """Bellman-error evaluation points with per-point caches.

    Attributes
    ----------
    points : (N, n)
    sigma_grad : (N, L, n)
    g : (N, n, m)
    Y : (N, n, p)
    D : (N, L, m)
        ``sigma_grad @ g``.
    G_sigma : (N, L, L)
    sigma_Y : (N, L, p)
        ``sigma_grad @ Y``.
    state_cost : (N,)
        ``x_i' Q x_i``.
    """

    points: np.ndarray
    sigma_grad: np.ndarray
    g: np.ndarray
    Y: np.ndarray
    D: np.ndarray
    G_sigma: np.ndarray
    sigma_Y: np.ndarray
    state_cost: np.ndarray

    @property
    def N(self):
        return self.points.shape[0]

    @classmethod
    def from_points(cls, points, basis, model, cost, radius=None):
        """Evaluate and cache everything that does not depend on the estimates."""
        pts = np.asarray(points, dtype=float).reshape(-1, model.n)
        if pts.shape[0] == 0:
            raise EmptySampleSetError("sample set must contain at least one point")
        if not np.all(np.isfinite(pts)):
            raise ContractError("sample points must be finite")
        if radius is not None:
            norms = np.linalg.norm(pts, axis=1)
            if norms.max() > radius * (1.0 + 1e-12):
                raise ContractError(
                    f"sample point at distance {norms.max():.6g} lies outside the ball of radius {radius:.6g}")
        sg = np.stack([basis.sigma_grad(x) for x in pts])
        g = np.stack([model.gx(x) for x in pts])
        Y = np.stack([model.Y(x) for x in pts])
        D = sg @ g
        G_sigma = D @ cost.R_inv @ np.swapaxes(D, 1, 2)
        state_cost = np.einsum("in,nk,ik->i", pts, cost.Q, pts)
        return cls(points=pts, sigma_grad=sg, g=g, Y=Y, D=D, G_sigma=G_sigma,
                   sigma_Y=sg @ Y, state_cost=state_cost)


def _balanced_counts(N, n):
    """Per-axis point counts with product ``N``, as equal as possible, or None."""
    if n == 1:
        return [N]
    best = None

    def rec(remaining, dims, acc):
        nonlocal best
        if dims == 1:
            counts = sorted(acc + [remaining])
            if counts[0] >= 2 and (best is None or counts[-1] - counts[0] < best[-1] - best[0]):
                best = counts
            return
        for d in range(2, remaining + 1):
            if remaining % d == 0:
                rec(remaining // d, dims - 1, acc + [d])

    rec(N, n, [])
    return best


def sample_box_points(lower, upper, N, method="auto", seed=None, jitter=0.0):
    """Deterministic, evenly spread points in the box ``[lower, upper]``.

    ``method="lattice"`` builds a tensor grid whose axis counts multiply to
    ``N``; ``"halton"`` uses an unscrambled Halton sequence. ``"auto"`` picks
    the lattice whenever every axis gets at least two points. Optional
    ``jitter`` (a fraction of the box width) is drawn from a seeded generator
    and clipped to the box.
    """
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    n = lower.size
    if upper.size != n or np.any(upper <= lower):
        raise ContractError("sample box needs lower < upper in every coordinate")
    N = int(N)
    if N < 1:
        raise ContractError("N must be a positive integer")

    counts = _balanced_counts(N, n) if method in ("auto", "lattice") else None
    if method == "lattice" and counts is None:
        raise ContractError(f"cannot arrange {N} points on a {n}-dimensional lattice")
    if counts is not None:
        axes = [np.linspace(lo, hi, c) if c > 1 else np.array([0.5 * (lo + hi)])
                for lo, hi, c in zip(lower, upper, counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
    elif method in ("auto", "halton"):
        from scipy.stats import qmc

        unit = qmc.Halton(d=n, scramble=False).random(N)
        pts = lower + unit * (upper - lower)
    else:
        raise ContractError(f"unknown sampling method {method!r}")

    if jitter:
        rng = np.random.default_rng(seed)
        pts = pts + jitter * (upper - lower) * rng.uniform(-0.5, 0.5, size=pts.shape)
        pts = np.clip(pts, lower, upper)
    return pts


# ---------------------------------------------------------------------------
# pointwise quantities


def policy(basis, model, cost, W_a, x):
    """``-1/2 R^-1 g(x)' sigma'(x)' W_a``."""
    x = check_vector(x, basis.n)
    W_a = check_vector(W_a, basis.L, "W_a")
    return -0.5 * cost.R_inv @ (model.gx(x).T @ (basis.sigma_grad(x).T @ W_a))


def omega(basis, model, cost, thetahat, W_a, x):
    """Bellman-error regressor ``sigma'(x) (Y(x) thetahat + g(x) u(x))``."""
    x = check_vector(x, basis.n)
    thetahat = check_vector(thetahat, model.p, "thetahat")
    u = policy(basis, model, cost, W_a, x)
    return basis.sigma_grad(x) @ (model.Y(x) @ thetahat + model.gx(x) @ u)


def normalization_rho(gains, Gamma, omega_val):
    """``1 + nu omega' Gamma omega``."""
    w = np.atleast_1d(np.asarray(omega_val, dtype=float))
    return 1.0 + gains.nu * float(w @ np.atleast_2d(Gamma) @ w)


def bellman_error_hat(basis, model, cost, W_c, W_a, thetahat, x):
    """Approximate Bellman error ``omega' W_c + x'Qx + u'Ru`` with ``u = policy(W_a)``."""
    x = check_vector(x, basis.n)
    W_c = check_vector(W_c, basis.L, "W_c")
    u = policy(basis, model, cost, W_a, x)
    w = omega(basis, model, cost, thetahat, W_a, x)
    return float(w @ W_c + x @ cost.Q @ x + u @ cost.R @ u)


def hamiltonian_residual(basis, model, cost, W_star, x, eps_grad=None):
    """HJB residual of ``V = W_star' sigma + eps`` under the true drift.

    ``eps_grad`` maps ``x`` to the gradient of the reconstruction error; it is
    taken as zero when omitted. The residual vanishes when ``V`` is the
    optimal value function.
    """
    x = check_vector(x, basis.n)
    grad = basis.sigma_grad(x).T @ check_vector(W_star, basis.L, "W_star")
    if eps_grad is not None:
        grad = grad + check_vector(eps_grad(x), basis.n, "eps_grad")
    g = model.gx(x)
    u = -0.5 * cost.R_inv @ (g.T @ grad)
    f = model.Y(x) @ model.theta_star
    return float(grad @ (f + g @ u) + x @ cost.Q @ x + u @ cost.R @ u)


def residual_decomposition(basis, model, cost, W_star, W_c, W_a, thetahat, x, eps_grad=None):
    """Bellman error written through the estimation errors.

    Returns ``-omega' Wc_tilde - W*' sigma' Y theta_tilde + 1/4 Wa_tilde' G_sigma Wa_tilde``
    plus, when ``eps_grad`` is given, ``1/4 G_eps - eps' f + 1/2 W*' sigma' G eps'``.
    Uses the true parameters, so it is a diagnostic only. It equals
    ``bellman_error_hat - hamiltonian_residual`` identically.
    """
    x = check_vector(x, basis.n)
    W_star = check_vector(W_star, basis.L, "W_star")
    Wc_tilde = W_star - check_vector(W_c, basis.L, "W_c")
    Wa_tilde = W_star - check_vector(W_a, basis.L, "W_a")
    theta_tilde = model.theta_star - check_vector(thetahat, model.p, "thetahat")
    sg = basis.sigma_grad(x)
    Y = model.Y(x)
    w = omega(basis, model, cost, thetahat, W_a, x)
    Gs = g_sigma(basis, model, cost, x)
    out = -w @ Wc_tilde - W_star @ sg @ Y @ theta_tilde + 0.25 * Wa_tilde @ Gs @ Wa_tilde
    if eps_grad is not None:
        e = check_vector(eps_grad(x), basis.n, "eps_grad")
        g = model.gx(x)
        G = g @ cost.R_inv @ g.T
        f = Y @ model.theta_star
        out += 0.25 * e @ G @ e - e @ f + 0.5 * W_star @ sg @ G @ e
    return float(out)


# ---------------------------------------------------------------------------
# sample-set quantities, vectorized over points


def _sample_terms(sample_set, nu, Gamma, thetahat, W_a, W_c):
    GW = sample_set.G_sigma @ W_a                                   # (N, L)
    omegas = sample_set.sigma_Y @ thetahat - 0.5 * GW
    rhos = 1.0 + nu * ((omegas @ Gamma) * omegas).sum(axis=1)
    deltas = None
    if W_c is not None:
        deltas = omegas @ W_c + sample_set.state_cost + 0.25 * (GW @ W_a)
    return omegas, rhos, deltas, GW


def sample_terms(sample_set, cost, nu, Gamma, thetahat, W_a, W_c=None):
    """Regressors, normalizations and Bellman errors at every sample point.

    Uses ``omega_i = sigma_i' Y_i thetahat - 1/2 G_sigma_i W_a`` and
    ``u_i' R u_i = 1/4 W_a' G_sigma_i W_a``, both exact for the policy in
    :func:`policy`. ``cost`` is already folded into the cached ``G_sigma``
    and ``state_cost``.

    Returns
    -------
    omegas : (N, L)
    rhos : (N,)
    deltas : (N,) or None
        Only computed when ``W_c`` is given.
    """
    omegas, rhos, deltas, _ = _sample_terms(sample_set, nu, Gamma, thetahat, W_a, W_c)
    return omegas, rhos, deltas


def _current_terms(basis, model, cost, nu, Gamma, thetahat, W_a, W_c, x):
    """Regressor, normalization, Bellman error and ``G_sigma W_a`` at ``x``.

    Also returns the policy ``u`` so callers can reuse it.
    """
    sg = basis.sigma_grad(x)
    D = sg @ model.gx(x)
    u = -0.5 * cost.R_inv @ (D.T @ W_a)
    GW = -2.0 * (D @ u)
    w = sg @ (model.Y(x) @ thetahat) - 0.5 * GW
    rho = 1.0 + nu * float(w @ Gamma @ w)
    delta = float(w @ W_c + x @ cost.Q @ x + 0.25 * (W_a @ GW))
    return w, rho, delta, GW, u


def gamma_indicator(Gamma, Gamma_bar, raw_rate):
    """Saturation switch for the gain-matrix dynamics.

    Inside the ball ``|Gamma| < Gamma_bar`` the switch is on. On its boundary
    it stays on only if ``raw_rate`` does not increase the spectral norm; past
    the boundary it is off.
    """
    if Gamma.shape[0] == 1:
        norm = abs(float(Gamma[0, 0]))
        if norm < Gamma_bar * (1.0 - BOUNDARY_RTOL):
            return 1.0
        if norm > Gamma_bar * (1.0 + BOUNDARY_RTOL):
            return 0.0
        return 0.0 if float(raw_rate[0, 0]) * np.sign(Gamma[0, 0]) > 0 else 1.0
    # the Frobenius norm bounds the spectral norm from above
    if np.sqrt((Gamma * Gamma).sum()) < Gamma_bar * (1.0 - BOUNDARY_RTOL):
        return 1.0
    lam, vec = np.linalg.eigh(0.5 * (Gamma + Gamma.T))
    norm = float(np.abs(lam).max())
    if norm < Gamma_bar * (1.0 - BOUNDARY_RTOL):
        return 1.0
    if norm > Gamma_bar * (1.0 + BOUNDARY_RTOL):
        return 0.0
    top = vec[:, np.abs(lam) >= norm * (1.0 - BOUNDARY_RTOL)]
    growth = np.einsum("ik,ij,jk->k", top, raw_rate, top).max()
    return 0.0 if growth > 0 else 1.0


def _learning_rates(gains, Gamma, W_c, W_a, current, samples):
    """Critic, actor and gain-matrix rates from precomputed terms."""
    w, rho, delta, GW = current
    omegas, rhos, deltas, GWs = samples
    N = omegas.shape[0]
    c2 = gains.eta_c2 / N
    reg = (gains.eta_c1 * delta / rho) * w + c2 * ((deltas / rhos) @ omegas)
    Wc_dot = -(Gamma @ reg)
    Gw = Gamma @ w
    raw = gains.beta * Gamma - (gains.eta_c1 / rho) * np.outer(Gw, Gw)
    Gamma_dot = raw * gamma_indicator(Gamma, gains.Gamma_bar, raw)
    # (G' W_a omega') W_c == G' W_a (omega' W_c); each G_sigma is symmetric
    corr = (gains.eta_c1 * float(w @ W_c) / (4.0 * rho)) * GW
    corr = corr + (0.25 * c2) * (((omegas @ W_c) / rhos) @ GWs)
    Wa_dot = -gains.eta_a1 * (W_a - W_c) - gains.eta_a2 * W_a + corr
    return Wc_dot, Wa_dot, Gamma_dot


def _rates_at(gains, sample_set, basis, model, cost, thetahat, W_c, W_a, Gamma, x):
    if sample_set is None or sample_set.N == 0:
        raise EmptySampleSetError("critic and actor updates need at least one sample point")
    x = check_vector(x, basis.n)
    thetahat = check_vector(thetahat, model.p, "thetahat")
    Gamma = check_matrix(Gamma, (basis.L, basis.L), "Gamma")
    W_a = check_vector(W_a, basis.L, "W_a")
    W_c = check_vector(W_c, basis.L, "W_c")
    cur = _current_terms(basis, model, cost, gains.nu, Gamma, thetahat, W_a, W_c, x)[:4]
    samples = _sample_terms(sample_set, gains.nu, Gamma, thetahat, W_a, W_c)
    return _learning_rates(gains, Gamma, W_c, W_a, cur, samples)


def critic_derivative(gains, state, sample_set, basis, model, cost, thetahat, x):
    """Critic weight and gain-matrix rates.

    ``Wc_dot = -eta_c1 Gamma omega delta / rho - eta_c2/N Gamma sum_i omega_i delta_i / rho_i``
    and ``Gamma_dot = (beta Gamma - eta_c1 Gamma omega omega' Gamma / rho) * indicator``.

    Raises
    ------
    EmptySampleSetError
    """
    Wc_dot, _, Gamma_dot = _rates_at(gains, sample_set, basis, model, cost, thetahat,
                                     state.W_c, state.W_a, state.Gamma, x)
    return Wc_dot, Gamma_dot


def actor_derivative(gains, state, sample_set, basis, model, cost, thetahat, x):
    """Actor weight rate: follow the critic, leak toward zero, plus the cross
    terms that cancel the actor error in the Lyapunov analysis."""
    _, Wa_dot, _ = _rates_at(gains, sample_set, basis, model, cost, thetahat,
                             state.W_c, state.W_a, state.Gamma, x)
    return Wa_dot


def gram_certificate(omegas, rhos, threshold=DEFAULT_C_THRESHOLD):
    """``(1/N) lambda_min(sum_i omega_i omega_i' / rho_i)`` and whether it clears ``threshold``."""
    omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
    rhos = np.asarray(rhos, dtype=float).reshape(-1)
    N = omegas.shape[0]
    M = (omegas / rhos[:, None]).T @ omegas
    c = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0]) / N
    return c, c > threshold


def sample_rank_certificate(sample_set, gains, Gamma, basis, model, cost, thetahat, W_a,
                            threshold=DEFAULT_C_THRESHOLD):
    """Sample-set excitation certificate at the current estimates.

    Returns ``(c, passed)``.
    """
    thetahat = check_vector(thetahat, model.p, "thetahat")
    W_a = check_vector(W_a, basis.L, "W_a")
    Gamma = check_matrix(Gamma, (basis.L, basis.L), "Gamma")
    omegas, rhos, _ = sample_terms(sample_set, cost, gains.nu, Gamma, thetahat, W_a)
    return gram_certificate(omegas, rhos, threshold)


def regressor_bound(nu, Gamma_under):
    """Upper bound ``1 / (2 sqrt(nu Gamma_under))`` on ``|omega / rho|``."""
    return 1.0 / (2.0 * np.sqrt(nu * Gamma_under))


def project_gamma(Gamma, Gamma_bar):
    """Symmetrize and rescale onto the ball ``|Gamma| <= Gamma_bar``."""
    Gamma = 0.5 * (Gamma + Gamma.T)
    norm = float(np.abs(np.linalg.eigvalsh(Gamma)).max())
    if norm > Gamma_bar:
        Gamma = Gamma * (Gamma_bar / norm)
    return Gamma
