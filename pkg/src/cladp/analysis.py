"""Numeric checks of the sufficient gain conditions and of the identifier's
exponential decay.

Suprema over the compact ball ``|x| <= Z_bar`` are replaced by maxima over a
deterministic nested grid, inflated by ``SAFETY``. Norms are Euclidean for
vectors and spectral for matrices.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import ContractError
from .basis import g_sigma

SAFETY = 1.1
DECAY_RTOL = 1e-6
DEFAULT_RESOLUTION = 5


def ball_grid(n, Z_bar, resolution=DEFAULT_RESOLUTION):
    """Points of the ball of radius ``Z_bar`` on a dyadic grid.

    The tensor grid has ``2**resolution + 1`` points per axis; grid points
    outside the ball are dropped and every nonzero grid direction is also
    projected onto the sphere. Raising ``resolution`` by one keeps every
    previous point, so grid maxima are nondecreasing under refinement.
    """
    if Z_bar <= 0:
        raise ContractError("Z_bar must be positive")
    k = 2 ** int(resolution) + 1
    axis = np.linspace(-Z_bar, Z_bar, k)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    norms = np.linalg.norm(pts, axis=1)
    inside = pts[norms <= Z_bar * (1 + 1e-12)]
    nz = norms > 0
    sphere = pts[nz] * (Z_bar / norms[nz])[:, None]
    return np.concatenate([inside, sphere])


def estimate_lipschitz(model, Z_bar, resolution=DEFAULT_RESOLUTION):
    """Grid estimates of ``L_f`` and ``L_Y`` with ``|f(x)| <= L_f |x|``,
    ``|Y(x)| <= L_Y |x|`` on the ball, inflated by 10%."""
    L_f = L_Y = 0.0
    for x in ball_grid(model.n, Z_bar, resolution):
        nx = np.linalg.norm(x)
        if nx == 0:
            continue
        Y = model.Y(x)
        L_f = max(L_f, np.linalg.norm(Y @ model.theta_star) / nx)
        L_Y = max(L_Y, np.linalg.norm(Y, 2) / nx)
    return SAFETY * L_f, SAFETY * L_Y


@dataclass
class Suprema:
    """Grid suprema over the ball and per-sample-point norms."""

    sigma_grad: float
    G_sigma: float
    G: float
    sigma_Y_i: np.ndarray
    G_sigma_i: np.ndarray
    sigma_grad_i: np.ndarray
    G_i: np.ndarray
    f_i: np.ndarray


def estimate_suprema(basis, model, cost, Z_bar, sample_set, resolution=DEFAULT_RESOLUTION):
    s_sg = s_Gs = s_G = 0.0
    for x in ball_grid(model.n, Z_bar, resolution):
        sg = basis.sigma_grad(x)
        g = model.gx(x)
        G = g @ cost.R_inv @ g.T
        s_sg = max(s_sg, np.linalg.norm(sg, 2))
        s_G = max(s_G, np.linalg.norm(G, 2))
        s_Gs = max(s_Gs, np.linalg.norm(sg @ G @ sg.T, 2))
    ss = sample_set
    G_i = ss.g @ cost.R_inv @ np.swapaxes(ss.g, 1, 2)
    f_i = np.einsum("inp,p->in", ss.Y, model.theta_star)
    return Suprema(
        sigma_grad=SAFETY * s_sg,
        G_sigma=SAFETY * s_Gs,
        G=SAFETY * s_G,
        sigma_Y_i=np.linalg.norm(ss.sigma_grad @ ss.Y, 2, axis=(1, 2)),
        G_sigma_i=np.linalg.norm(ss.G_sigma, 2, axis=(1, 2)),
        sigma_grad_i=np.linalg.norm(ss.sigma_grad, 2, axis=(1, 2)),
        G_i=np.linalg.norm(G_i, 2, axis=(1, 2)),
        f_i=np.linalg.norm(f_i, axis=1),
    )


@dataclass
class GainInputs:
    """Bounds and gains entering the sufficient conditions.

    ``W_bar`` bounds the ideal weights, ``eps_bar`` / ``eps_prime_bar`` bound the
    reconstruction error and its gradient, ``L_f`` / ``L_Y`` are the linear
    growth constants of ``f`` and ``Y`` on the ball of radius ``Z_bar``, and
    ``zeta1`` / ``zeta2`` are the free Young's-inequality weights.
    """

    W_bar: float
    eps_bar: float
    eps_prime_bar: float
    L_f: float
    L_Y: float
    Z_bar: float
    adp_gains: object
    id_gains: object
    zeta1: float = 1.0
    zeta2: float = 1.0
    y_under: float = None
    c_under: float = None

    def __post_init__(self):
        for name in ("W_bar", "eps_bar", "eps_prime_bar", "L_f", "L_Y"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be nonnegative")
        for name in ("zeta1", "zeta2", "Z_bar"):
            if getattr(self, name) <= 0:
                raise ContractError(f"{name} must be positive")


def compute_varthetas(inputs, sups):
    """The seven constants of the stability analysis.

    Terms involving the reconstruction error are bounded one factor at a
    time (triangle and submultiplicative inequalities) and vanish when
    ``eps_bar = eps_prime_bar = 0``.
    """
    a = inputs.adp_gains
    N = sups.G_sigma_i.size
    root = np.sqrt(a.nu * a.Gamma_under)
    reg = 1.0 / (2.0 * root)  # bound on |omega / rho|
    W, ep = inputs.W_bar, inputs.eps_prime_bar

    t1 = a.eta_c1 * inputs.L_f * ep / (4.0 * root)
    t2 = float(np.sum(a.eta_c2 * sups.sigma_Y_i * W / (4.0 * N * root)))
    t3 = inputs.L_Y * a.eta_c1 * W * sups.sigma_grad / (4.0 * root)
    t4 = 0.25 * sups.G * ep ** 2
    delta_i = (0.5 * W * sups.sigma_grad_i * sups.G_i * ep + 0.25 * sups.G_i * ep ** 2
               + ep * sups.f_i)
    t5 = (a.eta_c1 * reg * (2.0 * W * sups.sigma_grad * sups.G * ep + sups.G * ep ** 2) / 4.0
          + float(np.sum(a.eta_c2 * reg * delta_i / N)))
    t7 = a.eta_c1 * sups.G_sigma / (8.0 * root) + float(
        np.sum(a.eta_c2 * sups.G_sigma_i / (8.0 * N * root)))
    t6 = (0.5 * W * sups.G_sigma + 0.5 * ep * sups.G * sups.sigma_grad
          + t7 * W ** 2 + a.eta_a2 * W)
    return np.array([t1, t2, t3, t4, t5, t6, t7])


MARGIN_NAMES = ("eta_a2", "k_theta", "q_under", "eta_c2")


@dataclass
class GainReport:
    vartheta: np.ndarray
    condition_margins: np.ndarray
    passed: bool
    flags: list = field(default_factory=list)

    def to_dict(self):
        def num(v):
            return float(v) if np.isfinite(v) else None

        return {
            "vartheta": [float(v) for v in self.vartheta],
            "margins": {k: num(v) for k, v in zip(MARGIN_NAMES, self.condition_margins)},
            "pass": bool(self.passed),
            "flags": list(self.flags),
        }


def check_gain_conditions(inputs, vartheta, q_under, y_under, c_under):
    """Evaluate the four sufficient gain inequalities.

    Margins are left side minus right side, in the order
    ``(eta_a2, k_theta, q_under, eta_c2)``; the report passes only when all
    four are strictly positive. A missing (nonpositive) ``y_under`` or
    ``c_under`` makes the corresponding margin ``-inf`` and adds a flag.
    """
    a, idg = inputs.adp_gains, inputs.id_gains
    t1, t2, t3, _, _, _, t7 = np.asarray(vartheta, dtype=float)
    z1, z2, W, Z = inputs.zeta1, inputs.zeta2, inputs.W_bar, inputs.Z_bar
    flags = []

    m_a2 = a.eta_a2 - (-a.eta_a1 / 2.0 + t7 * W * (2.0 * z2 + 1.0) / (2.0 * z2))
    if y_under is None or not y_under > 0:
        flags.append("history stack rank certificate missing (y_under <= 0)")
        m_kt = -np.inf
    else:
        m_kt = idg.k_theta - (t2 + z1 * t3 * Z) / (y_under * z1)
    m_q = q_under - t1
    if c_under is None or not c_under > 0:
        flags.append("sample-set rank certificate missing (c_under <= 0)")
        m_c2 = -np.inf
    else:
        m_c2 = a.eta_c2 - (z2 * t7 * W + a.eta_a1 + 2.0 * (t1 + z1 * t2 + t3 * Z)) / (2.0 * c_under)

    margins = np.array([m_a2, m_kt, m_q, m_c2])
    return GainReport(vartheta=np.asarray(vartheta, dtype=float), condition_margins=margins,
                      passed=bool(np.all(margins > 0)), flags=flags)


def gain_report_for(inputs, problem, y_under=None, c_under=None, resolution=DEFAULT_RESOLUTION):
    """Full pipeline: suprema, varthetas and the condition check.

    Certificates passed here override the ones stored in ``inputs``.
    """
    sups = estimate_suprema(problem.basis, problem.model, problem.cost, inputs.Z_bar,
                            problem.sample_set, resolution)
    vt = compute_varthetas(inputs, sups)
    y = inputs.y_under if y_under is None else y_under
    c = inputs.c_under if c_under is None else c_under
    return check_gain_conditions(inputs, vt, problem.cost.q_under, y, c)


def decay_rate(id_gains, y_under):
    """``v / v_bar`` with ``v = min(k_x_under, y_under k_theta)`` and
    ``v_bar = max(1, lambda_max(Gamma_theta^-1)) / 2``."""
    v = min(id_gains.k_x_under, y_under * id_gains.k_theta)
    gam_bar = float(np.linalg.eigvalsh(np.linalg.inv(id_gains.Gamma_theta)).max())
    v_bar = 0.5 * max(1.0, gam_bar)
    return v / v_bar


@dataclass
class DecayCertificate:
    passed: bool
    rate: float
    anchor_time: float
    worst_ratio: float


def identifier_decay_certificate(log, id_gains, y_under=None, rank_threshold=1e-6,
                                 rtol=DECAY_RTOL):
    """Check ``V0(t) <= V0(t_r) exp(-rate (t - t_r)) (1 + rtol)`` along a log.

    ``t_r`` is the first logged time at which the history stack passes its
    rank certificate; the bound is only claimed from then on. ``y_under``
    defaults to the stack's value at ``t_r`` (it never decreases afterwards).
    A log whose stack never passes fails.
    """
    t = np.asarray(log["t"], dtype=float)
    V0 = np.asarray(log["V0"], dtype=float)
    ys = np.asarray(log["y_under"], dtype=float)
    idx = np.flatnonzero(ys > rank_threshold)
    if idx.size == 0:
        return DecayCertificate(False, np.nan, np.nan, np.inf)
    r = idx[0]
    y = ys[r] if y_under is None else y_under
    rate = decay_rate(id_gains, y)
    bound = V0[r] * np.exp(-rate * (t[r:] - t[r])) * (1.0 + rtol)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, V0[r:] / bound, np.where(V0[r:] > 0, np.inf, 0.0))
    worst = float(ratio.max())
    return DecayCertificate(bool(np.all(V0[r:] <= bound)), rate, float(t[r]), worst)
