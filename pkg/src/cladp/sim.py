"""Fixed-step simulation of the closed loop: plant, observer, parameter
estimate, critic, actor and least-squares gain matrix.

The continuous-time state is stacked into one flat vector
``[x, xhat, thetahat, W_c, W_a, vec(Gamma)]`` and advanced with classical RK4.
The history stack lives outside the ODE and is updated at recording events.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import adp
from ._validation import ContractError, check_vector
from .identifier import (
    DEFAULT_RANK_THRESHOLD,
    HistoryStack,
    StackEntry,
    lyapunov_v0,
    rank_certificate,
    stack_insert,
)


class SimulationError(RuntimeError):
    """Integration produced a non-finite state; ``log`` holds the samples so far."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log


@dataclass
class SimConfig:
    """Integration horizon, initial conditions and event schedule.

    ``xhat0`` defaults to ``x0``. ``Gamma0`` may be a scalar (times identity)
    or a full matrix. ``stack_capacity`` defaults to ``2 p``.
    """

    x0: np.ndarray
    thetahat0: np.ndarray
    Wc0: np.ndarray = None
    Wa0: np.ndarray = None
    Gamma0: object = 1.0
    xhat0: np.ndarray = None
    dt: float = 0.005
    t_final: float = 20.0
    record_interval: int = 10
    rank_check_interval: int = 10
    log_interval: int = 10
    seed: int = 0
    exact_derivatives: bool = False
    freeze_stack_after_rank: bool = False
    identifier_only: bool = False
    stack_capacity: int = None
    rank_threshold: float = DEFAULT_RANK_THRESHOLD
    c_threshold: float = adp.DEFAULT_C_THRESHOLD

    def __post_init__(self):
        if not (self.dt > 0):
            raise ContractError("dt must be positive")
        if self.t_final < 0:
            raise ContractError("t_final must be nonnegative")
        for name in ("record_interval", "rank_check_interval", "log_interval"):
            if int(getattr(self, name)) < 1:
                raise ContractError(f"{name} must be >= 1")

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))


@dataclass
class Layout:
    """Slices of the flat augmented state."""

    n: int
    p: int
    L: int

    def __post_init__(self):
        n, p, L = self.n, self.p, self.L
        self.x = slice(0, n)
        self.xhat = slice(n, 2 * n)
        self.theta = slice(2 * n, 2 * n + p)
        self.Wc = slice(2 * n + p, 2 * n + p + L)
        self.Wa = slice(2 * n + p + L, 2 * n + p + 2 * L)
        self.Gamma = slice(2 * n + p + 2 * L, 2 * n + p + 2 * L + L * L)
        self.size = 2 * n + p + 2 * L + L * L

    def pack(self, x, xhat, thetahat, W_c, W_a, Gamma):
        return np.concatenate([x, xhat, thetahat, W_c, W_a, np.asarray(Gamma).ravel()])

    def unpack(self, z):
        return (z[self.x], z[self.xhat], z[self.theta], z[self.Wc], z[self.Wa],
                z[self.Gamma].reshape(self.L, self.L))


@dataclass
class Problem:
    """Everything the closed loop needs besides the simulation settings."""

    model: object
    cost: object
    basis: object
    id_gains: object
    adp_gains: object
    sample_set: object = None


def applied_input(problem, W_a, x, identifier_only=False):
    if identifier_only:
        return np.zeros(problem.model.m)
    D = problem.basis.sigma_grad(x) @ problem.model.gx(x)
    return -0.5 * problem.cost.R_inv @ (D.T @ W_a)


def augmented_derivative(z, problem, stack, layout, identifier_only=False):
    """Time derivative of the flat augmented state.

    With an empty stack only the observer-error term drives ``thetahat``.
    In identifier-only mode the input is zero and the critic, actor and
    gain matrix are frozen.
    """
    model, cost, basis = problem.model, problem.cost, problem.basis
    idg, gains = problem.id_gains, problem.adp_gains
    x, xhat, thetahat, W_c, W_a, Gamma = layout.unpack(z)

    Y = model.Y(x)
    out = np.empty_like(z)

    if identifier_only:
        gu = 0.0
    else:
        w, rho, delta, GW, u = adp._current_terms(basis, model, cost, gains.nu, Gamma,
                                                  thetahat, W_a, W_c, x)
        gu = model.gx(x) @ u

    out[layout.x] = Y @ model.theta_star + gu
    xtilde = x - xhat
    out[layout.xhat] = Y @ thetahat + gu + idg.k_x @ xtilde
    theta_rate = Y.T @ xtilde
    if len(stack):
        theta_rate = theta_rate + idg.k_theta * (stack.target - stack.gram @ thetahat)
    out[layout.theta] = idg.Gamma_theta @ theta_rate

    if identifier_only:
        out[layout.Wc.start:] = 0.0
        return out

    samples = adp._sample_terms(problem.sample_set, gains.nu, Gamma, thetahat, W_a, W_c)
    Wc_dot, Wa_dot, Gamma_dot = adp._learning_rates(gains, Gamma, W_c, W_a,
                                                    (w, rho, delta, GW), samples)
    out[layout.Wc] = Wc_dot
    out[layout.Wa] = Wa_dot
    out[layout.Gamma] = Gamma_dot.ravel()
    return out


def rk4_step(z, dt, f):
    """One classical Runge-Kutta step of ``zdot = f(z)``."""
    k1 = f(z)
    k2 = f(z + 0.5 * dt * k1)
    k3 = f(z + 0.5 * dt * k2)
    k4 = f(z + dt * k3)
    return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


LOG_SCALARS = ("gamma_min", "gamma_norm", "delta_hat", "delta_max", "reg_bound_ratio",
               "y_under", "c_value", "V0", "Wc_error", "Wa_error", "theta_error")


@dataclass
class TrajectoryLog:
    """Samples of the closed loop on a uniform time grid.

    Vector quantities are stored as 2-D arrays with one row per sample.
    ``reg_bound_ratio`` is ``max |omega / rho| * 2 sqrt(nu lambda_min(Gamma))``
    over the current state and the sample points; it never exceeds one.
    Weight errors are NaN when no ideal weights were supplied.
    """

    n: int
    p: int
    L: int
    columns: dict = field(default_factory=dict)

    def __post_init__(self):
        self._rows = []

    def append(self, row):
        self._rows.append(row)
        self.columns = {}

    def __len__(self):
        return len(self._rows)

    def _build(self):
        if not self.columns and self._rows:
            keys = self._rows[0].keys()
            self.columns = {k: np.array([r[k] for r in self._rows]) for k in keys}
        return self.columns

    def __getitem__(self, key):
        return self._build()[key]

    def header(self):
        names = ["t"]
        names += [f"x{i}" for i in range(self.n)]
        names += [f"xhat{i}" for i in range(self.n)]
        names += [f"thetahat{i}" for i in range(self.p)]
        names += [f"Wc{i}" for i in range(self.L)]
        names += [f"Wa{i}" for i in range(self.L)]
        names += list(LOG_SCALARS)
        return names

    def rows(self):
        for r in self._rows:
            yield [r["t"], *r["x"], *r["xhat"], *r["thetahat"], *r["Wc"], *r["Wa"],
                   *(r[k] for k in LOG_SCALARS)]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header())
            for row in self.rows():
                writer.writerow([format(float(v), ".17g") for v in row])


@dataclass
class RunSummary:
    final_state_norm: float
    final_Wc_error: float
    final_Wa_error: float
    final_theta_error: float
    min_y_under: float
    min_c_value: float
    gamma_bound_violations: int
    reg_bound_violations: int = 0
    rank_pass_time: float = None
    sample_pass_time: float = None
    gain_report: object = None

    def to_dict(self):
        def num(v):
            return None if v is None or not np.isfinite(v) else float(v)

        return {
            "final_state_norm": num(self.final_state_norm),
            "final_Wc_error": num(self.final_Wc_error),
            "final_Wa_error": num(self.final_Wa_error),
            "final_theta_error": num(self.final_theta_error),
            "min_y_under": num(self.min_y_under),
            "min_c_value": num(self.min_c_value),
            "gamma_bound_violations": int(self.gamma_bound_violations),
            "gain_report": None if self.gain_report is None else self.gain_report.to_dict(),
        }


def _initial_state(config, problem, layout):
    model, basis = problem.model, problem.basis
    x0 = check_vector(config.x0, model.n, "x0")
    xhat0 = x0.copy() if config.xhat0 is None else check_vector(config.xhat0, model.n, "xhat0")
    th0 = check_vector(config.thetahat0, model.p, "thetahat0")
    Wc0 = (np.full(basis.L, 0.5) if config.Wc0 is None
           else check_vector(config.Wc0, basis.L, "Wc0"))
    Wa0 = (np.full(basis.L, 0.5) if config.Wa0 is None
           else check_vector(config.Wa0, basis.L, "Wa0"))
    G0 = np.asarray(config.Gamma0, dtype=float)
    G0 = G0 * np.eye(basis.L) if G0.ndim == 0 else G0.reshape(basis.L, basis.L)
    if not config.identifier_only:
        norm = float(np.abs(np.linalg.eigvalsh(0.5 * (G0 + G0.T))).max())
        if norm > problem.adp_gains.Gamma_bar * (1 + 1e-12):
            raise ContractError("initial Gamma exceeds Gamma_bar")
        if np.linalg.eigvalsh(0.5 * (G0 + G0.T)).min() <= 0:
            raise ContractError("initial Gamma must be positive definite")
    return layout.pack(x0, xhat0, th0, Wc0, Wa0, G0)


def run_experiment(config, problem, W_star=None, gain_inputs=None, gain_report=None):
    """Integrate the closed loop from ``t = 0`` to ``config.t_final``.

    Parameters
    ----------
    config : SimConfig
    problem : Problem
    W_star : array, optional
        Ideal weights (for example from an ``LqrOracle``); enables the weight
        error columns.
    gain_inputs : analysis.GainInputs, optional
        When given, a gain report is evaluated after the run with the
        certificates observed along it and attached to the summary.
    gain_report : analysis.GainReport, optional
        A report computed beforehand; a failing one only triggers a warning.

    Returns
    -------
    log : TrajectoryLog
    summary : RunSummary

    Raises
    ------
    SimulationError
        On a non-finite state; ``err.log`` carries the partial log.
    """
    model, cost, basis = problem.model, problem.cost, problem.basis
    gains = problem.adp_gains
    ident_only = config.identifier_only
    if not ident_only and (problem.sample_set is None or problem.sample_set.N == 0):
        raise adp.EmptySampleSetError("closed-loop learning needs a sample set")
    if gain_report is not None and not gain_report.passed:
        warnings.warn("gain conditions are not satisfied; running anyway", RuntimeWarning)

    layout = Layout(model.n, model.p, basis.L)
    z = _initial_state(config, problem, layout)
    dt = config.dt
    capacity = config.stack_capacity or 2 * model.p
    stack = HistoryStack.empty(capacity, model.p)
    Gamma_theta_inv = np.linalg.inv(problem.id_gains.Gamma_theta)
    W_star = None if W_star is None else check_vector(W_star, basis.L, "W_star")

    log = TrajectoryLog(model.n, model.p, basis.L)
    state = {"c_value": np.nan, "c_min": np.inf, "c_time": None, "rank_time": None,
             "gamma_viol": 0, "reg_viol": 0, "y_min": np.inf}

    def certificate(k, z):
        _, _, thetahat, _, W_a, Gamma = layout.unpack(z)
        c, passed = adp.sample_rank_certificate(problem.sample_set, gains, Gamma, basis, model,
                                           cost, thetahat, W_a, config.c_threshold)
        state["c_value"] = c
        # like y_under, the minimum is taken from the first passing check on
        if passed and state["c_time"] is None:
            state["c_time"] = k * dt
        if state["c_time"] is not None:
            state["c_min"] = min(state["c_min"], c)

    def record(k, z):
        x, xhat, thetahat, W_c, W_a, Gamma = layout.unpack(z)
        xtilde = x - xhat
        theta_tilde = model.theta_star - thetahat
        row = {"t": k * dt, "x": x.copy(), "xhat": xhat.copy(), "thetahat": thetahat.copy(),
               "Wc": W_c.copy(), "Wa": W_a.copy(), "y_under": stack.y_under,
               "V0": lyapunov_v0(xtilde, theta_tilde, problem.id_gains.Gamma_theta),
               "theta_error": float(np.linalg.norm(theta_tilde)),
               "Wc_error": np.nan if W_star is None else float(np.linalg.norm(W_star - W_c)),
               "Wa_error": np.nan if W_star is None else float(np.linalg.norm(W_star - W_a)),
               "c_value": state["c_value"]}
        if ident_only:
            row.update(gamma_min=np.nan, gamma_norm=np.nan, delta_hat=np.nan,
                       delta_max=np.nan, reg_bound_ratio=np.nan)
        else:
            lam = np.linalg.eigvalsh(0.5 * (Gamma + Gamma.T))
            gmin, gnorm = float(lam[0]), float(np.abs(lam).max())
            w, rho, delta, _, _ = adp._current_terms(basis, model, cost, gains.nu, Gamma,
                                                     thetahat, W_a, W_c, x)
            omegas, rhos, deltas = adp.sample_terms(problem.sample_set, cost, gains.nu,
                                                    Gamma, thetahat, W_a, W_c)
            ratio = max(np.linalg.norm(w) / rho,
                        float((np.linalg.norm(omegas, axis=1) / rhos).max()))
            ratio *= 2.0 * np.sqrt(gains.nu * gmin)
            row.update(gamma_min=gmin, gamma_norm=gnorm, delta_hat=delta,
                       delta_max=float(np.abs(deltas).max()), reg_bound_ratio=ratio)
            if gmin < gains.Gamma_under or gnorm > gains.Gamma_bar * (1 + 1e-9):
                state["gamma_viol"] += 1
            if ratio > 1.0 + 1e-9:
                state["reg_viol"] += 1
        if state["rank_time"] is not None:
            state["y_min"] = min(state["y_min"], stack.y_under)
        log.append(row)

    def deriv(zz):
        return augmented_derivative(zz, problem, stack, layout, ident_only)

    def current_input(zz):
        return applied_input(problem, zz[layout.Wa], zz[layout.x], ident_only)

    pending = None  # (x_k, u_k, x_{k-1}) awaiting x_{k+1} for a central difference
    prev_x = None

    def offer(entry):
        nonlocal stack
        if config.freeze_stack_after_rank and state["rank_time"] is not None:
            return
        stack, _ = stack_insert(stack, entry)

    def after_stack_change(k):
        passed, _ = rank_certificate(stack, config.rank_threshold)
        if passed and state["rank_time"] is None:
            state["rank_time"] = k * dt

    n_steps = config.n_steps
    for k in range(n_steps + 1):
        x_k = z[layout.x].copy()
        # complete a delayed central-difference candidate
        if pending is not None:
            xj, uj, x_before = pending
            xdot = (x_k - x_before) / (2.0 * dt)
            offer(StackEntry.record(model, xj, uj, xdot))
            pending = None
            after_stack_change(k - 1)
        if k % config.record_interval == 0:
            u_k = current_input(z)
            if config.exact_derivatives:
                xdot = model.Y(x_k) @ model.theta_star + model.gx(x_k) @ u_k
                offer(StackEntry.record(model, x_k, u_k, xdot))
                after_stack_change(k)
            elif prev_x is not None and k < n_steps:
                pending = (x_k, u_k, prev_x)
        if not ident_only and k % config.rank_check_interval == 0:
            certificate(k, z)
        if k % config.log_interval == 0 or k == n_steps:
            record(k, z)
        if k == n_steps:
            break
        prev_x = x_k
        z_new = rk4_step(z, dt, deriv)
        if not ident_only:
            G = adp.project_gamma(z_new[layout.Gamma].reshape(basis.L, basis.L), gains.Gamma_bar)
            z_new[layout.Gamma] = G.ravel()
        if not np.all(np.isfinite(z_new)):
            raise SimulationError(f"non-finite state at t = {(k + 1) * dt:.6g}", log)
        z = z_new

    final = log._rows[-1]
    summary = RunSummary(
        final_state_norm=float(np.linalg.norm(final["x"])),
        final_Wc_error=final["Wc_error"],
        final_Wa_error=final["Wa_error"],
        final_theta_error=final["theta_error"],
        min_y_under=state["y_min"] if state["rank_time"] is not None else 0.0,
        min_c_value=state["c_min"] if state["c_time"] is not None else 0.0,
        gamma_bound_violations=state["gamma_viol"],
        reg_bound_violations=state["reg_viol"],
        rank_pass_time=state["rank_time"],
        sample_pass_time=state["c_time"],
    )
    if gain_inputs is not None:
        from .analysis import gain_report_for
        summary.gain_report = gain_report_for(gain_inputs, problem,
                                              y_under=summary.min_y_under,
                                              c_under=summary.min_c_value)
    summary.stack = stack
    summary.final_state = layout.unpack(z)
    return log, summary
