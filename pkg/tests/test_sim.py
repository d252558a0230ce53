import csv

import numpy as np
import pytest

from cladp.adp import (AdpGains, CriticActorState, actor_derivative, critic_derivative,
                       policy)
from cladp.basis import make_polynomial_basis
from cladp.config import parse_config, shipped_config
from cladp.identifier import (HistoryStack, IdentifierGains, IdentifierState, StackEntry,
                              observer_derivative, stack_insert, theta_update_derivative)
from cladp.plant import CostSpec, PlantModel, dynamics
from cladp.sim import (LOG_SCALARS, Layout, Problem, SimConfig, SimulationError,
                       TrajectoryLog, augmented_derivative, rk4_step, run_experiment)

from conftest import P_SCALAR, sample_set_at


def scalar_problem(scalar, eta_a2=0.001, points=(-1.0, -0.5, 0.0, 0.5, 1.0)):
    m, c, b = scalar
    gains = AdpGains(eta_c1=1.0, eta_c2=1.0, eta_a1=10.0, eta_a2=eta_a2, nu=1.0, beta=1.0,
                     Gamma_bar=10.0, Gamma_under=1.0)
    idg = IdentifierGains(k_x=5.0, Gamma_theta=1.0, k_theta=1.0)
    return Problem(m, c, b, idg, gains, sample_set_at(points, m, c, b))


def test_derivative_dimension():
    model = PlantModel(n=2, m=1, p=2, regressor=lambda x: np.diag(x),
                       theta_star=np.array([-1.0, -2.0]), g=lambda x: np.array([[0.0], [1.0]]))
    cost = CostSpec(np.eye(2), 1.0)
    basis = make_polynomial_basis(2, [2])
    gains = AdpGains(1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 10.0, 1.0)
    idg = IdentifierGains(k_x=[1.0, 1.0], Gamma_theta=np.eye(2), k_theta=1.0)
    problem = Problem(model, cost, basis, idg, gains, sample_set_at([[0.5, 0.5]], model, cost,
                                                                    basis))
    layout = Layout(2, 2, 3)
    assert layout.size == 21
    z = layout.pack([1.0, 0.0], [0.5, 0.0], [0.0, 0.0], np.ones(3), np.ones(3), np.eye(3))
    dz = augmented_derivative(z, problem, HistoryStack.empty(4, 2), layout)
    assert dz.shape == (21,)


def test_fixed_point(scalar):
    # the actor correction term vanishes only where G_sigma W_a = 0, hence the
    # sample point at the origin
    problem = scalar_problem(scalar, eta_a2=0.0, points=(0.0,))
    m, c, b = scalar
    layout = Layout(1, 1, 1)
    stack = HistoryStack.empty(2, 1)
    for x in (1.0, -1.0):
        stack, _ = stack_insert(stack, StackEntry.record(m, [x], [0.0], dynamics(m, [x], [0.0])))
    z = layout.pack([0.0], [0.0], m.theta_star, [P_SCALAR], [P_SCALAR], np.eye(1))
    dz = augmented_derivative(z, problem, stack, layout)
    np.testing.assert_allclose(dz[:layout.Gamma.start], 0.0, atol=1e-15)
    np.testing.assert_allclose(dz[layout.Gamma], [1.0])  # forgetting growth only


def test_blocks_match_module_functions(scalar):
    problem = scalar_problem(scalar)
    m, c, b = scalar
    layout = Layout(1, 1, 1)
    stack = HistoryStack.empty(2, 1)
    for x in (1.0, -1.0):
        stack, _ = stack_insert(stack, StackEntry.record(m, [x], [0.0], dynamics(m, [x], [0.0])))
    x, xhat, th, Wc, Wa, G = [1.0], [0.5], [-2.0], [0.5], [0.3], [[2.0]]
    dz = augmented_derivative(layout.pack(x, xhat, th, Wc, Wa, G), problem, stack, layout)
    u = policy(b, m, c, Wa, x)
    ids = IdentifierState(np.array(xhat), np.array(th))
    state = CriticActorState(np.array(Wc), np.array(Wa), np.array(G))
    Wc_dot, G_dot = critic_derivative(problem.adp_gains, state, problem.sample_set, b, m, c, th, x)
    np.testing.assert_allclose(dz[layout.x], dynamics(m, x, u))
    np.testing.assert_allclose(dz[layout.xhat], observer_derivative(ids, problem.id_gains, m, x, u))
    np.testing.assert_allclose(dz[layout.theta], theta_update_derivative(
        ids, problem.id_gains, stack, m, x, np.array(x) - np.array(xhat)))
    np.testing.assert_allclose(dz[layout.Wc], Wc_dot)
    np.testing.assert_allclose(dz[layout.Gamma], G_dot.ravel())
    np.testing.assert_allclose(dz[layout.Wa], actor_derivative(
        problem.adp_gains, state, problem.sample_set, b, m, c, th, x))


def test_rk4_examples():
    y = np.array([2.5, -1.0])
    np.testing.assert_array_equal(rk4_step(y, 0.1, lambda z: np.zeros_like(z)), y)
    assert abs(rk4_step(np.ones(1), 0.1, lambda z: z)[0] - np.exp(0.1)) < 1e-7
    y = np.ones(1)
    for _ in range(100):
        y = rk4_step(y, 0.1, lambda z: -z)
    # global error of RK4 at h = 0.1 is about 100 h^5 / 120 relative, so the
    # tolerance is absolute here; the relative check runs at h = 0.01
    assert abs(y[0] - np.exp(-10.0)) <= 1e-6
    y = np.ones(1)
    for _ in range(1000):
        y = rk4_step(y, 0.01, lambda z: -z)
    assert abs(y[0] - np.exp(-10.0)) <= 1e-6 * np.exp(-10.0)


def test_zero_horizon_logs_initial_record(scalar):
    cfg = SimConfig(x0=[1.0], thetahat0=[-0.5], t_final=0.0)
    log, summary = run_experiment(cfg, scalar_problem(scalar))
    assert len(log) == 1 and log["t"][0] == 0.0
    assert summary.final_state_norm == 1.0


def test_config_contract():
    with pytest.raises(ValueError):
        SimConfig(x0=[1.0], thetahat0=[0.0], dt=0.0)
    with pytest.raises(ValueError):
        SimConfig(x0=[1.0], thetahat0=[0.0], log_interval=0)


def short_run(seed=0, **kw):
    cfg = parse_config(shipped_config("planar_lqr.cfg")).with_seed(seed)
    cfg.sim.t_final = kw.pop("t_final", 1.0)
    for k, v in kw.items():
        setattr(cfg.sim, k, v)
    orc = cfg.oracle()
    return run_experiment(cfg.sim, cfg.problem(), W_star=orc.W_star)


def test_csv_round_trip_and_columns(tmp_path):
    log, _ = short_run()
    path = tmp_path / "traj.csv"
    log.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    assert header[:3] == ["t", "x0", "x1"] and header[-len(LOG_SCALARS):] == list(LOG_SCALARS)
    data = np.array(rows[1:], dtype=float)
    assert data.shape == (len(log), len(header))
    np.testing.assert_array_equal(data[:, 0], log["t"])
    np.testing.assert_array_equal(data[:, header.index("Wc2")], log["Wc"][:, 2])
    np.testing.assert_array_equal(data[:, header.index("V0")], log["V0"])
    assert np.all(np.diff(data[:, 0]) > 0)
    assert np.all(np.isfinite(data))


def test_bit_identical_logs(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    short_run(seed=4)[0].to_csv(a)
    short_run(seed=4)[0].to_csv(b)
    assert a.read_bytes() == b.read_bytes()


def test_seed_changes_jittered_sample_set():
    cfg = parse_config(shipped_config("planar_lqr.cfg"))
    cfg.sample_spec["jitter"] = 0.05
    p0 = cfg.with_seed(0).sample_set().points
    p1 = cfg.with_seed(1).sample_set().points
    assert not np.array_equal(p0, p1)
    np.testing.assert_array_equal(p0, cfg.with_seed(0).sample_set().points)


def test_halving_dt_changes_final_weights_little(scalar):
    problem = scalar_problem(scalar)
    finals = []
    for dt, k in ((0.005, 10), (0.0025, 20)):
        cfg = SimConfig(x0=[1.0], thetahat0=[-0.5], Wc0=[0.5], Wa0=[0.5], dt=dt, t_final=20.0,
                        record_interval=k, rank_check_interval=k, log_interval=k)
        finals.append(run_experiment(cfg, problem)[0]["Wc"][-1, 0])
    assert abs(finals[0] - finals[1]) < 1e-3


def test_abort_carries_partial_log(scalar):
    m, c, b = scalar
    problem = scalar_problem(scalar)
    # an explicit step far beyond the stability limit of the observer blows up
    problem.id_gains = IdentifierGains(k_x=1e6, Gamma_theta=1.0, k_theta=1.0)
    cfg = SimConfig(x0=[1.0], xhat0=[0.0], thetahat0=[-0.5], dt=0.01, t_final=50.0,
                    log_interval=1)
    with np.errstate(all="ignore"), pytest.raises(SimulationError) as err:
        run_experiment(cfg, problem)
    assert isinstance(err.value.log, TrajectoryLog) and len(err.value.log) >= 1


def test_state_stays_in_ball_when_gains_pass():
    cfg = parse_config(shipped_config("scalar_passing.cfg"))
    log, summary = run_experiment(cfg.sim, cfg.problem(), gain_inputs=cfg.gain_inputs())
    assert summary.gain_report.passed
    assert np.all(np.linalg.norm(log["x"], axis=1) <= cfg.Z_bar)
