"""Estimator-style wrapper around the closed-loop simulation.

``fit`` runs one online learning experiment; the rows of ``X`` are the
Bellman-error sample points. ``predict`` returns the learned policy at new
states. The learning itself happens along a simulated trajectory, so ``fit``
takes no targets.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import adp
from .config import ExperimentConfig, parse_config, shipped_config
from .sim import Problem, run_experiment


class OptimalRegulator(BaseEstimator):
    """Online approximate optimal regulator.

    Parameters
    ----------
    config : str, path or ExperimentConfig
        Experiment definition. Bare file names are looked up among the shipped
        configurations first.
    seed : int, optional
        Overrides the configured simulation seed.
    t_final : float, optional
        Overrides the configured horizon.

    Attributes
    ----------
    W_c_, W_a_ : ndarray (L,)
        Critic and actor weights at the end of the run.
    thetahat_ : ndarray (p,)
        Final drift-parameter estimate.
    log_ : TrajectoryLog
    summary_ : RunSummary
    """

    def __init__(self, config="scalar_lqr.cfg", seed=None, t_final=None):
        self.config = config
        self.seed = seed
        self.t_final = t_final

    def _experiment(self):
        cfg = self.config
        if not isinstance(cfg, ExperimentConfig):
            path = shipped_config(cfg)
            cfg = parse_config(path if path.is_file() else cfg)
        if self.seed is not None:
            cfg = cfg.with_seed(self.seed)
        if self.t_final is not None:
            import dataclasses

            cfg = dataclasses.replace(cfg, sim=dataclasses.replace(cfg.sim,
                                                                   t_final=float(self.t_final)))
        return cfg

    def fit(self, X=None, y=None):
        """Run the learning experiment.

        Parameters
        ----------
        X : array-like (N, n), optional
            Bellman-error sample points; defaults to the configured box grid.
        y : ignored
        """
        cfg = self._experiment()
        if X is None:
            sample_set = cfg.sample_set()
        else:
            X = check_array(X, ensure_min_features=cfg.model.n)
            if X.shape[1] != cfg.model.n:
                raise ValueError(f"X has {X.shape[1]} features, the plant has {cfg.model.n}")
            sample_set = adp.SamplePointSet.from_points(X, cfg.basis, cfg.model, cfg.cost,
                                                        radius=cfg.Z_bar)
        problem = Problem(cfg.model, cfg.cost, cfg.basis, cfg.id_gains, cfg.adp_gains,
                          sample_set)
        orc = cfg.oracle()
        self.log_, self.summary_ = run_experiment(
            cfg.sim, problem, W_star=None if orc is None else orc.W_star)
        _, _, self.thetahat_, self.W_c_, self.W_a_, self.Gamma_ = self.summary_.final_state
        self.experiment_ = cfg
        self.n_features_in_ = cfg.model.n
        return self

    def _check_X(self, X):
        check_is_fitted(self, "W_a_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def predict(self, X):
        """Policy ``u(x)`` at each row of ``X``; shape (n_samples, m)."""
        X = self._check_X(X)
        cfg = self.experiment_
        return np.array([adp.policy(cfg.basis, cfg.model, cfg.cost, self.W_a_, x) for x in X])

    def value(self, X):
        """Critic value estimate ``W_c' sigma(x)`` at each row of ``X``."""
        X = self._check_X(X)
        return np.array([self.W_c_ @ self.experiment_.basis.sigma(x) for x in X])

    def score(self, X, y=None):
        """Negative mean squared Bellman error at the rows of ``X``."""
        X = self._check_X(X)
        cfg = self.experiment_
        be = [adp.bellman_error_hat(cfg.basis, cfg.model, cfg.cost, self.W_c_, self.W_a_,
                                    self.thetahat_, x) for x in X]
        return -float(np.mean(np.square(be)))
