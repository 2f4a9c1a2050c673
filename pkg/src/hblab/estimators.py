"""scikit-learn wrappers around the tail fit and the solution map.

``PowerTailRegressor`` fits |y| ~ a |x|^slope and predicts the fitted power
law. ``FlowMapTransformer`` maps each row of samples (one initial datum on the
periodic grid) to the solution at time ``T``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .fitting import FLOOR, MIN_POINTS, fit_power_tail
from .solver import ModelParams, SolverConfig, make_initial, run
from .spectral_core import Grid

__all__ = ["PowerTailRegressor", "FlowMapTransformer"]


class PowerTailRegressor(RegressorMixin, BaseEstimator):
    """Log-log least squares on a single feature (the position)."""

    def __init__(self, floor=FLOOR, min_points=MIN_POINTS):
        self.floor = floor
        self.min_points = min_points

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_features=1)
        if X.shape[1] != 1:
            raise ValueError(f"expected a single position column, got {X.shape[1]}")
        x = X[:, 0]
        fit = fit_power_tail(x, y, floor=self.floor, min_points=self.min_points)
        self.slope_ = fit.slope
        self.amplitude_ = fit.amplitude
        self.r2_ = fit.r2
        self.n_used_ = fit.n_used
        self.below_floor_ = fit.below_floor
        if fit.below_floor:
            self.prefactor_ = 0.0
        else:
            use = (np.abs(y) >= self.floor) & (x != 0)
            lx = np.log(np.abs(x[use]))
            intercept = np.mean(np.log(np.abs(y[use])) - fit.slope * lx)
            self.prefactor_ = float(np.sign(np.mean(y[use])) * np.exp(intercept))
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        X = check_array(X)
        if X.shape[1] != 1:
            raise ValueError(f"expected a single position column, got {X.shape[1]}")
        if self.below_floor_:
            return np.zeros(X.shape[0])
        return self.prefactor_ * np.abs(X[:, 0]) ** self.slope_


class FlowMapTransformer(TransformerMixin, BaseEstimator):
    """u0 -> u(T) for each row; rows are samples of u0 on the grid x_j = -L + j dx."""

    def __init__(self, beta=1.0, mu=1.0, L=np.pi, T=1.0, dt=None, scheme="etd2", s=2.0,
                 nonlinear=True):
        self.beta = beta
        self.mu = mu
        self.L = L
        self.T = T
        self.dt = dt
        self.scheme = scheme
        self.s = s
        self.nonlinear = nonlinear

    def fit(self, X, y=None):
        X = check_array(X)
        self.grid_ = Grid(float(self.L), X.shape[1])
        self.params_ = ModelParams(float(self.beta), float(self.mu))
        self.config_ = SolverConfig(dt=self.dt, T=float(self.T), scheme=self.scheme,
                                    s=float(self.s), nonlinear=self.nonlinear,
                                    save_times=(float(self.T),))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} grid values, got {X.shape[1]}")
        out = np.empty_like(X, dtype=float)
        for i, row in enumerate(X):
            u0 = make_initial(self.grid_, "custom", samples=row)
            traj = run(u0, self.params_, self.config_)
            out[i] = traj.states[-1].u.values
        return out
