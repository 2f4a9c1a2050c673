import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from hblab.estimators import FlowMapTransformer, PowerTailRegressor


class TestPowerTailRegressor:
    def test_fit_predict(self):
        x = np.linspace(20, 100, 200)[:, None]
        y = -0.3 / x[:, 0]
        reg = PowerTailRegressor().fit(x, y)
        assert reg.slope_ == pytest.approx(-1.0)
        assert reg.amplitude_ == pytest.approx(-0.3)
        assert np.allclose(reg.predict(x), y)
        assert reg.score(x, y) == pytest.approx(1.0)

    def test_general_power(self):
        x = np.geomspace(1, 50, 100)[:, None]
        y = 4.0 * x[:, 0] ** -2.5
        reg = PowerTailRegressor().fit(x, y)
        assert reg.slope_ == pytest.approx(-2.5)
        assert reg.prefactor_ == pytest.approx(4.0)

    def test_below_floor(self):
        x = np.linspace(1, 2, 40)[:, None]
        reg = PowerTailRegressor().fit(x, np.full(40, 1e-30))
        assert reg.below_floor_ and np.all(reg.predict(x) == 0)

    def test_params_and_clone(self):
        reg = PowerTailRegressor(floor=1e-10, min_points=4)
        assert reg.get_params() == {"floor": 1e-10, "min_points": 4}
        assert clone(reg).get_params() == reg.get_params()

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            PowerTailRegressor().predict(np.ones((3, 1)))

    def test_single_feature_only(self):
        with pytest.raises(ValueError):
            PowerTailRegressor().fit(np.ones((20, 2)), np.ones(20))


class TestFlowMapTransformer:
    def test_single_mode_rows(self):
        x = -np.pi + 2 * np.pi / 32 * np.arange(32)
        X = np.stack([np.cos(x), 2 * np.cos(3 * x)])
        out = FlowMapTransformer(beta=1.0, mu=0.1, L=np.pi, T=0.5, dt=0.05).fit_transform(X)
        assert np.allclose(out[0], np.exp(-0.1 * 0.5) * np.cos(x + 0.5), atol=1e-10)
        assert np.allclose(out[1], 2 * np.exp(-0.9 * 0.5) * np.cos(3 * x + 0.5), atol=1e-10)

    def test_linear_flow_is_linear(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((3, 32))
        ft = FlowMapTransformer(T=0.2, dt=0.05, nonlinear=False).fit(X)
        out = ft.transform(X)
        assert np.allclose(ft.transform(X[:1] + 2 * X[1:2]), out[:1] + 2 * out[1:2], atol=1e-12)

    def test_in_pipeline(self):
        x = np.linspace(-np.pi, np.pi, 32, endpoint=False)
        X = np.stack([np.exp(-4 * x**2)])
        pipe = make_pipeline(FlowMapTransformer(T=0.1, dt=0.01, mu=0.5))
        assert pipe.fit_transform(X).shape == (1, 32)

    def test_width_checked(self):
        ft = FlowMapTransformer(T=0.1).fit(np.zeros((1, 32)))
        with pytest.raises(ValueError):
            ft.transform(np.zeros((1, 16)))
        with pytest.raises(NotFittedError):
            FlowMapTransformer().transform(np.zeros((1, 16)))
