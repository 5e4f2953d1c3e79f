import numpy as np
import pytest

from oeeforecast.forecasters import (
    EtsFit,
    ForecastResult,
    ets_fit,
    ets_forecast,
    ets_update,
    recombine_forecasts,
    seasonal_naive_forecast,
)
from oeeforecast.series import TimeSeries


class TestEts:
    def test_exact_line_continues(self):
        n = 60
        t = np.arange(n)
        fit = ets_fit(TimeSeries(2.0 + 0.5 * t))
        fc = ets_forecast(fit, 3)
        expect = [2.0 + 0.5 * n, 2.0 + 0.5 * (n + 1), 2.0 + 0.5 * (n + 2)]
        assert np.allclose(fc.values, expect, atol=1e-3)

    def test_constant_series(self):
        fit = ets_fit(TimeSeries(np.full(40, 12.0)))
        assert fit.level == pytest.approx(12.0, abs=1e-6)
        assert abs(fit.slope) < 1e-6
        assert np.allclose(ets_forecast(fit, 5).values, 12.0, atol=1e-5)

    def test_noisy_line_slope_recovered(self):
        rng = np.random.default_rng(8)
        t = np.arange(500)
        fit = ets_fit(TimeSeries(1.0 + 0.5 * t + rng.normal(0, 1, 500)))
        assert 0.4 <= fit.slope <= 0.6
        fc = ets_forecast(fit, 10)
        implied_slope = (fc.values[-1] - fc.values[0]) / 9.0
        assert abs(implied_slope - 0.5) <= 0.1

    def test_level_shift_linearity(self):
        rng = np.random.default_rng(3)
        y = np.cumsum(rng.normal(size=80)) + 50.0
        f0 = ets_fit(TimeSeries(y))
        f1 = ets_update(EtsFit(f0.alpha, f0.beta, 0, 0, 0), TimeSeries(y + 25.0))
        a = ets_forecast(f0, 4).values
        b = ets_forecast(f1, 4).values
        assert np.allclose(np.asarray(b) - np.asarray(a), 25.0, atol=1e-8)

    def test_update_refilters_with_frozen_params(self):
        rng = np.random.default_rng(4)
        y = rng.normal(10, 2, 100)
        fit = ets_fit(TimeSeries(y))
        again = ets_update(fit, TimeSeries(y))
        assert again.level == pytest.approx(fit.level)
        assert again.slope == pytest.approx(fit.slope)

    def test_too_short(self):
        with pytest.raises(ValueError):
            ets_fit(TimeSeries(np.arange(5.0)))

    def test_grid_and_scalar_filter_agree(self):
        from oeeforecast.forecasters import _holt_filter, _holt_sse_grid, _init_state

        rng = np.random.default_rng(12)
        y = np.cumsum(rng.normal(size=60)) + 20.0
        l0, b0 = _init_state(y)
        alphas = np.array([0.17, 0.5, 0.83])
        betas = np.array([0.0, 0.31, 0.62])
        a, b, best = _holt_sse_grid(y, alphas, betas, l0, b0)
        # the winning cell must reproduce exactly through the scalar filter
        assert _holt_filter(y, a, b, l0, b0)[2] == pytest.approx(best, rel=1e-12)
        for ca in alphas:
            for cb in betas:
                assert _holt_filter(y, ca, cb, l0, b0)[2] >= best - 1e-9


class TestSeasonalNaive:
    def test_repeats_last_cycle(self):
        fc = seasonal_naive_forecast(TimeSeries([9.0, 9.0, 9.0, 1.0, 2.0, 3.0]), 3, 5)
        assert fc.values == (1.0, 2.0, 3.0, 1.0, 2.0)

    def test_horizon_one(self):
        fc = seasonal_naive_forecast(TimeSeries([1.0, 2.0, 3.0]), 3, 1)
        assert fc.values == (1.0,)

    def test_exact_periodicity_on_sine(self):
        t = np.arange(240)
        x = np.sin(2 * np.pi * t / 24.0)
        fc = seasonal_naive_forecast(TimeSeries(x), 24, 48)
        future = np.sin(2 * np.pi * (240 + np.arange(48)) / 24.0)
        assert np.max(np.abs(np.asarray(fc.values) - future)) < 1e-9

    def test_periodicity_property(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=30)
        fc = seasonal_naive_forecast(TimeSeries(x), 5, 17)
        v = fc.values
        for h in range(17 - 5):
            assert v[h] == v[h + 5]

    def test_series_shorter_than_period(self):
        with pytest.raises(ValueError):
            seasonal_naive_forecast(TimeSeries([1.0, 2.0]), 3, 1)


class TestRecombine:
    def _fr(self, values, origin=9, label="part"):
        return ForecastResult(origin, len(values), tuple(values), label)

    def test_arithmetic(self):
        out = recombine_forecasts(
            self._fr([10.0, 10.0]), [self._fr([2.0, -2.0])], self._fr([0.5, -0.5])
        )
        assert out.values == (12.5, 7.5)

    def test_zero_components_pass_trend_through(self):
        out = recombine_forecasts(
            self._fr([10.0, 11.0]), [self._fr([0.0, 0.0])], self._fr([0.0, 0.0])
        )
        assert out.values == (10.0, 11.0)

    def test_clamped_to_range(self):
        high = recombine_forecasts(self._fr([70.0]), [self._fr([5.0])], self._fr([0.0]))
        low = recombine_forecasts(self._fr([-10.0]), [self._fr([0.0])], self._fr([0.0]))
        assert high.values == (60.0,)
        assert low.values == (1.0,)

    def test_output_always_in_range_property(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            parts = rng.normal(0, 40, size=(3, 4))
            out = recombine_forecasts(
                self._fr(parts[0]), [self._fr(parts[1])], self._fr(parts[2])
            )
            assert all(1.0 <= v <= 60.0 for v in out.values)

    def test_mismatch_rejected(self):
        with pytest.raises(ValueError, match="horizon"):
            recombine_forecasts(self._fr([1.0]), [], self._fr([1.0, 2.0]))
        with pytest.raises(ValueError, match="origin"):
            recombine_forecasts(
                self._fr([1.0]), [], ForecastResult(5, 1, (1.0,), "other")
            )
