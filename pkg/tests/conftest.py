import numpy as np
import pytest

from oeeforecast.series import TimeSeries


def make_oee_series(n: int, seed: int, name: str = "synthetic") -> TimeSeries:
    """Paper-like stand-in: bounded hourly efficiency with 8/24/168 cycles.

    Volatile base level, three nested seasonal components, AR(1) noise,
    clipped into [1, 60]. Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    level = 30.0 + 8.0 * np.sin(2 * np.pi * t / (n / 1.7))
    shift = 6.0 * np.sin(2 * np.pi * t / 8.0 + 0.4)
    daily = 9.0 * np.sin(2 * np.pi * t / 24.0) + 3.0 * np.cos(4 * np.pi * t / 24.0)
    weekly = 7.0 * np.sin(2 * np.pi * t / 168.0 + 1.1)
    noise = np.zeros(n)
    eps = rng.normal(0.0, 4.5, n)
    for i in range(1, n):
        noise[i] = 0.55 * noise[i - 1] + eps[i]
    # occasional stoppages pin the series to the floor, like real downtime
    stops = rng.random(n) < 0.04
    y = level + shift + daily + weekly + noise
    y[stops] = 1.0
    return TimeSeries(np.clip(y, 1.0, 60.0), name=name)


@pytest.fixture
def oee_series():
    return make_oee_series(648, seed=7, name="stand_in_a")
