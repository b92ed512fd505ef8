import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from jumpvar.marketdata import PriceSeries  # noqa: E402


def make_series(prices, asset_id="a", start="2020-01-01"):
    prices = np.asarray(prices, dtype=float)
    first = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    dates = np.busday_offset(first, np.arange(prices.size))
    return PriceSeries(asset_id, dates, prices)


@pytest.fixture
def series_factory():
    return make_series


def random_pd(rng, n, scale=1.0):
    M = rng.standard_normal((n, n))
    return scale * (M @ M.T + n * np.eye(n) * 0.1)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
