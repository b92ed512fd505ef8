"""Jump-aware Value-at-Risk for daily commodity cash prices."""

__version__ = "0.1.0"

from .backtest import BacktestReport, dq_test, jump_diagnostics, rmse  # noqa: E402
from .changepoint import (  # noqa: E402
    ChangepointConfig,
    JumpDays,
    detect_changepoints,
    detect_jumps,
    jump_correlation,
    jump_indicator,
    normalize_differences,
)
from .estimation import ModelParams, cholesky_decompose, estimate_params, normal_quantile  # noqa: E402
from .jumps import JumpProfile, compute_jump_profile, reapply_jumps, remove_jumps  # noqa: E402
from .levy import (  # noqa: E402
    DoubleExponentialJumps,
    JumpComponent,
    LevyModel,
    NormalJumps,
    PointMassJumps,
    VaRSeries,
    expected_var_series,
    var_general,
    var_portfolio_no_jump_terms,
    var_single_asset,
)
from .marketdata import PriceSeries, ReturnSeries, interpolate_gaps, load_prices, log_returns  # noqa: E402
from .simulation import (  # noqa: E402
    SimConfig,
    mc_poisson_exponential_functional,
    mc_var_coverage,
    simulate_paths,
)
