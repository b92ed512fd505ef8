"""VaR backtesting: Dynamic Quantile test, RMSE and cumulative-jump diagnostics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import chi2

from .errors import JumpVarError, SingularDesignError
from .jumps import JumpProfile
from .levy import VaRSeries
from .marketdata import PriceSeries
from .simulation import block_rng

__all__ = [
    "hit_sequence",
    "dq_design",
    "dq_statistic",
    "dq_test",
    "rmse",
    "realized_levels",
    "mean_cumulative_jump",
    "jump_diagnostics",
    "BacktestReport",
    "backtest_report",
]


def _values(x):
    return x.values if isinstance(x, VaRSeries) else np.asarray(x, dtype=float)


def hit_sequence(realized, var_series, alpha: float) -> np.ndarray:
    """Centred violation indicators ``1{realized < VaR} - (1 - alpha)``."""
    r, v = _values(realized), _values(var_series)
    if r.shape != v.shape:
        raise JumpVarError(f"realized ({r.size}) and VaR ({v.size}) series are not aligned")
    return (r < v).astype(float) - (1.0 - alpha)


def dq_design(hits, var_values, lags: int) -> tuple[np.ndarray, np.ndarray]:
    """Regressand ``hit_t`` and design ``[1, hit_{t-1}..hit_{t-L}, VaR_t]`` for ``t >= L``."""
    hits = np.asarray(hits, dtype=float)
    v = np.asarray(var_values, dtype=float)
    n = hits.size
    cols = [np.ones(n - lags)] + [hits[lags - j:n - j] for j in range(1, lags + 1)] + [v[lags:]]
    return hits[lags:], np.column_stack(cols)


def dq_statistic(y, X, alpha: float) -> float:
    """``beta' X'X beta / (alpha (1 - alpha))`` with least-squares ``beta``.

    Computed as the squared norm of the projection of ``y`` on the column
    space of ``X``, which also covers rank-deficient designs.
    """
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    fitted = X @ beta
    return float(fitted @ fitted) / (alpha * (1.0 - alpha))


def dq_test(realized, var_series, alpha: float = 0.99, lags: int = 4,
            method: str = "chi2", n_sim: int = 9999, seed: int = 0) -> dict:
    """Engle-Manganelli Dynamic Quantile test.

    ``method="chi2"`` gives the asymptotic p-value from chi-square with
    ``lags + 2`` degrees of freedom.  ``method="monte-carlo"`` instead ranks the
    statistic among ``n_sim`` statistics recomputed on i.i.d. Bernoulli(1 -
    alpha) hit sequences with the same VaR regressor (finite-sample exact
    under the null).
    """
    if lags < 1:
        raise JumpVarError("lags must be >= 1")
    hits = hit_sequence(realized, var_series, alpha)
    v = _values(var_series)
    n = hits.size
    if n <= lags + 2:
        raise JumpVarError(f"need more than lags + 2 = {lags + 2} observations, got {n}")
    y, X = dq_design(hits, v, lags)
    constant_hits = np.ptp(hits) == 0
    if not constant_hits and np.linalg.matrix_rank(X) < X.shape[1]:
        raise SingularDesignError("DQ design matrix X'X is singular (is the VaR series constant?)")
    stat = dq_statistic(y, X, alpha)
    df = lags + 2
    if method == "chi2":
        p = float(chi2.sf(stat, df))
    elif method == "monte-carlo":
        rng = block_rng(seed, 0, stream=2)
        exceed = 0
        for _ in range(n_sim):
            h = (rng.random(n) < (1.0 - alpha)).astype(float) - (1.0 - alpha)
            ys, Xs = dq_design(h, v, lags)
            exceed += dq_statistic(ys, Xs, alpha) >= stat
        p = (exceed + 1) / (n_sim + 1)
    else:
        raise JumpVarError(f"unknown DQ p-value method {method!r}")
    return {"statistic": stat, "p_value": min(max(p, 0.0), 1.0), "df": df, "lags": lags,
            "n_obs": n, "violations": int(np.count_nonzero(hits > 0))}


def rmse(series_a, series_b) -> float:
    if isinstance(series_a, VaRSeries) and isinstance(series_b, VaRSeries):
        if not np.array_equal(series_a.dates, series_b.dates):
            raise JumpVarError("VaR series dates are misaligned")
    a, b = _values(series_a), _values(series_b)
    if a.shape != b.shape:
        raise JumpVarError("series lengths differ")
    d = a - b
    return math.sqrt(float(np.mean(d * d)))


def realized_levels(panel, dates, weights=None) -> np.ndarray:
    """Realised growth factor since the first price, ``exp(w . log(S(d)/S(0)))``, at ``dates``."""
    if isinstance(panel, PriceSeries):
        panel = [panel]
    panel = list(panel)
    n = len(panel)
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    dates = np.asarray(dates, dtype="datetime64[D]")
    idx = np.searchsorted(panel[0].dates, dates)
    if np.any(idx >= len(panel[0])) or np.any(panel[0].dates[np.minimum(idx, len(panel[0]) - 1)] != dates):
        raise JumpVarError("evaluation dates missing from the price series")
    logs = np.column_stack([np.log(s.prices[idx] / s.prices[0]) for s in panel])
    return np.exp(logs @ w)


def mean_cumulative_jump(profile: JumpProfile, dates) -> float:
    """Average over ``dates`` of the cumulative jump size in force (0 before the first jump)."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    if dates.size == 0:
        raise JumpVarError("no evaluation dates")
    if profile is None or not len(profile):
        return 0.0
    if profile.jump_dates is None:
        raise JumpVarError("jump profile has no dates")
    k = np.searchsorted(profile.jump_dates, dates, side="right") - 1
    in_force = np.where(k >= 0, profile.CJ[np.maximum(k, 0)], 0.0)
    return float(np.mean(in_force))


def _pearson(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 2:
        return math.nan
    xc, yc = x - x.mean(), y - y.mean()
    den = math.sqrt(float(xc @ xc) * float(yc @ yc))
    return float(xc @ yc) / den if den > 0 else math.nan


def jump_diagnostics(profiles, var_with: dict, var_without: dict) -> dict:
    """Per-asset MCJ and mean-VaR gap ``delta``, plus their cross-asset correlation.

    ``profiles`` maps asset id to :class:`JumpProfile` (a list is keyed by
    ``asset_id``).  MCJ is averaged over the evaluation dates of the
    with-jumps VaR series.
    """
    if not isinstance(profiles, dict):
        profiles = {p.asset_id: p for p in profiles}
    mcj, delta = {}, {}
    for asset, vw in var_with.items():
        vo = var_without[asset]
        if not np.array_equal(vw.dates, vo.dates):
            raise JumpVarError(f"{asset}: VaR series dates are misaligned")
        mcj[asset] = mean_cumulative_jump(profiles.get(asset), vw.dates)
        delta[asset] = float(np.mean(vw.values) - np.mean(vo.values))
    assets = list(var_with)
    rho = _pearson([mcj[a] for a in assets], [delta[a] for a in assets])
    return {"mcj": mcj, "delta": delta, "rho_mcj_delta": rho}


@dataclass
class BacktestReport:
    asset_id: str
    n_obs: int
    violation_count: int
    dq_statistic: float
    dq_p_value: float
    lags: int
    rmse: float
    delta: float
    mcj: float

    def __post_init__(self):
        if not 0 <= self.violation_count <= self.n_obs:
            raise JumpVarError("violation count out of range")
        if not (math.isnan(self.dq_p_value) or 0.0 <= self.dq_p_value <= 1.0):
            raise JumpVarError("p-value outside [0, 1]")
        if self.rmse < 0:
            raise JumpVarError("rmse must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {"n_obs": d["n_obs"], "violations": d["violation_count"], "dq_stat": d["dq_statistic"],
                "dq_p": d["dq_p_value"], "lags": d["lags"], "rmse": d["rmse"], "delta": d["delta"],
                "mcj": d["mcj"]}


def backtest_report(prices, var_with: VaRSeries, var_without: VaRSeries, profile: JumpProfile | None,
                    weights=None, lags: int = 4) -> BacktestReport:
    """DQ backtest of the with-jumps VaR against realised growth, plus RMSE, delta and MCJ."""
    realized = realized_levels(prices, var_with.dates, weights)
    dq = dq_test(realized, var_with, var_with.alpha, lags)
    return BacktestReport(
        asset_id=var_with.series_id,
        n_obs=dq["n_obs"],
        violation_count=dq["violations"],
        dq_statistic=dq["statistic"],
        dq_p_value=dq["p_value"],
        lags=lags,
        rmse=rmse(var_with, var_without),
        delta=float(np.mean(var_with.values) - np.mean(var_without.values)),
        mcj=mean_cumulative_jump(profile, var_with.dates),
    )
