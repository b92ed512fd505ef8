"""Jump-day detection as mean changepoints of normalised price differences.

Detection runs PELT with a Gaussian mean-change cost (unit variance, i.e.
within-segment sum of squared deviations) on the z-scored first differences of
a price series.  A changepoint is reported as the last index of a segment
(``cpt``); the matching jump day in price coordinates is ``cpt + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSeriesError, JumpVarError
from .marketdata import PriceSeries

__all__ = [
    "ChangepointConfig",
    "JumpDays",
    "normalize_differences",
    "segment_cost",
    "pelt",
    "merge_spikes",
    "detect_changepoints",
    "detect_jumps",
    "jump_indicator",
    "jump_correlation",
]


@dataclass(frozen=True)
class ChangepointConfig:
    """``penalty=None`` means ``2 * ln(n)`` with ``n`` the detector input length.

    ``merge_spikes`` collapses a one-point segment bounded by changepoints on
    both sides (a lone outlier in the differences, i.e. a level shift in the
    prices) into a single changepoint at the outlier itself.
    """

    penalty: float | None = None
    min_segment_length: int = 1
    cost: str = "normal-mean"
    merge_spikes: bool = True

    def __post_init__(self):
        if self.penalty is not None and not self.penalty >= 0:
            raise JumpVarError(f"penalty must be >= 0, got {self.penalty}")
        if int(self.min_segment_length) != self.min_segment_length or self.min_segment_length < 1:
            raise JumpVarError(f"min_segment_length must be an integer >= 1, got {self.min_segment_length}")
        if self.cost != "normal-mean":
            raise JumpVarError(f"unsupported cost {self.cost!r}")

    def penalty_for(self, n: int) -> float:
        return 2.0 * math.log(n) if self.penalty is None else float(self.penalty)


@dataclass(frozen=True)
class JumpDays:
    """Detector output.  ``n`` is the length of the price series."""

    cpt_indices: tuple = ()
    jpt_indices: tuple = field(default=None)
    n: int = 0

    def __post_init__(self):
        cpt = tuple(int(c) for c in self.cpt_indices)
        jpt = tuple(c + 1 for c in cpt) if self.jpt_indices is None else tuple(int(j) for j in self.jpt_indices)
        object.__setattr__(self, "cpt_indices", cpt)
        object.__setattr__(self, "jpt_indices", jpt)
        if len(cpt) != len(jpt) or any(j != c + 1 for c, j in zip(cpt, jpt)):
            raise JumpVarError("jump days must satisfy jpt = cpt + 1")
        if any(b <= a for a, b in zip(jpt, jpt[1:])):
            raise JumpVarError("jump days must be strictly increasing")
        if jpt and (jpt[0] < 1 or jpt[-1] > self.n - 1):
            raise JumpVarError(f"jump days must lie in [1, {self.n - 1}]")

    @classmethod
    def from_jpt(cls, jpt, n: int) -> "JumpDays":
        jpt = [int(j) for j in jpt]
        return cls(tuple(j - 1 for j in jpt), tuple(jpt), n)

    def __len__(self):
        return len(self.jpt_indices)


def normalize_differences(series) -> np.ndarray:
    """Z-scored first differences (sample std, ``n - 1`` denominator)."""
    prices = series.prices if isinstance(series, PriceSeries) else np.asarray(series, dtype=float)
    if prices.size < 3:
        raise JumpVarError("need at least 3 prices to normalise differences")
    if np.isnan(prices).any():
        raise JumpVarError("series has gaps; interpolate first")
    d = np.diff(prices)
    sd = d.std(ddof=1)
    if not sd > 0 or sd <= 1e-14 * np.max(np.abs(d)):
        raise DegenerateSeriesError("degenerate series: differences have zero variance")
    return (d - d.mean()) / sd


def segment_cost(x) -> float:
    """Within-segment sum of squared deviations from the segment mean."""
    x = np.asarray(x, dtype=float)
    return float(np.sum((x - x.mean()) ** 2))


def pelt(x, penalty: float, min_segment_length: int = 1) -> list[int]:
    """Exact penalised mean-change segmentation.

    Returns the changepoints as segment end indices (0-based, inclusive),
    excluding the end of the series.  Minimises
    ``sum(segment costs) + penalty * n_changepoints`` over all segmentations
    whose segments have at least ``min_segment_length`` points.

    Pruning is deferred by ``min_segment_length`` steps: a candidate beaten at
    time ``t`` can still be the only admissible split for ends in
    ``(t, t + m)``, so it is dropped only once ``t`` itself becomes admissible.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    m = int(min_segment_length)
    if n < 2 * m:
        raise JumpVarError(f"series too short: length {n} < 2 * min_segment_length ({2 * m})")
    if math.isinf(penalty):
        return []
    xc = x - x.mean()
    s1 = np.concatenate(([0.0], np.cumsum(xc)))
    s2 = np.concatenate(([0.0], np.cumsum(xc * xc)))

    def cost(tau, t):
        length = t - tau
        seg = s1[t] - s1[tau]
        return (s2[t] - s2[tau]) - seg * seg / length

    F = np.full(n + 1, np.inf)
    F[0] = -penalty
    last = np.zeros(n + 1, dtype=np.int64)
    cands = np.array([0], dtype=np.int64)
    dead = np.array([np.iinfo(np.int64).max], dtype=np.int64)
    for t in range(m, n + 1):
        if t - m >= m:
            cands = np.append(cands, t - m)
            dead = np.append(dead, np.iinfo(np.int64).max)
        alive = dead > t
        cands, dead = cands[alive], dead[alive]
        vals = F[cands] + cost(cands, t)
        j = int(np.argmin(vals))
        F[t] = vals[j] + penalty
        last[t] = cands[j]
        slack = 1e-10 * (1.0 + abs(F[t]))
        beaten = vals > F[t] + slack
        dead[beaten] = np.minimum(dead[beaten], t + m)

    cps = []
    t = n
    while t > 0:
        tau = int(last[t])
        if tau > 0:
            cps.append(tau - 1)
        t = tau
    return cps[::-1]


def merge_spikes(cpts) -> list[int]:
    """Drop ``c`` whenever ``c + 1`` is also a changepoint.

    Segment ``[c+1, c+1]`` is then a single outlying difference; its own end
    ``c + 1`` marks the day before the price jump, so ``c`` is redundant.
    Runs of consecutive changepoints keep only their last member.
    """
    cpts = list(cpts)
    return [c for c, nxt in zip(cpts, cpts[1:] + [None]) if nxt != c + 1]


def detect_changepoints(x, cfg: ChangepointConfig | None = None) -> JumpDays:
    """Run PELT on ``x`` (a difference series) and map to jump days.

    ``x[i]`` is read as ``S[i+1] - S[i]``, so the returned ``JumpDays.n`` is
    ``len(x) + 1``.
    """
    cfg = cfg or ChangepointConfig()
    x = np.asarray(x, dtype=float)
    cpt = pelt(x, cfg.penalty_for(x.size), cfg.min_segment_length)
    if cfg.merge_spikes:
        cpt = merge_spikes(cpt)
    return JumpDays(tuple(cpt), None, x.size + 1)


def detect_jumps(series: PriceSeries, cfg: ChangepointConfig | None = None) -> JumpDays:
    """Normalise the differences of ``series`` and detect jump days on them."""
    return detect_changepoints(normalize_differences(series), cfg)


def jump_indicator(jumps, n: int) -> np.ndarray:
    jpt = jumps.jpt_indices if isinstance(jumps, JumpDays) else tuple(jumps)
    out = np.zeros(n, dtype=np.int8)
    if jpt:
        if max(jpt) >= n or min(jpt) < 0:
            raise JumpVarError(f"jump index outside [0, {n})")
        out[list(jpt)] = 1
    return out


def jump_correlation(indicators) -> np.ndarray:
    """Pairwise phi coefficients; rows/columns of constant vectors are ``nan``."""
    X = np.asarray(indicators, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise JumpVarError("need equal-length indicator vectors of length >= 2")
    Xc = X - X.mean(axis=1, keepdims=True)
    ss = np.sqrt(np.sum(Xc * Xc, axis=1))
    ok = ss > 0
    out = np.full((X.shape[0], X.shape[0]), np.nan)
    idx = np.flatnonzero(ok)
    if idx.size:
        sub = Xc[idx] / ss[idx, None]
        out[np.ix_(idx, idx)] = np.clip(sub @ sub.T, -1.0, 1.0)
        out[idx, idx] = 1.0
    return out
