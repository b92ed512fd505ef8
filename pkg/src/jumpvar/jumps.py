"""Jump sizes, cumulative jump sizes and removal of jumps from price levels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .changepoint import JumpDays
from .errors import DataError, JumpVarError
from .marketdata import PriceSeries

__all__ = ["JumpProfile", "compute_jump_profile", "in_force_offsets", "remove_jumps", "reapply_jumps"]


@dataclass(frozen=True)
class JumpProfile:
    """Detected jumps of one asset, in price units.

    ``J[k] = S[jpt[k]] - S[jpt[k] - 1]`` and ``CJ`` is the running sum of ``J``.
    """

    asset_id: str
    jpt: tuple
    J: np.ndarray
    CJ: np.ndarray
    jump_dates: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "jpt", tuple(int(j) for j in self.jpt))
        object.__setattr__(self, "J", np.asarray(self.J, dtype=float))
        object.__setattr__(self, "CJ", np.asarray(self.CJ, dtype=float))
        if self.jump_dates is not None:
            object.__setattr__(self, "jump_dates", np.asarray(self.jump_dates, dtype="datetime64[D]"))
        if not (len(self.jpt) == self.J.size == self.CJ.size):
            raise JumpVarError("jpt, J and CJ must have equal length")

    def __len__(self):
        return len(self.jpt)

    @classmethod
    def empty(cls, asset_id: str) -> "JumpProfile":
        return cls(asset_id, (), np.empty(0), np.empty(0), np.empty(0, dtype="datetime64[D]"))


def compute_jump_profile(series: PriceSeries, jumps) -> JumpProfile:
    jpt = jumps.jpt_indices if isinstance(jumps, JumpDays) else tuple(int(j) for j in jumps)
    p = series.prices
    if any(j < 1 for j in jpt):
        raise JumpVarError("jump day 0 has no predecessor")
    if any(j >= p.size for j in jpt):
        raise JumpVarError(f"jump day beyond series end ({p.size} prices)")
    if any(b <= a for a, b in zip(jpt, jpt[1:])):
        raise JumpVarError("jump days must be strictly increasing")
    idx = np.asarray(jpt, dtype=np.int64)
    J = p[idx] - p[idx - 1]
    return JumpProfile(series.asset_id, jpt, J, np.cumsum(J), series.dates[idx])


def in_force_offsets(profile: JumpProfile, n: int) -> np.ndarray:
    """Cumulative jump size in force at each of ``n`` price indices (0 before the first jump)."""
    if profile.jpt and profile.jpt[-1] >= n:
        raise JumpVarError("jump profile does not fit the series")
    k = np.searchsorted(np.asarray(profile.jpt, dtype=np.int64), np.arange(n), side="right") - 1
    return np.where(k >= 0, profile.CJ[np.maximum(k, 0)] if profile.CJ.size else 0.0, 0.0)


def remove_jumps(series: PriceSeries, profile: JumpProfile) -> PriceSeries:
    """Subtract the in-force cumulative jump size from every price at or after each jump day."""
    if not profile.jpt:
        return series
    offsets = in_force_offsets(profile, len(series))
    adjusted = series.prices - offsets
    bad = adjusted <= 0
    if bad.any():
        listing = ", ".join(str(d) for d in series.dates[bad][:10])
        raise DataError(f"{series.asset_id}: jump removal gives non-positive prices on {listing}")
    return PriceSeries(series.asset_id, series.dates, adjusted)


def reapply_jumps(adjusted: PriceSeries, profile: JumpProfile) -> PriceSeries:
    if not profile.jpt:
        return adjusted
    return PriceSeries(adjusted.asset_id, adjusted.dates, adjusted.prices + in_force_offsets(profile, len(adjusted)))
