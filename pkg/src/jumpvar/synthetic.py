"""Synthetic price panels: GBM with injected level shifts and known jump days.

A scenario is a plain dict (JSON-compatible)::

    {
      "start": "2016-09-26",          # first business day
      "n_days": 750,                  # prices per asset
      "assets": [
        {"id": "usg", "s0": 200.0, "mu": 0.0, "sigma": 0.01,
         "jumps": [{"day": 100, "size": 20.0}, {"day": 300, "size": -15.0}]}
      ],
      "correlation": [[1.0]],         # optional, Brownian correlation
      "missing_rate": 0.0             # optional, share of interior cells blanked
    }

A shift of ``size`` at ``day`` adds ``size`` to every price from that day on,
so the recorded truth is ``J = size`` at price index ``day``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import JumpVarError
from .estimation import cholesky_decompose
from .marketdata import PriceSeries

__all__ = ["TrueJump", "generate_synthetic", "write_truth", "read_truth", "business_days"]


@dataclass(frozen=True)
class TrueJump:
    asset_id: str
    jump_index: int
    jump_date: np.datetime64
    J: float


def business_days(start, n: int) -> np.ndarray:
    first = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    return np.busday_offset(first, np.arange(n), roll="forward")


def generate_synthetic(scenario: dict, seed: int):
    """Return ``(panel, truth)`` for ``scenario``; deterministic in ``seed``."""
    n_days = int(scenario["n_days"])
    assets = scenario["assets"]
    if n_days < 3 or not assets:
        raise JumpVarError("scenario needs n_days >= 3 and at least one asset")
    n = len(assets)
    dates = business_days(scenario.get("start", "2016-09-26"), n_days)
    rng = np.random.default_rng(seed)

    corr = np.asarray(scenario.get("correlation", np.eye(n)), dtype=float)
    L = cholesky_decompose(corr)
    Z = rng.standard_normal((n_days - 1, n)) @ L.T

    panel, truth = [], []
    for i, a in enumerate(assets):
        mu, sigma, s0 = float(a.get("mu", 0.0)), float(a["sigma"]), float(a["s0"])
        steps = (mu - 0.5 * sigma * sigma) + sigma * Z[:, i]
        prices = s0 * np.exp(np.concatenate(([0.0], np.cumsum(steps))))
        for jmp in sorted(a.get("jumps", []), key=lambda j: j["day"]):
            day, size = int(jmp["day"]), float(jmp["size"])
            if not 1 <= day < n_days:
                raise JumpVarError(f"{a['id']}: jump day {day} outside [1, {n_days - 1}]")
            prices[day:] += size
            truth.append(TrueJump(a["id"], day, dates[day], size))
        if np.any(prices <= 0):
            raise JumpVarError(f"{a['id']}: injected shifts drive prices non-positive")
        panel.append(prices)

    rate = float(scenario.get("missing_rate", 0.0))
    if rate > 0:
        protected = np.zeros((n_days, n), dtype=bool)
        protected[[0, -1], :] = True
        for tj in truth:
            k = [x["id"] for x in assets].index(tj.asset_id)
            protected[max(tj.jump_index - 1, 0):tj.jump_index + 1, k] = True
        holes = (rng.random((n_days, n)) < rate) & ~protected
        for k in range(n):
            panel[k][holes[:, k]] = math.nan

    series = [PriceSeries(a["id"], dates, p) for a, p in zip(assets, panel)]
    return series, truth


def write_truth(path, truth) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asset", "jump_date", "jump_index", "J"])
        for tj in truth:
            w.writerow([tj.asset_id, str(tj.jump_date), tj.jump_index, repr(float(tj.J))])


def read_truth(path) -> list[TrueJump]:
    with Path(path).open(newline="") as fh:
        return [TrueJump(r["asset"], int(r["jump_index"]), np.datetime64(r["jump_date"], "D"), float(r["J"]))
                for r in csv.DictReader(fh)]
