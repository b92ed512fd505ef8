"""Return moments, covariance factorisation and the standard normal quantile."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import JumpVarError, NotPositiveDefiniteError
from .marketdata import ReturnSeries

__all__ = [
    "ModelParams",
    "cholesky_decompose",
    "normal_quantile",
    "sample_moments",
    "returns_matrix",
    "check_weights",
    "estimate_params",
]

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class ModelParams:
    """Per-day return moments for ``n`` assets plus portfolio weights.

    ``A`` is the lower-triangular Cholesky factor of ``Sigma``.
    """

    asset_ids: tuple
    mu: np.ndarray
    sigma: np.ndarray
    Sigma: np.ndarray
    A: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for name in ("mu", "sigma", "Sigma", "A", "weights"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "asset_ids", tuple(self.asset_ids))
        n = self.mu.size
        if self.sigma.shape != (n,) or self.Sigma.shape != (n, n) or self.A.shape != (n, n):
            raise JumpVarError("inconsistent parameter shapes")
        check_weights(self.weights, n)

    @property
    def n_assets(self) -> int:
        return self.mu.size

    @classmethod
    def from_covariance(cls, mu, Sigma, weights=None, asset_ids=None) -> "ModelParams":
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
        n = mu.size
        A = cholesky_decompose(Sigma)
        w = np.full(n, 1.0 / n) if weights is None else weights
        ids = tuple(asset_ids) if asset_ids is not None else tuple(f"asset{i}" for i in range(n))
        return cls(ids, mu, np.sqrt(np.diag(Sigma)), Sigma, A, w)

    def to_dict(self) -> dict:
        return {
            "asset_ids": list(self.asset_ids),
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "Sigma": self.Sigma.tolist(),
            "A": self.A.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(d["asset_ids"], d["mu"], d["sigma"], d["Sigma"], d["A"], d["weights"])


def check_weights(w, n: int) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (n,):
        raise JumpVarError(f"expected {n} weights, got shape {w.shape}")
    if abs(math.fsum(w) - 1.0) > 1e-12:
        raise JumpVarError(f"weights must sum to 1, got {math.fsum(w)!r}")
    return w


def cholesky_decompose(Sigma, tol: float = 1e-12) -> np.ndarray:
    """Lower-triangular ``A`` with ``A @ A.T == Sigma``.

    A pivot is rejected when it is not above ``tol`` times the largest diagonal
    entry; the error carries the 0-based pivot index.
    """
    S = np.asarray(Sigma, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise JumpVarError("covariance must be square")
    if not np.allclose(S, S.T, rtol=0, atol=1e-14 * max(1.0, np.max(np.abs(S), initial=0.0))):
        raise JumpVarError("covariance must be symmetric")
    n = S.shape[0]
    scale = np.max(np.diag(S), initial=0.0)
    A = np.zeros_like(S)
    for j in range(n):
        pivot = S[j, j] - A[j, :j] @ A[j, :j]
        if not pivot > tol * scale:
            raise NotPositiveDefiniteError(j, float(pivot))
        A[j, j] = math.sqrt(pivot)
        for i in range(j + 1, n):
            A[i, j] = (S[i, j] - A[i, :j] @ A[j, :j]) / A[j, j]
    return A


def normal_quantile(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise JumpVarError(f"quantile level must lie in (0, 1), got {p}")
    return _STD_NORMAL.inv_cdf(p)


def returns_matrix(panel) -> tuple[tuple, np.ndarray]:
    """Stack return series column-wise; accepts ReturnSeries objects or a 2-D array."""
    if isinstance(panel, np.ndarray):
        R = np.atleast_2d(panel.T).T if panel.ndim == 1 else panel
        return tuple(f"asset{i}" for i in range(R.shape[1])), np.asarray(R, dtype=float)
    panel = list(panel)
    if not panel:
        raise JumpVarError("empty return panel")
    lengths = {len(r) for r in panel}
    if len(lengths) != 1:
        raise JumpVarError(f"return series have unequal lengths {sorted(lengths)}")
    ids = tuple(r.asset_id if isinstance(r, ReturnSeries) else f"asset{i}" for i, r in enumerate(panel))
    cols = [r.returns if isinstance(r, ReturnSeries) else np.asarray(r, dtype=float) for r in panel]
    return ids, np.column_stack(cols)


def sample_moments(R) -> tuple[np.ndarray, np.ndarray]:
    """Column means and sample covariance (``n - 1`` denominator) of a T x n matrix."""
    R = np.asarray(R, dtype=float)
    if R.shape[0] < 2:
        raise JumpVarError("need at least 2 observations for sample moments")
    mu = R.mean(axis=0)
    X = R - mu
    return mu, (X.T @ X) / (R.shape[0] - 1)


def estimate_params(panel, weights=None) -> ModelParams:
    """Sample moments of a return panel, factorised for simulation.

    ``weights=None`` gives the equally weighted portfolio.
    """
    ids, R = returns_matrix(panel)
    mu, Sigma = sample_moments(R)
    Sigma = 0.5 * (Sigma + Sigma.T)
    return ModelParams.from_covariance(mu, Sigma, weights, ids)
