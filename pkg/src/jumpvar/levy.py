"""Value-at-Risk under a multi-asset geometric Levy model with compound-Poisson jumps.

VaR values are price-relative levels: the factor by which the portfolio value
(weights applied to log prices) falls below its starting value with
probability ``1 - alpha`` over ``t`` days.

Jump component ``k`` moves asset ``i`` by the relative amount
``gamma_ik = c_ik * zeta`` where ``zeta`` is the component's jump size.  The
jump contribution to expected VaR is, per unit time,

    lambda_k * E[ prod_i (1 + c_ik zeta)^w_i - 1 - sum_i w_i c_ik zeta ]

which vanishes for a single asset and for equal loadings across assets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, JumpVarError, SupportError
from .estimation import ModelParams, check_weights, normal_quantile, sample_moments
from .jumps import JumpProfile, remove_jumps
from .marketdata import PriceSeries

__all__ = [
    "NormalJumps",
    "DoubleExponentialJumps",
    "PointMassJumps",
    "law_from_dict",
    "JumpComponent",
    "LevyModel",
    "gauss_legendre_expectation",
    "jump_correction_rate",
    "var_single_asset",
    "var_from_moments",
    "var_portfolio_no_jump_terms",
    "var_general",
    "VaRSeries",
    "expected_var_series",
    "VARIANTS",
]

VARIANTS = ("with-jumps", "without-jumps", "general-levy")


@lru_cache(maxsize=32)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


class NormalJumps:
    kind = "normal"

    def __init__(self, mean: float, std: float, width: float = 8.0):
        if not std > 0:
            raise JumpVarError(f"normal jump law needs std > 0, got {std}")
        self.mean, self.std, self.width = float(mean), float(std), float(width)

    def pieces(self):
        return [(self.mean - self.width * self.std, self.mean + self.width * self.std)]

    def pdf(self, z):
        u = (np.asarray(z) - self.mean) / self.std
        return np.exp(-0.5 * u * u) / (self.std * math.sqrt(2.0 * math.pi))

    def draw(self, rng, size):
        return rng.normal(self.mean, self.std, size)

    def params(self):
        return {"mean": self.mean, "std": self.std}


class DoubleExponentialJumps:
    """Asymmetric Laplace: up-jumps ~ Exp(eta_up) with probability ``p``, down-jumps ~ -Exp(eta_down)."""

    kind = "double-exponential"

    def __init__(self, p: float, eta_up: float, eta_down: float, tail: float = 1e-10):
        if not (0.0 <= p <= 1.0) or not eta_up > 0 or not eta_down > 0:
            raise JumpVarError("double-exponential law needs 0 <= p <= 1 and eta_up, eta_down > 0")
        self.p, self.eta_up, self.eta_down, self.tail = float(p), float(eta_up), float(eta_down), tail

    def pieces(self):
        out = []
        if self.p < 1.0:
            out.append((-math.log((1.0 - self.p) / self.tail) / self.eta_down, 0.0))
        if self.p > 0.0:
            out.append((0.0, math.log(self.p / self.tail) / self.eta_up))
        return [(a, b) for a, b in out if b > a]

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        up = self.p * self.eta_up * np.exp(-self.eta_up * np.abs(z))
        down = (1.0 - self.p) * self.eta_down * np.exp(-self.eta_down * np.abs(z))
        return np.where(z >= 0, up, down)

    def draw(self, rng, size):
        up = rng.random(size) < self.p
        mag = rng.exponential(1.0, size)
        return np.where(up, mag / self.eta_up, -mag / self.eta_down)

    def params(self):
        return {"p": self.p, "eta_up": self.eta_up, "eta_down": self.eta_down}


class PointMassJumps:
    kind = "point-mass"

    def __init__(self, value: float):
        self.value = float(value)

    def pieces(self):
        return [(self.value, self.value)]

    def draw(self, rng, size):
        return np.full(size, self.value)

    def params(self):
        return {"value": self.value}


_LAWS = {cls.kind: cls for cls in (NormalJumps, DoubleExponentialJumps, PointMassJumps)}


def law_from_dict(d: dict):
    kind = d.get("type")
    if kind not in _LAWS:
        raise JumpVarError(f"unknown jump law {kind!r}; expected one of {sorted(_LAWS)}")
    return _LAWS[kind](**d.get("params", {}))


def _support(law) -> tuple[float, float]:
    pieces = law.pieces()
    return pieces[0][0], pieces[-1][1]


def gauss_legendre_expectation(g, law, nodes: int = 200, rtol: float = 1e-8,
                               atol: float = 1e-15, max_refinements: int = 6) -> float:
    """``E[g(zeta)]`` over the truncated jump law.

    Point masses are evaluated exactly.  Continuous laws use Gauss-Legendre on
    each smooth piece of the truncated support, doubling the node count until
    successive results agree to ``rtol`` (with an ``atol`` floor for integrands
    that vanish identically).
    """
    if isinstance(law, PointMassJumps):
        return float(np.asarray(g(np.array([law.value])))[0])
    if nodes < 2:
        raise JumpVarError("need at least 2 quadrature nodes")

    def integrate(k):
        x, wts = _leggauss(k)
        total = 0.0
        for a, b in law.pieces():
            half, mid = 0.5 * (b - a), 0.5 * (b + a)
            z = mid + half * x
            total += half * float(np.sum(wts * np.asarray(g(z)) * law.pdf(z)))
        return total

    prev = integrate(nodes)
    k = nodes
    for _ in range(max_refinements):
        k *= 2
        cur = integrate(k)
        if abs(cur - prev) <= rtol * abs(cur) + atol:
            return cur
        prev = cur
    raise ConvergenceError(f"quadrature did not converge after {max_refinements} refinements ({k} nodes)")


@dataclass(frozen=True)
class JumpComponent:
    """One compound-Poisson source with intensity in jumps/day and per-asset loadings."""

    intensity: float
    law: object
    loadings: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "loadings", tuple(float(c) for c in self.loadings))
        if not self.intensity >= 0 or math.isinf(self.intensity):
            raise JumpVarError(f"jump intensity must be finite and >= 0, got {self.intensity}")

    def check_support(self) -> None:
        lo, hi = _support(self.law)
        for i, c in enumerate(self.loadings):
            if not (1.0 + c * lo > 0 and 1.0 + c * hi > 0):
                raise SupportError(
                    f"loading c[{i}] = {c} gives 1 + c*zeta <= 0 on the truncated support [{lo:.6g}, {hi:.6g}]"
                )

    def sample_sizes(self, rng, size: int) -> tuple[np.ndarray, int]:
        """Draw ``size`` jump sizes from the truncated law, rejecting draws that break positivity."""
        lo, hi = _support(self.law)
        c = np.asarray(self.loadings)
        out = np.empty(size)
        filled, rejected = 0, 0
        while filled < size:
            z = self.law.draw(rng, size - filled)
            ok = (z >= lo) & (z <= hi)
            if c.size:
                ok &= np.all(1.0 + np.outer(z, c) > 0, axis=1)
            good = z[ok]
            out[filled:filled + good.size] = good
            filled += good.size
            rejected += int(z.size - good.size)
        return out, rejected

    def mean_size(self, **quad) -> float:
        return gauss_legendre_expectation(lambda z: z, self.law, **quad)

    def to_dict(self) -> dict:
        return {"lambda": self.intensity, "law": {"type": self.law.kind, "params": self.law.params()},
                "loadings": list(self.loadings)}


@dataclass(frozen=True)
class LevyModel:
    components: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        sizes = {len(c.loadings) for c in self.components}
        if len(sizes) > 1:
            raise JumpVarError(f"components disagree on number of assets: {sorted(sizes)}")

    @property
    def n_assets(self) -> int | None:
        return len(self.components[0].loadings) if self.components else None

    def check_support(self) -> None:
        for c in self.components:
            c.check_support()

    @classmethod
    def from_dict(cls, d: dict) -> "LevyModel":
        comps = []
        for c in d.get("components", []):
            comps.append(JumpComponent(float(c["lambda"]), law_from_dict(c["law"]), tuple(c["loadings"])))
        return cls(tuple(comps))

    def to_dict(self) -> dict:
        return {"components": [c.to_dict() for c in self.components]}


def jump_correction_rate(levy: LevyModel, weights, **quad) -> float:
    """Per-day log correction ``sum_k lambda_k E[(prod (1+c zeta)^w) - 1 - w.c zeta]``."""
    w = np.asarray(weights, dtype=float)
    total = 0.0
    for comp in levy.components:
        c = np.asarray(comp.loadings)
        if c.shape != w.shape:
            raise JumpVarError(f"loadings have {c.size} entries for {w.size} weights")
        comp.check_support()
        if comp.intensity == 0.0:
            continue

        def integrand(z, c=c):
            z = np.asarray(z, dtype=float)
            cz = np.multiply.outer(z, c)
            return np.expm1(np.log1p(cz) @ w) - cz @ w

        total += comp.intensity * gauss_legendre_expectation(integrand, comp.law, **quad)
    return total


def _check_horizon(t, alpha):
    if not t > 0:
        raise JumpVarError(f"horizon must be > 0 days, got {t}")
    if not 0.0 < alpha < 1.0:
        raise JumpVarError(f"alpha must lie in (0, 1), got {alpha}")


def var_single_asset(mu: float, sigma: float, t: float, alpha: float = 0.99) -> float:
    _check_horizon(t, alpha)
    if sigma < 0:
        raise JumpVarError("sigma must be >= 0")
    z = normal_quantile(1.0 - alpha)
    return math.exp((mu - 0.5 * sigma * sigma) * t + sigma * z * math.sqrt(t))


def var_from_moments(mu, sigma, Sigma, weights, t: float, alpha: float = 0.99) -> float:
    """Jump-free portfolio VaR level from mean, std and covariance vectors."""
    _check_horizon(t, alpha)
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    w = np.asarray(weights, dtype=float)
    var_p = float(w @ Sigma @ w)
    if var_p < 0:
        if var_p > -1e-15 * max(1.0, float(np.max(np.abs(Sigma)))):
            var_p = 0.0
        else:
            raise JumpVarError(f"portfolio variance is negative ({var_p:.3g})")
    drift = float(w @ (mu - 0.5 * sigma * sigma))
    return math.exp(drift * t + math.sqrt(t * var_p) * normal_quantile(1.0 - alpha))


def var_portfolio_no_jump_terms(params: ModelParams, t: float, alpha: float = 0.99) -> float:
    return var_from_moments(params.mu, params.sigma, params.Sigma, params.weights, t, alpha)


def var_general(params: ModelParams, levy: LevyModel, t: float, alpha: float = 0.99, **quad) -> float:
    """Expected VaR including the jump-correction factor of every component."""
    base = var_portfolio_no_jump_terms(params, t, alpha)
    if levy is None or not levy.components:
        return base
    return base * math.exp(t * jump_correction_rate(levy, params.weights, **quad))


@dataclass(frozen=True)
class VaRSeries:
    series_id: str
    dates: np.ndarray
    t: np.ndarray
    values: np.ndarray
    alpha: float
    variant: str

    def __post_init__(self):
        object.__setattr__(self, "dates", np.asarray(self.dates, dtype="datetime64[D]"))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if not 0.0 < self.alpha < 1.0:
            raise JumpVarError("alpha must lie in (0, 1)")
        if self.variant not in VARIANTS:
            raise JumpVarError(f"unknown variant {self.variant!r}")
        if np.any(self.values <= 0):
            raise JumpVarError("VaR levels must be positive")

    def __len__(self):
        return self.values.size


def _profiles_for(panel, profiles):
    if profiles is None:
        return [None] * len(panel)
    if isinstance(profiles, dict):
        return [profiles.get(s.asset_id) for s in panel]
    profiles = list(profiles)
    if len(profiles) != len(panel):
        raise JumpVarError("need one jump profile per asset")
    return profiles


def expected_var_series(panel: Sequence[PriceSeries], profiles=None, weights=None, alpha: float = 0.99,
                        variant: str = "with-jumps", min_window: int = 30, levy: LevyModel | None = None,
                        series_id: str | None = None, **quad) -> VaRSeries:
    """Daily VaR levels with expanding-window moments.

    At price index ``k`` (``k >= min_window``) the moments use the first ``k``
    log returns and the horizon is ``t = k`` trading days since the first
    price.  ``with-jumps`` and ``general-levy`` estimate on jump-removed prices;
    ``without-jumps`` uses the raw prices.
    """
    if variant not in VARIANTS:
        raise JumpVarError(f"unknown variant {variant!r}")
    if variant == "general-levy" and levy is None:
        raise JumpVarError("general-levy variant needs a Levy model")
    panel = list(panel)
    if isinstance(panel[0], PriceSeries) is False:
        raise JumpVarError("panel must hold PriceSeries")
    dates = panel[0].dates
    for s in panel[1:]:
        if not np.array_equal(s.dates, dates):
            raise JumpVarError("panel series are not aligned")
    n = len(panel)
    w = np.full(n, 1.0 / n) if weights is None else check_weights(weights, n)

    used = []
    for s, prof in zip(panel, _profiles_for(panel, profiles)):
        if variant != "without-jumps" and prof is not None and len(prof):
            s = remove_jumps(s, prof)
        used.append(s)
    P = np.column_stack([s.prices for s in used])
    if np.isnan(P).any():
        raise JumpVarError("panel has gaps; interpolate first")
    R = np.log(P[1:] / P[:-1])
    T = R.shape[0]
    if min_window < 2:
        raise JumpVarError("min_window must be >= 2")
    if T < min_window:
        raise JumpVarError(f"insufficient history: {T} returns < min_window {min_window}")

    rate = 0.0
    if variant == "general-levy":
        rate = jump_correction_rate(levy, w, **quad)

    ks = np.arange(min_window, T + 1)
    values = np.empty(ks.size)
    for idx, k in enumerate(ks):
        mu, Sigma = sample_moments(R[:k])
        sigma = np.sqrt(np.diag(Sigma))
        values[idx] = var_from_moments(mu, sigma, Sigma, w, float(k), alpha) * math.exp(rate * k)
    sid = series_id or (panel[0].asset_id if n == 1 else "portfolio")
    return VaRSeries(sid, dates[ks], ks, values, alpha, variant)
