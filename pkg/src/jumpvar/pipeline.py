"""End-to-end orchestration and artifact files.

Numbers in derived artifacts are written with 9 significant digits so that
outputs are byte-stable; the normalised price panel is written with
round-trip precision so later stages can restart from it.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from importlib import resources

import numpy as np

from . import __version__
from .backtest import backtest_report, jump_diagnostics
from .changepoint import ChangepointConfig, JumpDays, detect_jumps
from .errors import JumpVarError, PipelineError
from .estimation import estimate_params, check_weights
from .jumps import JumpProfile, compute_jump_profile, remove_jumps
from .levy import LevyModel, expected_var_series, var_general, var_portfolio_no_jump_terms
from .marketdata import PriceSeries, align_panel, load_prices, log_returns, write_panel
from .simulation import SimConfig, portfolio_levels, simulate_paths

__all__ = [
    "RunConfig",
    "fmt",
    "write_json",
    "ingest",
    "detect_all",
    "adjust_all",
    "estimate_all",
    "var_all",
    "simulate_summary",
    "backtest_all",
    "write_jumps_csv",
    "read_jumps_csv",
    "write_jump_profile_csv",
    "write_adjusted_csv",
    "write_var_csv",
    "run_pipeline",
    "bundle_config_path",
]

QUANTILES = (0.01, 0.05, 0.5, 0.95, 0.99)


@dataclass
class RunConfig:
    input: str = ""
    output_dir: str = "out"
    alpha: float = 0.99
    penalty: float | None = None
    min_seg_len: int = 1
    min_window: int = 30
    weights: list | None = None
    levy: dict | None = None
    seed: int = 0
    sim_paths: int = 100_000
    sim_horizon: float = 1.0
    dq_lags: int = 4

    def validate(self) -> "RunConfig":
        if not self.input:
            raise JumpVarError("config: input path is required")
        if not 0.0 < self.alpha < 1.0:
            raise JumpVarError(f"config: alpha must lie in (0, 1), got {self.alpha}")
        if self.penalty is not None and not self.penalty >= 0:
            raise JumpVarError("config: penalty must be >= 0")
        if self.min_seg_len < 1:
            raise JumpVarError("config: min_seg_len must be >= 1")
        if self.min_window < 2:
            raise JumpVarError("config: min_window must be >= 2")
        if self.sim_paths < 0 or not self.sim_horizon > 0:
            raise JumpVarError("config: sim_paths must be >= 0 and sim_horizon > 0")
        if self.dq_lags < 1:
            raise JumpVarError("config: dq_lags must be >= 1")
        if self.levy is not None:
            LevyModel.from_dict(self.levy)
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise JumpVarError(f"config: unknown keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        """Read a JSON config; relative ``input``/``levy`` paths resolve against its folder."""
        return cls.from_dict(resolve_config_paths(json.loads(Path(path).read_text()), Path(path).parent))

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def changepoint(self) -> ChangepointConfig:
        return ChangepointConfig(self.penalty, self.min_seg_len)

    @property
    def levy_model(self) -> LevyModel | None:
        return None if self.levy is None else LevyModel.from_dict(self.levy)


def bundle_config_path() -> Path:
    """Path of the run config for the synthetic bundle shipped with the package."""
    return Path(str(resources.files("jumpvar") / "data" / "bundle_config.json"))


def resolve_config_paths(data: dict, base: Path) -> dict:
    data = dict(data)
    if data.get("input") and not Path(data["input"]).is_absolute():
        data["input"] = str(base / data["input"])
    if isinstance(data.get("levy"), str):
        levy = Path(data["levy"])
        data["levy"] = json.loads((levy if levy.is_absolute() else base / levy).read_text())
    return data


def fmt(x) -> str:
    x = float(x)
    return "" if math.isnan(x) else f"{x:.9g}"


def _rounded(obj):
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _rounded(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if not math.isfinite(x) else float(f"{x:.9g}")
    if isinstance(obj, np.datetime64):
        return str(obj)
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_rounded(obj), indent=2) + "\n")


def _write_rows(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _staged(stage, fn, *args, asset=None, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except (JumpVarError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        date = getattr(exc, "date", None)
        raise PipelineError(stage, exc, asset=asset, date=date) from exc


# ---------------------------------------------------------------- stages


def ingest(path) -> list[PriceSeries]:
    panel = _staged("ingest", load_prices, path)
    return _staged("ingest", align_panel, panel)


def detect_all(panel, cfg: ChangepointConfig) -> dict[str, JumpDays]:
    return {s.asset_id: _staged("detect-jumps", detect_jumps, s, cfg, asset=s.asset_id) for s in panel}


def adjust_all(panel, jumps: dict):
    profiles, adjusted = {}, []
    for s in panel:
        jd = jumps.get(s.asset_id, ())
        prof = _staged("adjust", compute_jump_profile, s, jd, asset=s.asset_id)
        profiles[s.asset_id] = prof
        adjusted.append(_staged("adjust", remove_jumps, s, prof, asset=s.asset_id))
    return profiles, adjusted


def estimate_all(panel, weights=None, source="jump-removed") -> tuple:
    rets = [log_returns(s) for s in panel]
    params = _staged("estimate", estimate_params, rets, weights)
    window = {"start": str(rets[0].dates[0]), "end": str(rets[0].dates[-1]), "n_obs": len(rets[0]),
              "source": source}
    return params, window


def _portfolio_weights(panel, weights):
    n = len(panel)
    return np.full(n, 1.0 / n) if weights is None else check_weights(weights, n)


def var_all(panel, profiles: dict, cfg: RunConfig) -> dict:
    """Per-asset and portfolio VaR series keyed by series id, each a dict of variants."""
    out = {}
    for s in panel:
        prof = profiles.get(s.asset_id)
        out[s.asset_id] = {
            variant: _staged("var", expected_var_series, [s], [prof], None, cfg.alpha, variant,
                             cfg.min_window, asset=s.asset_id)
            for variant in ("with-jumps", "without-jumps")
        }
    levy = cfg.levy_model
    if len(panel) >= 2 or levy is not None:
        w = _portfolio_weights(panel, cfg.weights)
        profs = [profiles.get(s.asset_id) for s in panel]
        variants = ["with-jumps", "without-jumps"] + (["general-levy"] if levy is not None else [])
        out["portfolio"] = {
            v: _staged("var", expected_var_series, panel, profs, w, cfg.alpha, v, cfg.min_window, levy,
                       "portfolio", asset="portfolio")
            for v in variants
        }
    return out


def simulate_summary(params, levy: LevyModel | None, S0, n_paths: int, horizon: float, seed: int,
                     alpha: float) -> dict:
    cfg = SimConfig(n_paths, horizon, params, S0, seed, levy)
    ens = _staged("simulate", simulate_paths, cfg)
    rel = ens.terminal / ens.S0
    level = portfolio_levels(ens, params.weights)
    var_level = var_general(params, levy, horizon, alpha) if levy else var_portfolio_no_jump_terms(params, horizon, alpha)
    viol = float(np.count_nonzero(level <= var_level)) / n_paths
    assets = {}
    for i, a in enumerate(params.asset_ids):
        assets[a] = {"mean": float(rel[:, i].mean()), "std": float(rel[:, i].std(ddof=1)) if n_paths > 1 else 0.0,
                     "quantiles": dict(zip(map(str, QUANTILES), np.quantile(rel[:, i], QUANTILES).tolist()))}
    hist = {}
    for k in range(ens.jump_counts.shape[1]):
        vals, cnt = np.unique(ens.jump_counts[:, k], return_counts=True)
        hist[f"component{k}"] = {str(int(v)): int(c) for v, c in zip(vals, cnt)}
    return {
        "n_paths": n_paths, "horizon": horizon, "seed": seed, "rejections": ens.rejections,
        "assets": assets,
        "portfolio": {"weights": params.weights.tolist(), "mean": float(level.mean()),
                      "quantiles": dict(zip(map(str, QUANTILES), np.quantile(level, QUANTILES).tolist())),
                      "var_level": var_level, "violation_rate": viol,
                      "violation_std_error": math.sqrt(viol * (1 - viol) / n_paths)},
        "jump_count_histogram": hist,
    }


def backtest_all(panel, var: dict, profiles: dict, cfg: RunConfig) -> dict:
    assets = {}
    for s in panel:
        v = var[s.asset_id]
        rep = _staged("backtest", backtest_report, s, v["with-jumps"], v["without-jumps"],
                      profiles.get(s.asset_id), None, cfg.dq_lags, asset=s.asset_id)
        assets[s.asset_id] = rep.to_dict()
    diag = jump_diagnostics(profiles, {s.asset_id: var[s.asset_id]["with-jumps"] for s in panel},
                            {s.asset_id: var[s.asset_id]["without-jumps"] for s in panel})
    out = {"alpha": cfg.alpha, "lags": cfg.dq_lags, "assets": assets, "rho_mcj_delta": diag["rho_mcj_delta"]}
    if "portfolio" in var:
        w = _portfolio_weights(panel, cfg.weights)
        v = var["portfolio"]
        rep = _staged("backtest", backtest_report, panel, v["with-jumps"], v["without-jumps"], None, w,
                      cfg.dq_lags, asset="portfolio")
        d = rep.to_dict()
        d.pop("mcj")
        out["portfolio"] = d
    return out


# ---------------------------------------------------------------- files


def write_jumps_csv(path, panel, jumps: dict) -> None:
    rows = []
    for s in panel:
        for j in jumps[s.asset_id].jpt_indices:
            rows.append([s.asset_id, str(s.dates[j]), j])
    _write_rows(path, ["asset", "jump_date", "jump_index"], rows)


def read_jumps_csv(path, panel) -> dict[str, JumpDays]:
    """Jump indices per asset from ``jumps.csv`` or ``jump_profile.csv``; dates are cross-checked."""
    by_id = {s.asset_id: s for s in panel}
    found = {a: [] for a in by_id}
    with Path(path).open(newline="") as fh:
        for lineno, r in enumerate(csv.DictReader(fh), start=2):
            a = r["asset"]
            if a not in by_id:
                raise JumpVarError(f"{path} line {lineno}: unknown asset {a!r}")
            j = int(r["jump_index"])
            if j >= len(by_id[a]) or str(by_id[a].dates[j]) != r["jump_date"]:
                raise JumpVarError(f"{path} line {lineno}: jump index {j} does not match date {r['jump_date']}")
            found[a].append(j)
    return {a: JumpDays.from_jpt(sorted(js), len(by_id[a])) for a, js in found.items()}


def write_jump_profile_csv(path, profiles: dict) -> None:
    rows = []
    for a, p in profiles.items():
        for k in range(len(p)):
            rows.append([a, str(p.jump_dates[k]), p.jpt[k], fmt(p.J[k]), fmt(p.CJ[k])])
    _write_rows(path, ["asset", "jump_date", "jump_index", "J", "CJ"], rows)


def write_adjusted_csv(path, adjusted) -> None:
    write_panel(path, adjusted, fmt=fmt)


def write_var_csv(path, var: dict) -> None:
    general = any("general-levy" in v for v in var.values())
    header = ["asset", "date", "t", "var_with_jumps", "var_without_jumps"] + (["var_general_levy"] if general else [])
    rows = []
    for sid, v in var.items():
        w, o, g = v["with-jumps"], v["without-jumps"], v.get("general-levy")
        for k in range(len(w)):
            row = [sid, str(w.dates[k]), int(w.t[k]), fmt(w.values[k]), fmt(o.values[k])]
            if general:
                row.append(fmt(g.values[k]) if g is not None else "")
            rows.append(row)
    _write_rows(path, header, rows)


def run_pipeline(config: RunConfig) -> dict:
    """Run every stage and write all artifacts into ``config.output_dir``.

    Returns a mapping of artifact name to path.
    """
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    panel = ingest(config.input)
    paths["panel"] = out / "panel.csv"
    write_panel(paths["panel"], panel)

    jumps = detect_all(panel, config.changepoint)
    paths["jumps"] = out / "jumps.csv"
    write_jumps_csv(paths["jumps"], panel, jumps)

    profiles, adjusted = adjust_all(panel, jumps)
    paths["adjusted_prices"] = out / "adjusted_prices.csv"
    write_adjusted_csv(paths["adjusted_prices"], adjusted)
    paths["jump_profile"] = out / "jump_profile.csv"
    write_jump_profile_csv(paths["jump_profile"], profiles)

    params, window = estimate_all(adjusted, config.weights)
    paths["params"] = out / "params.json"
    write_json(paths["params"], {**params.to_dict(), "window": window})

    var = var_all(panel, profiles, config)
    paths["var_series"] = out / "var_series.csv"
    write_var_csv(paths["var_series"], var)

    if config.sim_paths > 0:
        S0 = np.array([s.prices[-1] for s in panel])
        summary = simulate_summary(params, config.levy_model, S0, config.sim_paths, config.sim_horizon,
                                   config.seed, config.alpha)
        paths["ensemble_summary"] = out / "ensemble_summary.json"
        write_json(paths["ensemble_summary"], summary)

    paths["backtest"] = out / "backtest.json"
    write_json(paths["backtest"], backtest_all(panel, var, profiles, config))

    echo = config.to_dict()
    echo.pop("output_dir")
    manifest = {
        "version": __version__,
        "config": echo,
        "input_sha256": _sha256(config.input),
        "outputs": {name: {"file": p.name, "sha256": _sha256(p)} for name, p in paths.items()},
    }
    paths["run_manifest"] = out / "run_manifest.json"
    Path(paths["run_manifest"]).write_text(json.dumps(manifest, indent=2) + "\n")
    return paths
