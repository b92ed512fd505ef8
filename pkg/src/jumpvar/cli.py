"""Command line entry point: ``jumpvar <subcommand>``.

Every subcommand accepts ``--config run.json``; explicit flags override the
keys loaded from it.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import JumpVarError
from .estimation import ModelParams
from .levy import LevyModel
from .pipeline import (
    RunConfig,
    adjust_all,
    backtest_all,
    detect_all,
    estimate_all,
    ingest,
    read_jumps_csv,
    run_pipeline,
    simulate_summary,
    var_all,
    write_adjusted_csv,
    write_json,
    write_jump_profile_csv,
    write_jumps_csv,
    write_var_csv,
    fmt,
)
from .marketdata import write_panel
from .simulation import SimConfig, simulate_paths
from .synthetic import generate_synthetic, write_truth

log = logging.getLogger("jumpvar")

# flag dest -> RunConfig key
_KEYS = {
    "input": "input", "out": "output_dir", "alpha": "alpha", "penalty": "penalty",
    "min_seg_len": "min_seg_len", "min_window": "min_window", "weights": "weights", "levy": "levy",
    "seed": "seed", "paths": "sim_paths", "horizon": "sim_horizon", "lags": "dq_lags",
}


def _weights(text):
    return [float(x) for x in text.split(",")]


def _levy_arg(value):
    if value is None or isinstance(value, dict):
        return value
    return json.loads(Path(value).read_text())


def _config(args) -> RunConfig:
    data = RunConfig.load(args.config).to_dict() if args.config else {}
    for dest, key in _KEYS.items():
        v = getattr(args, dest, None)
        if v is not None:
            data[key] = v
    if "levy" in data:
        data["levy"] = _levy_arg(data["levy"])
    return RunConfig.from_dict(data)


def _outdir(cfg) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _jumps(args, cfg, panel):
    if getattr(args, "jumps", None):
        return read_jumps_csv(args.jumps, panel)
    return detect_all(panel, cfg.changepoint)


def cmd_ingest(args):
    cfg = _config(args)
    panel = ingest(cfg.input)
    path = _outdir(cfg) / "panel.csv"
    write_panel(path, panel)
    log.info("wrote %s (%d dates, %d assets)", path, len(panel[0]), len(panel))


def cmd_detect(args):
    cfg = _config(args)
    panel = ingest(cfg.input)
    jumps = detect_all(panel, cfg.changepoint)
    write_jumps_csv(_outdir(cfg) / "jumps.csv", panel, jumps)


def cmd_adjust(args):
    cfg = _config(args)
    panel = ingest(cfg.input)
    profiles, adjusted = adjust_all(panel, _jumps(args, cfg, panel))
    out = _outdir(cfg)
    write_adjusted_csv(out / "adjusted_prices.csv", adjusted)
    write_jump_profile_csv(out / "jump_profile.csv", profiles)


def cmd_estimate(args):
    cfg = _config(args)
    panel = ingest(cfg.input)
    if args.raw:
        params, window = estimate_all(panel, cfg.weights, source="raw")
    else:
        _, adjusted = adjust_all(panel, _jumps(args, cfg, panel))
        params, window = estimate_all(adjusted, cfg.weights)
    write_json(_outdir(cfg) / "params.json", {**params.to_dict(), "window": window})


def cmd_var(args):
    cfg = _config(args).validate()
    panel = ingest(cfg.input)
    profiles, _ = adjust_all(panel, _jumps(args, cfg, panel))
    write_var_csv(_outdir(cfg) / "var_series.csv", var_all(panel, profiles, cfg))


def cmd_backtest(args):
    cfg = _config(args).validate()
    panel = ingest(cfg.input)
    profiles, _ = adjust_all(panel, _jumps(args, cfg, panel))
    var = var_all(panel, profiles, cfg)
    write_json(_outdir(cfg) / "backtest.json", backtest_all(panel, var, profiles, cfg))


def cmd_simulate(args):
    cfg = _config(args)
    params = ModelParams.from_dict(json.loads(Path(args.params).read_text()))
    levy = LevyModel.from_dict(cfg.levy) if cfg.levy else None
    S0 = np.array(args.s0 if args.s0 else [1.0] * params.n_assets, dtype=float)
    out = _outdir(cfg)
    summary = simulate_summary(params, levy, S0, cfg.sim_paths, cfg.sim_horizon, cfg.seed, cfg.alpha)
    write_json(out / "ensemble_summary.json", summary)
    if args.paths_csv:
        sim = SimConfig(args.paths_csv, cfg.sim_horizon, params, S0, cfg.seed, levy,
                        steps_per_day=args.steps_per_day, keep_paths=True)
        ens = simulate_paths(sim)
        with (out / "paths.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["path", "time"] + list(params.asset_ids))
            for p in range(ens.n_paths):
                for k, t in enumerate(ens.times):
                    w.writerow([p, fmt(t)] + [fmt(x) for x in ens.paths[p, k]])


def cmd_run(args):
    cfg = _config(args)
    paths = run_pipeline(cfg)
    for name, p in paths.items():
        log.info("%s: %s", name, p)


def cmd_synth(args):
    scenario = json.loads(Path(args.scenario).read_text())
    panel, truth = generate_synthetic(scenario, args.seed)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    write_panel(out / "prices.csv", panel)
    write_truth(out / "truth.csv", truth)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jumpvar", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_, data=True, detect=False, var=False):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="output directory")
        if data:
            sp.add_argument("--input", help="wide price CSV")
        if detect:
            sp.add_argument("--penalty", type=float)
            sp.add_argument("--min-seg-len", dest="min_seg_len", type=int)
            sp.add_argument("--jumps", help="reuse jumps.csv / jump_profile.csv instead of detecting")
        if var:
            sp.add_argument("--alpha", type=float)
            sp.add_argument("--min-window", dest="min_window", type=int)
            sp.add_argument("--weights", type=_weights, help="comma-separated portfolio weights")
            sp.add_argument("--levy", help="Levy model JSON file")
        return sp

    add("ingest", cmd_ingest, "normalise a price CSV onto a gap-free calendar")
    add("detect-jumps", cmd_detect, "detect jump days", detect=True)
    add("adjust", cmd_adjust, "remove detected jumps from price levels", detect=True)
    sp = add("estimate", cmd_estimate, "estimate return moments and Cholesky factor", detect=True)
    sp.add_argument("--weights", type=_weights)
    sp.add_argument("--raw", action="store_true", help="estimate on raw rather than jump-removed prices")
    add("var", cmd_var, "daily VaR with and without jumps", detect=True, var=True)
    sp = add("backtest", cmd_backtest, "DQ backtest, RMSE and jump diagnostics", detect=True, var=True)
    sp.add_argument("--lags", type=int)
    sp = add("simulate", cmd_simulate, "simulate the jump-diffusion model", data=False)
    sp.add_argument("--params", required=True, help="params.json from `estimate`")
    sp.add_argument("--levy", help="Levy model JSON file")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--paths", type=int)
    sp.add_argument("--horizon", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--s0", type=_weights, help="comma-separated initial prices (default 1)")
    sp.add_argument("--paths-csv", dest="paths_csv", type=int, default=0,
                    help="also write this many full paths to paths.csv")
    sp.add_argument("--steps-per-day", dest="steps_per_day", type=int, default=1)
    sp = add("run", cmd_run, "full pipeline", detect=False, var=True)
    sp.add_argument("--penalty", type=float)
    sp.add_argument("--min-seg-len", dest="min_seg_len", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--paths", type=int)
    sp.add_argument("--horizon", type=float)
    sp.add_argument("--lags", type=int)
    sp = sub.add_parser("synth", help="generate a synthetic price panel with known jumps")
    sp.set_defaults(func=cmd_synth)
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except (JumpVarError, FileNotFoundError) as exc:
        print(f"jumpvar {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
