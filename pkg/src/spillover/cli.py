"""Command-line pipelines.

Every command reads one YAML config (all keys optional, defaults below),
writes CSV/SVG artifacts to the output directory and a ``manifest.yaml``
that echoes the fully resolved config. A manifest can be passed back as
``--config`` to reproduce the run.

Exit codes: 0 success, 1 runtime failure, 2 configuration error. Failures
print one line ``error class=<ErrorClass> message="..."`` on stderr.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import pandas as pd
import scipy
import yaml

from . import __version__, bvar, entrepreneur, ingest, irf, plotting, simulate
from .errors import ConfigError, ConfigPathMissing, SpilloverError
from .firmreg import (
    FIRM_CONTROLS,
    RegressionSpec,
    cumulative_specs,
    estimate_spec,
    format_table,
    local_projection,
    write_results_csv,
)
from .linalg import RngStream

OUTPUT_ENV = "SPILLOVER_OUTPUT_DIR"

_PANEL_VARIABLES = ["shock", "us_10y", "us_gdp", "embi", "policy_rate", "gdp", "investment"]

DEFAULTS = {
    "svar-panel": {
        "data": {"macro": None, "shock_variable": "shock", "start": None, "end": None, "countries": None},
        "simulate": {"months": 180, "with_shares": True},
        "var": {
            "variables": _PANEL_VARIABLES,
            "lags": 2,
            "include_constant": True,
            "prior": {"type": "normal-wishart", "overall_tightness": 0.1, "lag_decay": 1.0, "own_lag_mean": 1.0},
            "gibbs": {"iterations": 12000, "burn_in": 2000},
        },
        "irf": {"target_variable": "us_10y", "target_response": 0.5, "horizon": 48, "band_probs": [0.68, 0.90]},
        "split": {"low_embi": ["Chile", "Peru", "Mexico"], "high_embi": ["Brazil", "Indonesia", "Turkey", "South Africa"]},
        "shares": True,
        "plots": True,
    },
    "svar-country": {
        "data": {"macro": None, "shock_variable": "shock", "start": None, "end": None},
        "country": "Chile",
        "simulate": {"months": 180},
        "var": {
            "variables": _PANEL_VARIABLES,
            "lags": 6,
            "include_constant": True,
            "prior": {
                "type": "minnesota", "ar_coefficient": 0.8, "overall_tightness": 0.1,
                "cross_weight": 0.5, "lag_decay": 1.0,
            },
            "gibbs": {"iterations": 12000, "burn_in": 2000},
        },
        "irf": {"target_variable": "us_10y", "target_response": 0.5, "horizon": 48, "band_probs": [0.68, 0.90]},
        "plots": True,
    },
    "firm-reg": {
        "data": {"firms": None, "shock": None, "shock_events": None, "aggregates": None},
        "simulate": {"n_firms": 80, "n_quarters": 40, "beta": -0.4, "noise": 0.05},
        "leverage_def": "total",
        "tables": ["baseline", "alternative", "indicator_0", "indicator_1"],
        "clustering": ["firm", "time"],
        "winsorize": None,
    },
    "firm-lp": {
        "data": {"firms": None, "shock": None, "shock_events": None, "aggregates": None},
        "simulate": {"n_firms": 80, "n_quarters": 40, "beta": -0.4, "noise": 0.05},
        "leverage_def": "total",
        "horizons": 8,
        "clustering": ["firm"],
        "controls": list(FIRM_CONTROLS),
        "plots": True,
    },
    "model-sweep": {
        "params": {"alpha": 0.3, "beta": 0.95, "theta": 0.5, "k0": 1.0, "b0": 0.4, "r0": 0.05, "r1": 0.05},
        "rate_sweep": {"r1": [0.0, 0.3, 61], "b0_low": 0.2, "b0_high": 0.45},
        "debt_sweep": {"b0": [0.0, 0.8, 81], "theta_loose": 0.5, "theta_tight": 0.3},
        "theta_sweep": {"theta": [0.2, 0.8, 61], "b0": 0.6},
        "plots": True,
    },
    "verify-props": {
        "params": {"alpha": 0.3, "beta": 0.95, "theta": 0.5, "k0": 1.0, "b0": 0.6, "r0": 0.05, "r1": 0.05},
        "b0_pair": None,
        "kink_gap": 0.05,
        "step": 1e-5,
    },
}

PATH_KEYS = ("macro", "firms", "shock", "shock_events", "aggregates")


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(command: str, path=None, seed=None, output_dir=None) -> dict:
    """Resolve defaults <- file <- command-line overrides and validate paths."""
    user = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigPathMissing(f"config file not found: {p}")
        try:
            user = yaml.safe_load(p.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"unreadable config: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config must be a mapping")
    user.pop("run", None)  # manifests carry run metadata
    if user.get("command", command) != command:
        raise ConfigError(f"config is for command {user['command']!r}, not {command!r}")
    unknown = set(user) - set(DEFAULTS[command]) - {"command", "seed", "output_dir"}
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    cfg = _merge(DEFAULTS[command], user)
    cfg["command"] = command
    cfg["seed"] = int(seed if seed is not None else user.get("seed", 0))
    cfg["output_dir"] = str(output_dir or user.get("output_dir") or os.environ.get(OUTPUT_ENV) or f"spillover-out/{command}")
    for key in PATH_KEYS:
        val = cfg.get("data", {}).get(key)
        if val is not None and not Path(val).exists():
            raise ConfigPathMissing(f"data.{key} not found: {val}")
    return cfg


# ------------------------------------------------------------------ builders

def _var_spec(cfg: dict, seed: int) -> bvar.VarSpec:
    v = cfg["var"]
    prior_cfg = dict(v["prior"])
    kind = prior_cfg.pop("type")
    if kind == "normal-wishart":
        prior = bvar.NormalWishartPrior(**prior_cfg)
    elif kind == "minnesota":
        prior = bvar.MinnesotaPrior(**prior_cfg)
    else:
        raise ConfigError(f"unknown prior type {kind!r}")
    try:
        return bvar.VarSpec(
            tuple(v["variables"]), int(v["lags"]), bool(v["include_constant"]), prior,
            bvar.GibbsSettings(int(v["gibbs"]["iterations"]), int(v["gibbs"]["burn_in"])), seed,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _irf_spec(cfg: dict) -> irf.IrfSpec:
    i = cfg["irf"]
    return irf.IrfSpec(i["target_variable"], int(i["horizon"]), 0, float(i["target_response"]), tuple(i["band_probs"]))


def _macro_panel(cfg: dict, countries=None, with_shares=False):
    d = cfg["data"]
    if d.get("macro"):
        return ingest.load_macro_panel(d["macro"], d["shock_variable"], d.get("start"), d.get("end"), countries)
    sim = cfg.get("simulate", {})
    panel = simulate.simulate_macro_panel(
        countries=countries or simulate.PANEL_COUNTRIES, months=int(sim.get("months", 180)),
        seed=cfg["seed"], with_shares=with_shares,
    )
    return panel.window(d.get("start"), d.get("end"))


def _firm_data(cfg: dict):
    d = cfg["data"]
    if d.get("firms"):
        raw = ingest.load_firm_panel(d["firms"])
        if d.get("shock"):
            shock = ingest.load_quarterly_series(d["shock"])
        elif d.get("shock_events"):
            events = ingest.load_shock_events(d["shock_events"])
            shock = ingest.aggregate_shocks(ingest.surprises_from_events(events), target="quarter")
        else:
            raise ConfigError("data.firms requires data.shock or data.shock_events")
        aggregates = None
        if d.get("aggregates"):
            agg = pd.read_csv(d["aggregates"])
            aggregates = agg.set_index(pd.PeriodIndex(agg.pop("quarter"), freq="Q"))
    else:
        sim = cfg["simulate"]
        raw, shock, aggregates = simulate.simulate_firm_panel(
            int(sim["n_firms"]), int(sim["n_quarters"]), beta=float(sim["beta"]), noise=float(sim["noise"]), seed=cfg["seed"],
        )
    horizons = range(0, int(cfg.get("horizons", 0)) + 1)
    winsor = cfg.get("winsorize")
    panel = ingest.build_firm_regressors(raw, cfg["leverage_def"], horizons, tuple(winsor) if winsor else None)
    panel = ingest.standardize_leverage(panel, strict=False)
    return panel, shock, aggregates


# ------------------------------------------------------------------ commands

def run_svar_panel(cfg: dict, out: Path) -> dict:
    panel = _macro_panel(cfg, cfg["data"].get("countries"), with_shares=cfg["shares"])
    spec = _var_spec(cfg, cfg["seed"])
    ispec = _irf_spec(cfg)
    draws, result = irf.estimate_irf(panel, spec, ispec)
    result.to_csv(out / "irf_panel.csv")
    bvar.save_draws(draws, out / "draws_panel.csv")
    summary = {"explosive_draws": result.explosive_draws, "dropped_draws": result.dropped_draws}
    if cfg["plots"]:
        plotting.irf_grid(result, out / "irf_panel.svg")
    split = cfg.get("split")
    if split:
        (la, ga), (lb, gb) = list(split.items())
        a, b = irf.subsample_compare(panel, (ga, gb), spec, ispec)
        a.to_csv(out / f"irf_{la}.csv")
        b.to_csv(out / f"irf_{lb}.csv")
        if cfg["plots"]:
            plotting.irf_grid(a, out / "irf_split.svg", compare=b, labels=(la, lb))
    if cfg["shares"] and all(s in panel.variables for s in irf.SHARE_VARIABLES):
        shares = irf.share_decomposition_run(panel, spec, ispec)
        shares.to_csv(out / "irf_shares.csv")
        if cfg["plots"]:
            plotting.irf_grid(shares, out / "irf_shares.svg")
    return summary


def run_svar_country(cfg: dict, out: Path) -> dict:
    country = cfg["country"]
    panel = _macro_panel(cfg, [country])
    spec = _var_spec(cfg, cfg["seed"])
    ispec = _irf_spec(cfg)
    draws, result = irf.estimate_irf(panel, spec, ispec, [country], RngStream(cfg["seed"]))
    result.to_csv(out / "irf_country.csv")
    if cfg["plots"]:
        plotting.irf_grid(result, out / "irf_country.svg", title=country)
    return {"explosive_draws": result.explosive_draws, "dropped_draws": result.dropped_draws}


def _table_specs(name: str, clustering) -> list[RegressionSpec]:
    cl = tuple(clustering)
    if name == "baseline":
        return cumulative_specs(RegressionSpec(spec_id="baseline", clustering=cl))
    if name == "alternative":
        base = RegressionSpec(spec_id="alternative", include_level_shock=True, fixed_effects="sector_season", clustering=cl)
        specs = cumulative_specs(base, FIRM_CONTROLS[:1])
        specs.append(RegressionSpec(spec_id="alternative_3", include_level_shock=True, fixed_effects="sector_season",
                                    controls=FIRM_CONTROLS, clustering=cl))
        specs.append(RegressionSpec(spec_id="alternative_4", include_level_shock=True, fixed_effects="sector_season",
                                    controls=FIRM_CONTROLS, aggregate_controls=True, clustering=cl))
        return specs
    if name.startswith("indicator_"):
        c = float(name.split("_", 1)[1])
        return cumulative_specs(RegressionSpec(spec_id=name, interaction="indicator", threshold=c, clustering=cl))
    raise ConfigError(f"unknown table {name!r}")


def run_firm_reg(cfg: dict, out: Path) -> dict:
    panel, shock, aggregates = _firm_data(cfg)
    results = []
    for table in cfg["tables"]:
        rows = []
        for spec in _table_specs(table, cfg["clustering"]):
            if spec.aggregate_controls and aggregates is None:
                continue
            rows.append(estimate_spec(panel, shock, spec, aggregates))
        names = ("shock", "interaction") if table == "alternative" else ("interaction",)
        (out / f"table_{table}.txt").write_text(format_table(rows, names, title=f"{table}: firm investment") + "\n")
        results.extend(rows)
    write_results_csv(results, out / "firm_results.csv")
    return {"regressions": len(results)}


def run_firm_lp(cfg: dict, out: Path) -> dict:
    panel, shock, aggregates = _firm_data(cfg)
    horizons = range(0, int(cfg["horizons"]) + 1)
    cl = tuple(cfg["clustering"])
    first = RegressionSpec(spec_id="lp_first", controls=tuple(cfg["controls"]), clustering=cl)
    second = RegressionSpec(spec_id="lp_second", include_level_shock=True, fixed_effects="sector_season",
                            controls=tuple(cfg["controls"]), aggregate_controls=aggregates is not None, clustering=cl)
    res_first = local_projection(panel, shock, first, horizons)
    res_second = local_projection(panel, shock, second, horizons, aggregates)
    write_results_csv(res_first + res_second, out / "lp_results.csv")
    if cfg["plots"]:
        plotting.lp_path(res_first, out / "lp_first.svg", title="first specification")
        plotting.lp_path(res_second, out / "lp_second.svg", title="second specification")
    return {"horizons": len(horizons)}


def _grid(spec) -> np.ndarray:
    lo, hi, n = spec
    return np.linspace(float(lo), float(hi), int(n))


def run_model_sweep(cfg: dict, out: Path) -> dict:
    base = entrepreneur.EntrepreneurParams(**cfg["params"])
    rs = cfg["rate_sweep"]
    rate = {
        "low initial debt": entrepreneur.sweep(base.with_(b0=rs["b0_low"]), "r1", _grid(rs["r1"])),
        "high initial debt": entrepreneur.sweep(base.with_(b0=rs["b0_high"]), "r1", _grid(rs["r1"])),
    }
    ds = cfg["debt_sweep"]
    debt = {
        "loose constraint": entrepreneur.sweep(base.with_(theta=ds["theta_loose"]), "b0", _grid(ds["b0"])),
        "tight constraint": entrepreneur.sweep(base.with_(theta=ds["theta_tight"]), "b0", _grid(ds["b0"])),
    }
    ts = cfg["theta_sweep"]
    theta = entrepreneur.sweep(base.with_(b0=ts["b0"]), "theta", _grid(ts["theta"]))
    rate["low initial debt"].to_csv(out / "curve_rate_low_debt.csv")
    rate["high initial debt"].to_csv(out / "curve_rate_high_debt.csv")
    debt["loose constraint"].to_csv(out / "curve_debt_loose.csv")
    debt["tight constraint"].to_csv(out / "curve_debt_tight.csv")
    theta.to_csv(out / "curve_theta.csv")
    if cfg["plots"]:
        plotting.model_curves(rate, out / "curve_rate.svg", "r1")
        plotting.model_curves(debt, out / "curve_debt.svg", "b0")
        plotting.model_curves({"constrained": theta}, out / "curve_theta.svg", "theta")
    kinks = {k: [float(x) for x in s.kinks] for k, s in {**rate, **debt, "theta": theta}.items()}
    return {"kinks": kinks}


def run_verify_props(cfg: dict, out: Path) -> dict:
    base = entrepreneur.EntrepreneurParams(**cfg["params"])
    if cfg.get("b0_pair"):
        lo, hi = cfg["b0_pair"]
        pair = (base.with_(b0=float(lo)), base.with_(b0=float(hi)))
    else:
        pair = entrepreneur.default_pair(base, float(cfg["kink_gap"]))
    report = entrepreneur.verify_propositions(pair, h=float(cfg["step"]))
    (out / "propositions.txt").write_text("\n".join(report.lines()) + "\n")
    values = {k: v for k, v in report.to_dict().items() if isinstance(v, float)}
    pd.DataFrame(
        [(k, v) for k, v in values.items()] + [(k, float(ok)) for k, ok in report.checks.items()],
        columns=["quantity", "value"],
    ).to_csv(out / "propositions.csv", index=False, float_format="%.12g")
    for line in report.lines():
        print(line)
    if not report.passed:
        raise PropositionFailure("; ".join(k for k, ok in report.checks.items() if not ok))
    return {"passed": True}


class PropositionFailure(SpilloverError):
    pass


COMMANDS = {
    "svar-panel": run_svar_panel,
    "svar-country": run_svar_country,
    "firm-reg": run_firm_reg,
    "firm-lp": run_firm_lp,
    "model-sweep": run_model_sweep,
    "verify-props": run_verify_props,
}


def write_manifest(cfg: dict, out: Path, wall: float, summary: dict) -> None:
    manifest = copy.deepcopy(cfg)
    manifest["run"] = {
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "wall_time_seconds": round(wall, 3),
        "summary": json.loads(json.dumps(summary, default=float)),
    }
    (out / "manifest.yaml").write_text(yaml.safe_dump(manifest, sort_keys=False))


def run(command: str, cfg: dict) -> int:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    summary = COMMANDS[command](cfg, out)
    write_manifest(cfg, out, time.perf_counter() - start, summary)
    return 0


def _fail(exc: BaseException, code: int) -> int:
    message = str(exc).replace('"', "'").replace("\n", " ")
    print(f'error class={type(exc).__name__} message="{message}"', file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spillover", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "svar-panel": "pooled panel SVAR, EMBI split and expenditure-share runs",
        "svar-country": "single-country SVAR with a Minnesota prior",
        "firm-reg": "interaction and indicator regressions (results tables)",
        "firm-lp": "local projections of cumulative capital growth",
        "model-sweep": "entrepreneur capital choice along r1, b0 and theta grids",
        "verify-props": "finite-difference check of the two comparative-statics propositions",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", "-c", help="YAML config (a previous manifest.yaml also works)")
        p.add_argument("--out", "-o", help=f"output directory (default ${OUTPUT_ENV} or spillover-out/<command>)")
        p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    fx = sub.add_parser("make-fixtures", help="write synthetic macro/firm CSVs in the input formats")
    fx.add_argument("directory")
    fx.add_argument("--seed", type=int, default=0)
    return parser


def make_fixtures(directory, seed: int = 0) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    ingest.write_macro_csv(simulate.simulate_macro_panel(seed=seed, with_shares=True), d / "macro.csv")
    raw, shock, aggregates = simulate.simulate_firm_panel(seed=seed)
    ingest.write_firm_csv(raw, d / "firms.csv")
    pd.DataFrame({"quarter": shock.index.astype(str), "value": shock.to_numpy()}).to_csv(
        d / "shock_quarterly.csv", index=False, float_format="%.12g")
    agg = aggregates.copy()
    agg.insert(0, "quarter", agg.index.astype(str))
    agg.to_csv(d / "aggregates.csv", index=False, float_format="%.12g")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "make-fixtures":
        make_fixtures(args.directory, args.seed)
        return 0
    try:
        cfg = load_config(args.command, args.config, args.seed, args.out)
    except ConfigError as exc:
        return _fail(exc, 2)
    try:
        return run(args.command, cfg)
    except ConfigError as exc:
        return _fail(exc, 2)
    except (SpilloverError, ValueError, np.linalg.LinAlgError) as exc:
        return _fail(exc, 1)


if __name__ == "__main__":
    sys.exit(main())
