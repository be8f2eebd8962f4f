"""Batch command-line front end.

    cirspread <command> [--config run.json] [flags]

Commands: bootstrap, imply-survival, calibrate, simulate, price, backtest.
Flags override values from the JSON config. Exit status is 0 on success,
1 on invalid input and 2 on numerical failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from cirspread import __version__
from cirspread import io
from cirspread.backtest import BacktestConfig, run_backtest
from cirspread.calibration import (
    CalibrationConfig,
    IntensityHistory,
    IntensitySeries,
    VolTermStructure,
    calibrate,
    vol_term_structure,
)
from cirspread.cir import CirppModel
from cirspread.curves import (
    CdsQuoteCurve,
    DiscountCurve,
    bootstrap_survival_from_cds,
    implied_survival_from_spreads,
)
from cirspread.errors import NumericalError, ValidationError
from cirspread.pricing import (
    HullWhiteParams,
    PricingInputs,
    credit_spread,
    defaultable_bond,
    risk_free_bond,
    zero_yield,
)
from cirspread.simulation import DEFAULT_LEVELS, SimulationConfig, histogram, simulate_paths, summarize

log = logging.getLogger("cirspread")

DEFAULT_SCENARIOS = {
    "global": ["2009-01-01", "2024-01-01"],
    "present": ["2022-01-01", "2024-01-01"],
}
INPUT_KEYS = ("cds", "discount", "spreads", "vols", "intensities", "params", "history")


class RunConfig:
    """Effective configuration: JSON file merged with command-line overrides."""

    def __init__(self, data: dict, base_dir: Path):
        self.data = data
        self.base_dir = base_dir

    @classmethod
    def load(cls, path: str | None) -> RunConfig:
        if path is None:
            return cls({}, Path.cwd())
        p = Path(path)
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ValidationError(f"config file {p} not found") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{p}:{exc.lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(data, dict):
            raise ValidationError(f"{p}: top-level JSON must be an object")
        return cls(data, p.parent.resolve())

    def section(self, name: str) -> dict:
        return dict(self.data.get(name, {}))

    def input_path(self, key: str, override: str | None, required: bool = True) -> Path | None:
        raw = override if override is not None else self.data.get("inputs", {}).get(key)
        if raw is None:
            if required:
                raise ValidationError(f"missing input {key!r} (flag --{key} or inputs.{key})")
            return None
        p = Path(raw)
        if override is None and not p.is_absolute():
            p = self.base_dir / p
        if not p.is_file():
            raise ValidationError(f"input {key!r}: file {p} does not exist")
        return p

    @property
    def delta(self) -> float:
        d = float(self.data.get("delta", 0.4))
        if not 0.0 < d < 1.0:
            raise ValidationError("delta must lie in (0, 1)")
        return d

    def scenario(self, name: str) -> tuple[dt.date, dt.date]:
        table = {**DEFAULT_SCENARIOS, **self.data.get("scenarios", {})}
        if name not in table:
            raise ValidationError(f"unknown scenario {name!r}; known: {', '.join(sorted(table))}")
        start, end = (dt.date.fromisoformat(x) for x in table[name])
        if not start < end:
            raise ValidationError(f"scenario {name!r} window is not well ordered")
        return start, end


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _config_kwargs(cls, section: dict) -> dict:
    names = {f.name for f in fields(cls)}
    out = {}
    for k, v in section.items():
        if k in names:
            out[k] = tuple(v) if isinstance(v, list) else v
    return out


def _date(text: str | None) -> dt.date | None:
    if text is None:
        return None
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise ValidationError(f"bad date {text!r} (expected YYYY-MM-DD)") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ValidationError(f"bad number list {text!r}") from None


# -- commands ---------------------------------------------------------------


def cmd_bootstrap(args, cfg: RunConfig, out: Path, record) -> None:
    cds_path = cfg.input_path("cds", args.cds)
    disc_path = cfg.input_path("discount", args.discount, required=False)
    curves = io.read_dated_curves(cds_path, "spread_bp")
    record(cds=cds_path, discount=disc_path)
    dates = [args.date] if args.date else list(curves)
    discount = io.read_discount_curve(disc_path, None) if disc_path is not None else None
    survival_rows, intensity_rows = [], []
    for d in dates:
        _, (tenors, spreads_bp) = io.pick_date(curves, d)
        quotes = CdsQuoteCurve(d, tenors, spreads_bp * io.BP, args.frequency, cfg.delta)
        if disc_path is None:
            discount = DiscountCurve.flat(args.rate, float(tenors[-1]))
        try:
            survival, hazard = bootstrap_survival_from_cds(quotes, discount)
        except ValidationError as exc:
            raise ValidationError(f"{d}: {exc}") from None
        except NumericalError as exc:
            raise NumericalError(f"{d}: {exc}") from None
        for t, s, lam, cum in zip(tenors, survival.survival, hazard.rates, hazard.cumulative):
            survival_rows.append([d.isoformat(), f"{t:g}", f"{s:.12f}", io.fmt_bp(lam), f"{cum:.12f}"])
            intensity_rows.append([d.isoformat(), f"{t:g}", io.fmt_bp(lam)])
    io.write_csv(out / "survival.csv",
                 ["date", "tenor_years", "survival_probability", "hazard_bp", "cumulative_hazard"],
                 survival_rows)
    io.write_csv(out / "intensities.csv", ["date", "tenor_years", "intensity_bp"], intensity_rows)


def cmd_imply_survival(args, cfg: RunConfig, out: Path, record) -> None:
    path = cfg.input_path("spreads", args.spreads)
    record(spreads=path)
    d, curve = io.pick_date(io.read_spread_curves(path), args.date)
    survival = implied_survival_from_spreads(curve, cfg.delta)
    hazard = survival.hazard()
    rows = [
        [d.isoformat(), f"{t:g}", f"{s:.12f}", io.fmt_bp(lam)]
        for t, s, lam in zip(survival.times, survival.survival, hazard.rates)
    ]
    io.write_csv(out / "survival.csv", ["date", "tenor_years", "survival_probability", "hazard_bp"], rows)


def _intensity_history(path: Path) -> IntensityHistory:
    curves = io.read_dated_curves(path, "intensity_bp")
    per: dict[float, list[tuple[dt.date, float]]] = {}
    for d, (tenors, values) in curves.items():
        for t, v in zip(tenors, values):
            per.setdefault(float(t), []).append((d, v * io.BP))
    return IntensityHistory({
        t: IntensitySeries(tuple(p[0] for p in pts), np.array([p[1] for p in pts]))
        for t, pts in per.items()
    })


def cmd_calibrate(args, cfg: RunConfig, out: Path, record) -> None:
    section = cfg.section("calibration")
    scenario = args.scenario or section.pop("scenario", None)
    section.pop("scenario", None)
    kwargs = _config_kwargs(CalibrationConfig, section)
    for key in ("window_weeks", "representative", "restarts", "seed", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            kwargs[key] = value
    config = CalibrationConfig(**kwargs)
    vol_path = cfg.input_path("vols", args.vols, required=False)
    if vol_path is not None:
        record(vols=vol_path)
        mats, vols = io.read_vols(vol_path)
        target = VolTermStructure(mats, vols)
    else:
        path = cfg.input_path("intensities", args.intensities)
        record(intensities=path)
        history = _intensity_history(path)
        if scenario:
            history = history.window(*cfg.scenario(scenario))
        target = vol_term_structure(history, config)
    result = calibrate(target, config)
    report = result.report(config)
    report["scenario"] = scenario
    report["units"] = "decimal per annum; vols are level standard deviations"
    io.write_json(out / "calibration.json", report)
    print(f"ssre={result.ssre:.6e} " + " ".join(f"{k}={v:.6e}" for k, v in result.params.to_dict().items()))


def _start_model(args, cfg: RunConfig, record):
    spreads_path = cfg.input_path("spreads", args.spreads)
    params_path = cfg.input_path("params", args.params)
    record(spreads=spreads_path, params=params_path)
    d, curve = io.pick_date(io.read_spread_curves(spreads_path), args.date)
    survival = implied_survival_from_spreads(curve, cfg.delta)
    return d, CirppModel(io.read_params(params_path), survival)


def cmd_simulate(args, cfg: RunConfig, out: Path, record) -> None:
    section = cfg.section("simulation")
    if args.date is None and "date" in section:
        args.date = _date(section["date"])
    d, model = _start_model(args, cfg, record)
    kwargs = _config_kwargs(SimulationConfig, section)
    if args.paths is not None:
        kwargs["n_paths"] = args.paths
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if args.workers is not None:
        kwargs["workers"] = args.workers
    if args.horizon_weeks is not None:
        kwargs["horizon_weeks"] = args.horizon_weeks
    if args.maturities is not None:
        kwargs["maturities"] = _floats(args.maturities)
    config = SimulationConfig(**kwargs)
    record(seed=config.seed)
    levels = tuple(section.get("levels", DEFAULT_LEVELS))
    paths = simulate_paths(model, cfg.delta, config, keep_spreads=args.save_paths)
    summary = summarize(paths, levels)
    header = ["week", "maturity_years", "mean_bp"] + [io.level_column(q) for q in levels]
    rows = []
    for i, week in enumerate(summary.weeks):
        for j, m in enumerate(summary.maturities):
            rows.append([int(week), f"{m:g}", io.fmt_bp(summary.mean[i, j])]
                        + [io.fmt_bp(x) for x in summary.quantiles[:, i, j]])
    io.write_csv(out / "summary.csv", header, rows)
    hist_weeks = args.histogram_weeks or section.get("histogram_weeks", [])
    if isinstance(hist_weeks, str):
        hist_weeks = [int(x) for x in _floats(hist_weeks)]
    tenor = float(section.get("histogram_tenor", 5.0) if args.histogram_tenor is None else args.histogram_tenor)
    bins = int(section.get("bins", 50))
    for week in hist_weeks:
        counts, edges = histogram(paths, int(week), tenor, bins)
        io.write_csv(out / f"histogram_w{int(week)}_{tenor:g}y.csv",
                     ["bin_left_bp", "bin_right_bp", "count"],
                     [[io.fmt_bp(a), io.fmt_bp(b), int(c)] for a, b, c in zip(edges[:-1], edges[1:], counts)])
    if args.save_paths:
        np.savez_compressed(out / "paths.npz", times=paths.times, maturities=paths.maturities,
                            lambdas=paths.lambdas, spreads=paths.spreads)


def cmd_price(args, cfg: RunConfig, out: Path, record) -> None:
    d, model = _start_model(args, cfg, record)
    t, T = args.t, args.T
    lam = model.psi(t) + model.params.y0 if args.lambda_bp is None and t == 0 else None
    if lam is None:
        if args.lambda_bp is None:
            raise ValidationError("--lambda-bp is required when t > 0")
        lam = args.lambda_bp * io.BP
    hw = None
    discount = None
    disc_path = cfg.input_path("discount", args.discount, required=False)
    if disc_path is not None:
        record(discount=disc_path)
        discount = io.read_discount_curve(disc_path, None)
        r = discount.forward(t) if args.hw_r_bp is None else args.hw_r_bp * io.BP
        hw = HullWhiteParams(args.hw_a, args.hw_sigma, r)
    inputs = PricingInputs(cfg.delta, model, discount, hw)
    result = {
        "date": d,
        "t": t,
        "T": T,
        "lambda_bp": lam / io.BP,
        "psi_bp": model.psi(t) / io.BP,
        "survival": model.conditional_survival(t, T, lam),
        "spread_bp": credit_spread(inputs, t, T, lam) / io.BP,
    }
    if hw is not None:
        P = risk_free_bond(inputs, t, T)
        H = defaultable_bond(inputs, t, T, lam)
        result.update(risk_free_bond=P, defaultable_bond=H,
                      risk_free_yield_bp=zero_yield(P, t, T) / io.BP,
                      risky_yield_bp=zero_yield(H, t, T) / io.BP)
    io.write_json(out / "price.json", result)
    print(json.dumps({k: v for k, v in result.items() if k != "date"}, default=str))


def cmd_backtest(args, cfg: RunConfig, out: Path, record) -> None:
    section = cfg.section("backtest")
    history_path = cfg.input_path("history", args.history)
    params_path = cfg.input_path("params", args.params)
    record(history=history_path, params=params_path)
    kwargs = _config_kwargs(BacktestConfig, section)
    start = args.start or _date(section.get("start_date"))
    if start is None:
        raise ValidationError("back-test needs a start date (--start or backtest.start_date)")
    kwargs["start_date"] = start
    for key, flag in (("tenor", args.tenor), ("horizon_weeks", args.horizon_weeks),
                      ("n_paths", args.paths), ("seed", args.seed), ("workers", args.workers)):
        if flag is not None:
            kwargs[key] = flag
    config = BacktestConfig(**kwargs)
    record(seed=config.seed)
    curves = io.read_spread_curves(history_path)
    if start not in curves:
        raise ValidationError(f"history has no spread curve on the start date {start}")
    dates, observed = io.read_tenor_series(history_path, config.tenor)
    report = run_backtest(dates, observed, curves[start], io.read_params(params_path), config, cfg.delta)
    io.write_json(out / "backtest.json", report.to_dict())
    header = ["week", "observed_bp"] + [io.level_column(q) for q in config.levels]
    rows = [[int(w), io.fmt_bp(o)] + [io.fmt_bp(x) for x in report.bands[:, i]]
            for i, (w, o) in enumerate(zip(report.weeks, report.observed))]
    io.write_csv(out / "backtest.csv", header, rows)
    print(" ".join(f"{io.level_column(q)}={f:.3f}" for q, f in zip(config.levels, report.fractions)))


COMMANDS = {
    "bootstrap": cmd_bootstrap,
    "imply-survival": cmd_imply_survival,
    "calibrate": cmd_calibrate,
    "simulate": cmd_simulate,
    "price": cmd_price,
    "backtest": cmd_backtest,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--output-dir", help="directory for outputs (default: config output_dir or .)")
    common.add_argument("--seed", type=int)
    common.add_argument("--paths", type=int, help="number of Monte Carlo paths")
    common.add_argument("--workers", type=int)
    common.add_argument("--delta", type=float, help="recovery rate (default 0.4)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="cirspread", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bootstrap", parents=[common], help="CDS quotes -> survival and intensities")
    p.add_argument("--cds")
    p.add_argument("--discount")
    p.add_argument("--rate", type=float, default=0.0, help="flat rate when no discount file is given")
    p.add_argument("--frequency", type=int, default=4, help="premium payments per year")
    p.add_argument("--date", type=_date)

    p = sub.add_parser("imply-survival", parents=[common], help="spread curve -> implied survival")
    p.add_argument("--spreads")
    p.add_argument("--date", type=_date)

    p = sub.add_parser("calibrate", parents=[common], help="fit CIR parameters to intensity vols")
    p.add_argument("--vols")
    p.add_argument("--intensities")
    p.add_argument("--scenario")
    p.add_argument("--window-weeks", dest="window_weeks", type=int)
    p.add_argument("--representative", choices=["max", "median", "mean"])
    p.add_argument("--restarts", type=int)

    for name, helptext in (("simulate", "Monte Carlo spread term structures"),
                           ("price", "closed-form bond prices and spread")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--spreads")
        p.add_argument("--params")
        p.add_argument("--date", type=_date)
    sim = sub.choices["simulate"]
    sim.add_argument("--horizon-weeks", dest="horizon_weeks", type=int)
    sim.add_argument("--maturities", help="comma-separated tenors in years")
    sim.add_argument("--histogram-weeks", dest="histogram_weeks")
    sim.add_argument("--histogram-tenor", dest="histogram_tenor", type=float)
    sim.add_argument("--save-paths", dest="save_paths", action="store_true")
    price = sub.choices["price"]
    price.add_argument("--t", type=float, default=0.0)
    price.add_argument("--T", type=float, required=True)
    price.add_argument("--lambda-bp", dest="lambda_bp", type=float)
    price.add_argument("--discount")
    price.add_argument("--hw-a", dest="hw_a", type=float, default=0.1)
    price.add_argument("--hw-sigma", dest="hw_sigma", type=float, default=0.01)
    price.add_argument("--hw-r-bp", dest="hw_r_bp", type=float)

    p = sub.add_parser("backtest", parents=[common], help="quantile-band coverage of history")
    p.add_argument("--history")
    p.add_argument("--params")
    p.add_argument("--start", type=_date)
    p.add_argument("--tenor", type=float)
    p.add_argument("--horizon-weeks", dest="horizon_weeks", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = dt.datetime.now(dt.timezone.utc)
    try:
        cfg = RunConfig.load(args.config)
        if args.delta is not None:
            cfg.data["delta"] = args.delta
        out = Path(args.output_dir or cfg.data.get("output_dir") or ".")
        if args.output_dir is None and not out.is_absolute() and args.config:
            out = cfg.base_dir / out
        out.mkdir(parents=True, exist_ok=True)
        inputs: dict[str, str] = {}
        meta: dict = {"seed": args.seed}

        def record(seed=None, **paths):
            if seed is not None:
                meta["seed"] = seed
            for name, p in paths.items():
                if p is not None:
                    inputs[name] = _sha256(Path(p))

        COMMANDS[args.command](args, cfg, out, record)
        effective = {"command": args.command, "config": cfg.data,
                     "flags": {k: v for k, v in vars(args).items() if k != "func"}}
        manifest = {
            "command": args.command,
            "config_hash": hashlib.sha256(
                json.dumps(effective, sort_keys=True, default=str).encode()).hexdigest(),
            "inputs": inputs,
            "seed": meta["seed"],
            "artifact_version": __version__,
            "timestamps": {"started": started.isoformat(),
                           "finished": dt.datetime.now(dt.timezone.utc).isoformat()},
            "effective_config": effective,
        }
        io.write_json(out / "manifest.json", manifest)
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
