"""Power study for the model-consistency back-test.

Simulates quantile bands once, scores many held-out model paths against them
and reports how often the average coverage of ``--group`` paths lands within
``--tol`` of nominal at every level.

    python scripts/coverage_study.py [--held-out 2000] [--group 20]
"""

import argparse
import datetime as dt
import time

import numpy as np

from cirspread import GLOBAL_SCENARIO, CirppModel, SpreadCurve, implied_survival_from_spreads
from cirspread.backtest import BacktestConfig, evaluate_coverage, simulate_bands
from cirspread.simulation import SimulationConfig, simulate_paths


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--held-out", type=int, default=2000)
    ap.add_argument("--group", type=int, default=20)
    ap.add_argument("--tol", type=float, default=0.05)
    ap.add_argument("--band-paths", type=int, default=20_000)
    ap.add_argument("--horizon", type=int, default=200)
    args = ap.parse_args()

    start_date = dt.date(2020, 1, 3)
    curve = SpreadCurve([1.0, 2.0, 3.0, 5.0, 7.0, 10.0], np.full(6, 0.01))
    cfg = BacktestConfig(start_date, horizon_weeks=args.horizon, n_paths=args.band_paths, seed=0)
    t0 = time.perf_counter()
    bands = simulate_bands(curve, GLOBAL_SCENARIO, cfg)

    model = CirppModel(GLOBAL_SCENARIO, implied_survival_from_spreads(curve, 0.4))
    sim = SimulationConfig(n_paths=args.held_out, horizon_weeks=args.horizon, maturities=(5.0,), seed=1)
    held = simulate_paths(model, 0.4, sim, keep_spreads=False)
    series = np.stack([held.spreads_at_week(k)[:, 0] for k in range(args.horizon + 1)], axis=1)
    dates = [start_date + dt.timedelta(weeks=w) for w in range(args.horizon + 1)]
    fractions = np.array([evaluate_coverage(dates, s, bands).fractions for s in series])
    levels = np.array(cfg.levels)

    print(f"{args.held_out} held-out paths scored in {time.perf_counter() - t0:.1f}s")
    print("level   mean    sd(1 path)   sd(group mean)")
    for l, m, s in zip(levels, fractions.mean(axis=0), fractions.std(axis=0, ddof=1)):
        print(f"{l:5.2f} {m:7.3f} {s:11.3f} {s / np.sqrt(args.group):14.3f}")
    n_groups = args.held_out // args.group
    groups = fractions[: n_groups * args.group].reshape(n_groups, args.group, -1).mean(axis=1)
    inside = np.all(np.abs(groups - levels) <= args.tol, axis=1)
    print(f"groups of {args.group}: {inside.mean():.2f} of {n_groups} have every level within ±{args.tol:.0%}")


if __name__ == "__main__":
    main()
