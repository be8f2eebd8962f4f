"""Historical back-test of simulated spread quantile bands.

The model starts from the spread curve observed at the start date (survival
implied from spreads), diffuses one tenor for ``horizon_weeks`` and checks,
week by week, where each observed spread falls relative to the simulated
quantiles.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

from cirspread.cir import CirParams, CirppModel
from cirspread.curves import SpreadCurve, implied_survival_from_spreads
from cirspread.errors import ValidationError
from cirspread.simulation import DEFAULT_LEVELS, SimulationConfig, simulate_paths, summarize


@dataclass(frozen=True)
class BacktestConfig:
    start_date: dt.date
    horizon_weeks: int = 200
    tenor: float = 5.0
    levels: tuple[float, ...] = DEFAULT_LEVELS
    n_paths: int = 20_000
    seed: int = 0
    workers: int = 1
    gap_tolerance: float = 0.05

    def __post_init__(self) -> None:
        if self.horizon_weeks < 1:
            raise ValidationError("back-test horizon must be >= 1 week")
        lv = tuple(float(x) for x in self.levels)
        if not lv or any(not 0.0 < x < 1.0 for x in lv) or any(b <= a for a, b in zip(lv, lv[1:])):
            raise ValidationError("quantile levels must be strictly increasing in (0, 1)")
        if self.tenor <= 0:
            raise ValidationError("tenor must be positive")
        object.__setattr__(self, "levels", lv)


@dataclass(frozen=True)
class QuantileBands:
    """Simulated quantiles of one tenor, shape (level, week) for weeks 0..horizon."""

    start_date: dt.date
    levels: tuple[float, ...]
    bands: np.ndarray

    @property
    def horizon_weeks(self) -> int:
        return self.bands.shape[1] - 1

    def nested(self) -> bool:
        return bool(np.all(np.diff(self.bands, axis=0) >= 0.0))


@dataclass
class CoverageReport:
    levels: tuple[float, ...]
    weeks: np.ndarray  # observed week indices (1..horizon)
    observed: np.ndarray
    bands: np.ndarray  # (level, len(weeks))
    counts: np.ndarray  # per level: observations at or below the band
    fractions: np.ndarray
    exceedance_dates: list[dt.date]
    missing_weeks: list[int]
    bands_nested: bool
    start_date: dt.date | None = None
    dates: list[dt.date] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "start_date": self.start_date.isoformat() if self.start_date else None,
            "n_observations": int(self.weeks.size),
            "levels": list(self.levels),
            "counts": self.counts.tolist(),
            "fractions": self.fractions.tolist(),
            "exceedance_dates": [d.isoformat() for d in self.exceedance_dates],
            "missing_weeks": self.missing_weeks,
            "bands_nested": self.bands_nested,
            "stats": coverage_stats(self),
        }


def _week_index(start: dt.date, d: dt.date) -> int | None:
    days = (d - start).days
    w = int(round(days / 7.0))
    return w if abs(days - 7 * w) <= 2 else None


def simulate_bands(
    start_curve: SpreadCurve, params: CirParams, config: BacktestConfig, delta: float = 0.4
) -> QuantileBands:
    survival = implied_survival_from_spreads(start_curve, delta)
    model = CirppModel(params, survival)
    sim = SimulationConfig(
        n_paths=config.n_paths,
        horizon_weeks=config.horizon_weeks,
        maturities=(config.tenor,),
        seed=config.seed,
        workers=config.workers,
    )
    paths = simulate_paths(model, delta, sim, keep_spreads=False)
    summary = summarize(paths, config.levels)
    return QuantileBands(config.start_date, config.levels, summary.quantiles[:, :, 0])


def evaluate_coverage(
    dates, observed, bands: QuantileBands, gap_tolerance: float = 0.05
) -> CoverageReport:
    """Pointwise weekly coverage of ``observed`` by the simulated bands."""
    observed = np.asarray(observed, dtype=float)
    if len(dates) != observed.size:
        raise ValidationError("one observation per date")
    horizon = bands.horizon_weeks
    by_week: dict[int, tuple[dt.date, float]] = {}
    for d, v in zip(dates, observed):
        w = _week_index(bands.start_date, d)
        if w is None or w < 1 or w > horizon:
            continue
        by_week.setdefault(w, (d, float(v)))
    missing = [w for w in range(1, horizon + 1) if w not in by_week]
    if len(missing) > gap_tolerance * horizon:
        raise ValidationError(
            f"history misses {len(missing)} of {horizon} weeks (tolerance {gap_tolerance:.0%})"
        )
    weeks = np.array(sorted(by_week), dtype=int)
    obs = np.array([by_week[w][1] for w in weeks])
    obs_dates = [by_week[w][0] for w in weeks]
    b = bands.bands[:, weeks]
    below = obs[None, :] <= b
    counts = below.sum(axis=1)
    n = max(weeks.size, 1)
    top = obs > b[-1]
    return CoverageReport(
        levels=bands.levels,
        weeks=weeks,
        observed=obs,
        bands=b,
        counts=counts,
        fractions=counts / n,
        exceedance_dates=[d for d, t in zip(obs_dates, top) if t],
        missing_weeks=missing,
        bands_nested=bands.nested(),
        start_date=bands.start_date,
        dates=obs_dates,
    )


def run_backtest(
    history_dates,
    history_spreads,
    start_curve: SpreadCurve,
    params: CirParams,
    config: BacktestConfig,
    delta: float = 0.4,
) -> CoverageReport:
    """Simulate from the start-date curve and score the observed tenor series."""
    bands = simulate_bands(start_curve, params, config, delta)
    return evaluate_coverage(history_dates, history_spreads, bands, config.gap_tolerance)


def coverage_stats(report: CoverageReport) -> dict:
    """Exceedance counts per band pair and the week of the worst top-band breach."""
    obs, b = report.observed, report.bands
    # bucket 0: below the lowest band; bucket i: between band i-1 and band i; last: above top
    bucket = (obs[None, :] > b).sum(axis=0)
    edges = ["<" + _tag(report.levels[0])]
    edges += [f"{_tag(lo)}-{_tag(hi)}" for lo, hi in zip(report.levels, report.levels[1:])]
    edges += [">" + _tag(report.levels[-1])]
    per_pair = {name: int(np.sum(bucket == i)) for i, name in enumerate(edges)}
    excess = obs - b[-1] if obs.size else np.array([])
    worst = None
    if obs.size and np.any(excess > 0.0):
        worst = int(report.weeks[int(np.argmax(excess))])
    return {
        "above_top": int(np.sum(bucket == len(report.levels))) if obs.size else 0,
        "below_bottom": int(np.sum(bucket == 0)) if obs.size else 0,
        "per_band": per_pair,
        "max_violation_week": worst,
    }


def _tag(level: float) -> str:
    pct = level * 100.0
    return f"q{int(round(pct)):02d}" if math.isclose(pct, round(pct)) else f"q{pct:g}"
