"""Volatility-based calibration of the CIR++ intensity parameters.

Historical volatilities are the rolling sample standard deviation of weekly
intensity levels (no annualisation factor); one representative value per
maturity feeds a sum-of-squared-relative-errors fit of the model volatility
``sqrt(Var_lambda(T))``.
"""

from __future__ import annotations

import datetime as dt
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import optimize
from scipy.stats import qmc

from cirspread.cir import CirParams, intensity_volatility
from cirspread.errors import NumericalError, ValidationError

log = logging.getLogger(__name__)

STANDARD_MATURITIES = (1.0, 3.0, 5.0, 7.0, 10.0)
FELLER_PENALTY = 1e6


@dataclass(frozen=True)
class IntensitySeries:
    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if len(self.dates) != v.size:
            raise ValidationError("one intensity value per date")
        if not np.all(np.isfinite(v)) or np.any(v < 0.0):
            raise ValidationError("intensities must be finite and >= 0")
        gaps = [(b - a).days for a, b in zip(self.dates, self.dates[1:])]
        if any(g <= 0 for g in gaps):
            raise ValidationError("intensity dates must be strictly increasing")
        bad = [(self.dates[i + 1], g) for i, g in enumerate(gaps) if abs(g - 7) > 2]
        if bad:
            raise ValidationError(f"non-weekly spacing of {bad[0][1]} days ending {bad[0][0]}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class IntensityHistory:
    """Weekly bootstrapped intensities per horizon."""

    series: dict[float, IntensitySeries]

    @property
    def maturities(self) -> tuple[float, ...]:
        return tuple(sorted(self.series))

    def window(self, start: dt.date, end: dt.date) -> IntensityHistory:
        out = {}
        for m, s in self.series.items():
            keep = [i for i, d in enumerate(s.dates) if start <= d <= end]
            out[m] = IntensitySeries(tuple(s.dates[i] for i in keep), s.values[keep])
        return IntensityHistory(out)


@dataclass(frozen=True)
class VolTermStructure:
    maturities: np.ndarray
    vols: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.maturities, dtype=float)
        v = np.asarray(self.vols, dtype=float)
        if m.shape != v.shape or m.ndim != 1 or m.size == 0:
            raise ValidationError("one volatility per maturity")
        if not np.all(np.isfinite(v)) or np.any(v < 0.0):
            raise ValidationError("volatilities must be finite and >= 0")
        if np.any(m <= 0.0) or np.any(np.diff(m) <= 0.0):
            raise ValidationError("maturities must be positive and strictly increasing")
        object.__setattr__(self, "maturities", m)
        object.__setattr__(self, "vols", v)

    @classmethod
    def from_params(cls, params: CirParams, maturities=STANDARD_MATURITIES) -> VolTermStructure:
        m = np.asarray(maturities, dtype=float)
        return cls(m, intensity_volatility(params, m))


@dataclass(frozen=True)
class CalibrationConfig:
    window_weeks: int = 51
    representative: str = "max"
    kappa_bounds: tuple[float, float] = (1e-3, 5.0)
    theta_bounds: tuple[float, float] = (1e-5, 0.5)
    sigma_bounds: tuple[float, float] = (1e-4, 1.0)
    y0_bounds: tuple[float, float] = (1e-5, 0.5)
    restarts: int = 16
    xatol: float = 1e-8
    fatol: float = 1e-14
    max_iter: int = 2_000
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.window_weeks < 2:
            raise ValidationError("rolling window must span at least two weeks")
        if self.representative not in ("max", "median", "mean"):
            raise ValidationError(f"unknown representative statistic {self.representative!r}")
        if self.restarts < 1:
            raise ValidationError("need at least one optimizer start")
        for lo, hi in self.bounds:
            if not 0.0 < lo < hi:
                raise ValidationError("parameter bounds must satisfy 0 < lo < hi")
        (klo, khi), (tlo, thi), (slo, _), _ = self.bounds
        if 2.0 * khi * thi < slo**2:
            raise ValidationError("parameter bounds leave no Feller-feasible point")

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        return (self.kappa_bounds, self.theta_bounds, self.sigma_bounds, self.y0_bounds)


@dataclass
class CalibrationResult:
    params: CirParams
    ssre: float
    maturities: np.ndarray
    target_vols: np.ndarray
    fitted_vols: np.ndarray
    iterations: int
    restarts_used: int
    start_ssre: list[float] = field(default_factory=list)

    def report(self, config: CalibrationConfig | None = None) -> dict:
        out = {
            "params": self.params.to_dict(),
            "ssre": self.ssre,
            "maturities": self.maturities.tolist(),
            "target_vols": self.target_vols.tolist(),
            "fitted_vols": self.fitted_vols.tolist(),
            "diagnostics": {"iterations": self.iterations, "restarts_used": self.restarts_used},
        }
        if config is not None:
            out["config"] = asdict(config)
        return out


def rolling_volatility(history: IntensityHistory, window_weeks: int = 51) -> dict[float, np.ndarray]:
    """Sample standard deviation (n-1) of each trailing window of weekly levels."""
    if window_weeks < 2:
        raise ValidationError("rolling window must span at least two weeks")
    out = {}
    for m in history.maturities:
        v = history.series[m].values
        if v.size < window_weeks:
            raise ValidationError(
                f"{m:g}y series has {v.size} weeks, shorter than the {window_weeks}-week window"
            )
        out[m] = sliding_window_view(v, window_weeks).std(axis=1, ddof=1)
    return out


def representative_vol(vol_series, statistic: str = "max") -> float:
    v = np.asarray(vol_series, dtype=float)
    if v.size == 0:
        raise ValidationError("empty volatility series")
    if statistic == "max":
        return float(v.max())
    if statistic == "median":
        return float(np.median(v))
    if statistic == "mean":
        return float(v.mean())
    raise ValidationError(f"unknown representative statistic {statistic!r}")


def vol_term_structure(history: IntensityHistory, config: CalibrationConfig) -> VolTermStructure:
    series = rolling_volatility(history, config.window_weeks)
    mats = history.maturities
    return VolTermStructure(
        np.array(mats), np.array([representative_vol(series[m], config.representative) for m in mats])
    )


def _check_target(target: VolTermStructure) -> None:
    zero = target.maturities[target.vols <= 0.0]
    if zero.size:
        raise ValidationError(f"target volatility is zero at T={zero[0]:g}y; relative error undefined")


def ssre(params: CirParams, target: VolTermStructure) -> float:
    """Sum of squared relative errors between target and model volatilities."""
    _check_target(target)
    model = intensity_volatility(params, target.maturities)
    return float(np.sum(((target.vols - model) / target.vols) ** 2))


def _raw_ssre(x: np.ndarray, mats: np.ndarray, vols: np.ndarray) -> float:
    k, th, s, y0 = np.exp(x)
    e1 = np.exp(-k * mats)
    var = y0 * s * s / k * (e1 - e1 * e1) + th * s * s / (2.0 * k) * (1.0 - e1) ** 2
    err = float(np.sum(((vols - np.sqrt(var)) / vols) ** 2))
    if 2.0 * k * th < s * s:
        err += FELLER_PENALTY
    return err


def _starts(config: CalibrationConfig) -> np.ndarray:
    lo = np.log([b[0] for b in config.bounds])
    hi = np.log([b[1] for b in config.bounds])
    unit = qmc.LatinHypercube(d=4, seed=config.seed).random(config.restarts)
    x = lo + unit * (hi - lo)
    # lift theta onto the Feller boundary (within its box) when a start is infeasible
    k, th, s = np.exp(x[:, 0]), np.exp(x[:, 1]), np.exp(x[:, 2])
    need = np.log(np.minimum(1.01 * s * s / (2.0 * k), config.theta_bounds[1]))
    x[:, 1] = np.where(2.0 * k * th < s * s, np.maximum(x[:, 1], need), x[:, 1])
    return x


def _local_search(args):
    x0, mats, vols, config = args
    opts = {"xatol": config.xatol, "fatol": config.fatol, "maxiter": config.max_iter,
            "maxfev": 4 * config.max_iter}
    f = lambda x: _raw_ssre(x, mats, vols)  # noqa: E731
    box = [(math.log(lo), math.log(hi)) for lo, hi in config.bounds]
    res = optimize.minimize(f, x0, method="Nelder-Mead", bounds=box, options=opts)
    nit = res.nit
    # restart the simplex from the optimum to escape premature collapse
    for _ in range(3):
        again = optimize.minimize(f, res.x, method="Nelder-Mead", bounds=box, options=opts)
        nit += again.nit
        if not again.fun < res.fun:
            break
        res = again
    return res.x, float(res.fun), nit


def calibrate(target: VolTermStructure, config: CalibrationConfig | None = None) -> CalibrationResult:
    """Multistart Nelder-Mead fit of (kappa, theta, sigma, y0) in log space."""
    config = config or CalibrationConfig()
    _check_target(target)
    mats, vols = target.maturities, target.vols
    starts = _starts(config)
    start_values = [_raw_ssre(x, mats, vols) for x in starts]
    jobs = [(x, mats, vols, config) for x in starts]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_local_search, jobs))
    else:
        outcomes = [_local_search(job) for job in jobs]

    candidates = []
    total_iter = 0
    for i, (x, fun, nit) in enumerate(outcomes):
        total_iter += nit
        if not math.isfinite(fun) or not np.all(np.isfinite(x)):
            log.warning("calibration start %d abandoned: non-finite objective", i)
            continue
        k, th, s, y0 = np.exp(x)
        if fun >= FELLER_PENALTY or 2.0 * k * th < s * s * (1.0 - 1e-12):
            log.info("calibration start %d ended outside the Feller region", i)
            continue
        candidates.append((fun, tuple(float(v) for v in np.exp(x))))
    if not candidates:
        raise NumericalError("no Feller-feasible calibration point found")
    fun, theta = min(candidates)
    params = CirParams(*theta)
    return CalibrationResult(
        params=params,
        ssre=ssre(params, target),
        maturities=mats.copy(),
        target_vols=vols.copy(),
        fitted_vols=intensity_volatility(params, mats),
        iterations=total_iter,
        restarts_used=len(candidates),
        start_ssre=start_values,
    )
