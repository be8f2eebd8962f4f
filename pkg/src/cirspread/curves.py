"""Market term structures: survival, hazard, discount and spread curves.

All times are year fractions. Survival and discount curves interpolate
linearly in their log (piecewise-constant hazard / forward rate) and refuse
to extrapolate past the last pillar.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from cirspread.errors import CurveDomainError, NumericalError, ValidationError

#: slack when checking a query against the last pillar
_DOMAIN_EPS = 1e-12


def _as_pillar_times(times: Sequence[float], name: str) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValidationError(f"{name}: need a non-empty 1-d list of pillar times")
    if not np.all(np.isfinite(t)) or np.any(t <= 0.0):
        raise ValidationError(f"{name}: pillar times must be finite and positive")
    if np.any(np.diff(t) <= 0.0):
        raise ValidationError(f"{name}: pillar times must be strictly increasing")
    return t


def _check_domain(t: np.ndarray, last: float, name: str) -> None:
    if np.any(t < 0.0) or np.any(t > last + _DOMAIN_EPS) or not np.all(np.isfinite(t)):
        bad = t[(t < 0.0) | (t > last + _DOMAIN_EPS) | ~np.isfinite(t)]
        raise CurveDomainError(
            f"{name} queried at t={float(bad.flat[0])!r} outside [0, {last}]"
        )


def _segment_index(grid: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Index k of the segment (grid[k-1], grid[k]] holding t; t=0 maps to 1.

    ``grid`` includes the leading zero.
    """
    k = np.searchsorted(grid, t, side="left")
    return np.clip(k, 1, grid.size - 1)


def _loglinear(grid: np.ndarray, logs: np.ndarray, t: np.ndarray) -> np.ndarray:
    k = _segment_index(grid, t)
    t0, t1 = grid[k - 1], grid[k]
    w = (t - t0) / (t1 - t0)
    return logs[k - 1] + w * (logs[k] - logs[k - 1])


def _scalar_or_array(x: np.ndarray, like) -> float | np.ndarray:
    return float(x) if np.ndim(like) == 0 else x


@dataclass(frozen=True)
class HazardCurve:
    """Piecewise-constant default intensity.

    ``rates[i]`` applies on ``(times[i-1], times[i]]`` with ``times[-1] = 0``.
    """

    times: np.ndarray
    rates: np.ndarray
    cumulative: np.ndarray = field(init=False, repr=False)
    _grid: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        t = _as_pillar_times(self.times, "HazardCurve")
        r = np.asarray(self.rates, dtype=float)
        if r.shape != t.shape:
            raise ValidationError("HazardCurve: one rate per pillar")
        if not np.all(np.isfinite(r)) or np.any(r < 0.0):
            raise ValidationError("HazardCurve: intensities must be finite and >= 0")
        grid = np.concatenate(([0.0], t))
        cum = np.concatenate(([0.0], np.cumsum(r * np.diff(grid))))
        t.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "rates", r)
        object.__setattr__(self, "_grid", grid)
        object.__setattr__(self, "cumulative", cum[1:])

    @property
    def max_time(self) -> float:
        return float(self.times[-1])

    def rate(self, t):
        """Intensity in force at ``t`` (left-continuous; ``rate(0)`` is the first segment)."""
        ta = np.asarray(t, dtype=float)
        _check_domain(ta, self.max_time, "HazardCurve")
        return _scalar_or_array(self.rates[_segment_index(self._grid, ta) - 1], t)

    def cumulative_at(self, t):
        ta = np.asarray(t, dtype=float)
        _check_domain(ta, self.max_time, "HazardCurve")
        cum = np.concatenate(([0.0], self.cumulative))
        return _scalar_or_array(_loglinear(self._grid, cum, ta), t)

    def survival(self) -> SurvivalCurve:
        return SurvivalCurve(self.times, np.exp(-self.cumulative))


@dataclass(frozen=True)
class SurvivalCurve:
    """Market-implied survival probabilities ``S(0, t)`` with ``S(0, 0) = 1``."""

    times: np.ndarray
    survival: np.ndarray
    interpolation: str = "log-linear"
    _grid: np.ndarray = field(init=False, repr=False)
    _logs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        t = _as_pillar_times(self.times, "SurvivalCurve")
        s = np.asarray(self.survival, dtype=float)
        if s.shape != t.shape:
            raise ValidationError("SurvivalCurve: one probability per pillar")
        if not np.all(np.isfinite(s)) or np.any(s <= 0.0) or np.any(s > 1.0):
            raise ValidationError("SurvivalCurve: probabilities must lie in (0, 1]")
        if np.any(np.diff(np.concatenate(([1.0], s))) > 0.0):
            raise ValidationError("SurvivalCurve: survival must be non-increasing")
        if self.interpolation != "log-linear":
            raise ValidationError(f"unsupported interpolation {self.interpolation!r}")
        t.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "survival", s)
        object.__setattr__(self, "_grid", np.concatenate(([0.0], t)))
        object.__setattr__(self, "_logs", np.concatenate(([0.0], np.log(s))))

    @property
    def max_time(self) -> float:
        return float(self.times[-1])

    def log_at(self, t):
        ta = np.asarray(t, dtype=float)
        _check_domain(ta, self.max_time, "SurvivalCurve")
        return _scalar_or_array(_loglinear(self._grid, self._logs, ta), t)

    def at(self, t):
        return np.exp(self.log_at(t))

    def hazard(self) -> HazardCurve:
        return hazard_from_survival(self)


@dataclass(frozen=True)
class DiscountCurve:
    """Risk-free discount factors ``P^m(0, t)``, log-linear between pillars."""

    times: np.ndarray
    discount: np.ndarray
    _grid: np.ndarray = field(init=False, repr=False)
    _logs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        t = _as_pillar_times(self.times, "DiscountCurve")
        p = np.asarray(self.discount, dtype=float)
        if p.shape != t.shape:
            raise ValidationError("DiscountCurve: one discount factor per pillar")
        if not np.all(np.isfinite(p)) or np.any(p <= 0.0):
            raise ValidationError("DiscountCurve: discount factors must be positive")
        t.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "discount", p)
        object.__setattr__(self, "_grid", np.concatenate(([0.0], t)))
        object.__setattr__(self, "_logs", np.concatenate(([0.0], np.log(p))))

    @classmethod
    def flat(cls, rate: float, horizon: float, step: float = 0.25) -> DiscountCurve:
        n = max(1, int(math.ceil(horizon / step - 1e-9)))
        times = step * np.arange(1, n + 1)
        return cls(times, np.exp(-rate * times))

    @property
    def max_time(self) -> float:
        return float(self.times[-1])

    def at(self, t):
        ta = np.asarray(t, dtype=float)
        _check_domain(ta, self.max_time, "DiscountCurve")
        return _scalar_or_array(np.exp(_loglinear(self._grid, self._logs, ta)), t)

    def forward(self, t):
        """Instantaneous forward ``f^m(0, t) = -d ln P^m / dt`` (piecewise constant)."""
        ta = np.asarray(t, dtype=float)
        _check_domain(ta, self.max_time, "DiscountCurve")
        k = _segment_index(self._grid, ta)
        fwd = -(self._logs[k] - self._logs[k - 1]) / (self._grid[k] - self._grid[k - 1])
        return _scalar_or_array(fwd, t)


@dataclass(frozen=True)
class SpreadCurve:
    """Market credit spreads ``Sp^m(0, T)`` in decimal per annum."""

    tenors: np.ndarray
    spreads: np.ndarray

    def __post_init__(self) -> None:
        t = _as_pillar_times(self.tenors, "SpreadCurve")
        s = np.asarray(self.spreads, dtype=float)
        if s.shape != t.shape or not np.all(np.isfinite(s)):
            raise ValidationError("SpreadCurve: one finite spread per tenor")
        object.__setattr__(self, "tenors", t)
        object.__setattr__(self, "spreads", s)

    def check_bound(self, delta: float) -> None:
        bound = -math.log(delta) / self.tenors
        bad = np.nonzero(self.spreads >= bound)[0]
        if bad.size:
            i = int(bad[0])
            raise ValidationError(
                f"spread {self.spreads[i] * 1e4:.4f} bp at T={self.tenors[i]:g}y "
                f"violates Sp < -ln(delta)/T = {bound[i] * 1e4:.4f} bp "
                f"(implied survival would be <= 0)"
            )


@dataclass(frozen=True)
class CdsQuoteCurve:
    """Par CDS spreads for one quote date."""

    quote_date: dt.date | None
    tenors: np.ndarray
    spreads: np.ndarray
    premium_frequency: int = 4
    recovery: float = 0.4

    def __post_init__(self) -> None:
        t = _as_pillar_times(self.tenors, "CdsQuoteCurve")
        s = np.asarray(self.spreads, dtype=float)
        if s.shape != t.shape or not np.all(np.isfinite(s)) or np.any(s < 0.0):
            raise ValidationError("CdsQuoteCurve: one non-negative spread per tenor")
        if not 0.0 < self.recovery < 1.0:
            raise ValidationError("CdsQuoteCurve: recovery must lie in (0, 1)")
        if self.premium_frequency < 1:
            raise ValidationError("CdsQuoteCurve: premium frequency must be >= 1")
        object.__setattr__(self, "tenors", t)
        object.__setattr__(self, "spreads", s)


def curve_at(curve, t):
    """Evaluate a survival or discount curve (log-linear, no extrapolation)."""
    if isinstance(curve, HazardCurve):
        return curve.rate(t)
    return curve.at(t)


def hazard_from_survival(curve: SurvivalCurve) -> HazardCurve:
    grid = np.concatenate(([0.0], curve.times))
    cum = -np.concatenate(([0.0], np.log(curve.survival)))
    if np.any(np.diff(cum) < 0.0):
        raise ValidationError("survival curve is not monotone")
    rates = np.diff(cum) / np.diff(grid)
    return HazardCurve(curve.times, rates)


def implied_survival_from_spreads(spreads: SpreadCurve, delta: float) -> SurvivalCurve:
    """Survival implied by initial spreads: ``S = (exp(-T Sp) - delta) / (1 - delta)``."""
    if not 0.0 < delta < 1.0:
        raise ValidationError("recovery delta must lie in (0, 1)")
    spreads.check_bound(delta)
    # 1 - S computed directly keeps the round trip through the spread formula tight
    one_minus = -np.expm1(-spreads.tenors * spreads.spreads) / (1.0 - delta)
    return SurvivalCurve(spreads.tenors, 1.0 - one_minus)


def _premium_schedule(maturity: float, frequency: int) -> np.ndarray:
    """Payment dates rolled back from maturity; a short first stub if needed."""
    step = 1.0 / frequency
    n = int(math.floor(maturity / step + 1e-9))
    dates = maturity - step * np.arange(n + 1)
    dates = dates[dates > 1e-9][::-1]
    return dates


@dataclass
class _CdsGrid:
    accrual: np.ndarray  # premium accrual fractions
    pay_df: np.ndarray  # discount at payment dates
    pay_t: np.ndarray
    prot_lo: np.ndarray  # protection sub-interval bounds
    prot_hi: np.ndarray
    prot_df: np.ndarray  # discount at sub-interval midpoints


def _cds_grid(maturity: float, frequency: int, discount: DiscountCurve) -> _CdsGrid:
    pay = _premium_schedule(maturity, frequency)
    starts = np.concatenate(([0.0], pay[:-1]))
    lo, hi = [], []
    for a, b in zip(starts, pay):
        n = max(1, int(math.ceil((b - a) * 52 - 1e-9)))
        nodes = np.linspace(a, b, n + 1)
        lo.append(nodes[:-1])
        hi.append(nodes[1:])
    lo = np.concatenate(lo)
    hi = np.concatenate(hi)
    return _CdsGrid(
        accrual=pay - starts,
        pay_df=discount.at(pay),
        pay_t=pay,
        prot_lo=lo,
        prot_hi=hi,
        prot_df=discount.at(0.5 * (lo + hi)),
    )


def cds_legs(
    spread: float, recovery: float, grid: _CdsGrid, cumulative
) -> tuple[float, float]:
    """(premium leg, protection leg) per unit notional; ``cumulative(t)`` gives Lambda."""
    premium = spread * float(np.sum(grid.accrual * grid.pay_df * np.exp(-cumulative(grid.pay_t))))
    s_lo = np.exp(-cumulative(grid.prot_lo))
    s_hi = np.exp(-cumulative(grid.prot_hi))
    protection = (1.0 - recovery) * float(np.sum(grid.prot_df * (s_lo - s_hi)))
    return premium, protection


def bootstrap_survival_from_cds(
    quotes: CdsQuoteCurve, discount: DiscountCurve, max_hazard: float = 50.0
) -> tuple[SurvivalCurve, HazardCurve]:
    """Piecewise-constant hazard bootstrap of par CDS quotes.

    Quarterly (or ``premium_frequency``) premiums without accrual on default;
    the protection leg is integrated on a weekly sub-grid of each premium
    period. Each pillar's hazard is solved so that its CDS prices at par.
    """
    if discount.max_time < quotes.tenors[-1] - _DOMAIN_EPS:
        raise CurveDomainError(
            f"discount curve ends at {discount.max_time}y before last CDS tenor "
            f"{quotes.tenors[-1]}y"
        )
    delta = quotes.recovery
    solved: list[float] = []
    for k, (maturity, spread) in enumerate(zip(quotes.tenors, quotes.spreads)):
        grid = _cds_grid(float(maturity), quotes.premium_frequency, discount)
        prev_times = quotes.tenors[:k]

        def cumulative(t, h):
            rates = np.array(solved + [h])
            curve = HazardCurve(np.concatenate((prev_times, [maturity])), rates)
            return curve.cumulative_at(np.minimum(t, maturity))

        def pv(h):
            premium, protection = cds_legs(spread, delta, grid, lambda t: cumulative(t, h))
            return protection - premium

        scale = max(spread, 1e-4) * float(np.sum(grid.accrual * grid.pay_df))
        pv0 = pv(0.0)
        if abs(pv0) <= 1e-14 * scale:
            solved.append(0.0)
            continue
        if pv0 > 0.0:
            raise ValidationError(
                f"CDS quote at T={maturity:g}y implies a negative hazard on "
                f"({prev_times[-1] if k else 0.0:g}, {maturity:g}]"
            )
        if pv(max_hazard) < 0.0:
            raise NumericalError(f"hazard root not bracketed for CDS tenor T={maturity:g}y")
        try:
            h, info = optimize.brentq(pv, 0.0, max_hazard, xtol=1e-16, rtol=4 * np.finfo(float).eps,
                                      maxiter=200, full_output=True)
        except (RuntimeError, ValueError) as exc:
            raise NumericalError(f"hazard root solve failed for CDS tenor T={maturity:g}y") from exc
        if not info.converged:
            raise NumericalError(f"hazard root solve did not converge for CDS tenor T={maturity:g}y")
        solved.append(float(h))
    hazard = HazardCurve(quotes.tenors, np.array(solved))
    return hazard.survival(), hazard
