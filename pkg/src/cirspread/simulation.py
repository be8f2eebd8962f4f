"""Exact-transition Monte Carlo of the CIR++ intensity and its spread curve.

Each path owns a counter-based Philox stream keyed by ``(seed, path index)``,
so the draws of path ``i`` do not depend on how many paths are simulated or
on how the work is split across processes. Transitions use the
Poisson-mixed Gamma representation of the noncentral chi-square law, applied
by inverse transform to the path's uniforms.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from cirspread.cir import WEEK, CirParams, CirppModel
from cirspread.errors import CurveDomainError, ValidationError
from cirspread.pricing import PricingInputs, credit_spread

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
_HALF_ULP = 2.0**-54


@dataclass(frozen=True)
class SimulationConfig:
    n_paths: int = 20_000
    horizon_weeks: int = 104
    maturities: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)
    seed: int = 0
    workers: int = 1
    step: float = WEEK

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ValidationError("n_paths must be >= 1")
        if self.horizon_weeks < 1:
            raise ValidationError("horizon must be at least one step")
        if not self.maturities or any(m <= 0 for m in self.maturities):
            raise ValidationError("spread maturities must be positive")
        if not self.step > 0:
            raise ValidationError("time step must be positive")
        object.__setattr__(self, "maturities", tuple(float(m) for m in self.maturities))

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(self.horizon_weeks + 1)


@dataclass(frozen=True)
class CirTransition:
    """Noncentral chi-square law of ``2 c y_t`` given ``y_s``."""

    c: float
    w: np.ndarray
    q: float

    @classmethod
    def build(cls, y_s, dt: float, params: CirParams) -> CirTransition:
        k, th, s = params.kappa, params.theta, params.sigma
        c = 2.0 * k / (s**2 * (-math.expm1(-k * dt)))
        w = c * np.asarray(y_s, dtype=float) * math.exp(-k * dt)
        return cls(c=c, w=w, q=2.0 * k * th / s**2 - 1.0)

    @property
    def dof(self) -> float:
        return 2.0 * self.q + 2.0

    @property
    def noncentrality(self) -> np.ndarray:
        return 2.0 * self.w


_EXACT_POISSON_MAX = 1e8


def _poisson_quantile(u, w):
    """Smallest ``n`` with ``P(N <= n) >= u`` for ``N ~ Poisson(w)``, elementwise.

    Above ``w = 1e8`` the cdf can no longer resolve unit steps in double
    precision; the Cornish-Fisher value is used as is (relative error far below
    that of the Gamma inversion it feeds).
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    z = special.ndtri(u)
    n = np.maximum(np.floor(w + np.sqrt(w) * z + (z * z - 1.0) / 6.0), 0.0)
    n = np.where(w > 0.0, n, 0.0)
    exact = (w > 0.0) & (w < _EXACT_POISSON_MAX)
    up = exact & (special.pdtr(n, w) < u)
    while np.any(up):
        n[up] += 1.0
        up[up] = special.pdtr(n[up], w[up]) < u[up]
    down = exact & (n > 0.0) & (special.pdtr(n - 1.0, w) >= u)
    while np.any(down):
        n[down] -= 1.0
        down[down] = (n[down] > 0.0) & (special.pdtr(n[down] - 1.0, w[down]) >= u[down])
    return n


def _transition_from_uniforms(y_s, dt, params: CirParams, u_mix, u_gamma):
    tr = CirTransition.build(y_s, dt, params)
    w, u_mix = np.broadcast_arrays(tr.w, np.asarray(u_mix, dtype=float))
    n = _poisson_quantile(u_mix, w).reshape(w.shape)
    return special.gammaincinv(tr.q + 1.0 + n, u_gamma) / tr.c


def _open_uniforms(rng: np.random.Generator, size) -> np.ndarray:
    # random() lies on the 2^-53 lattice in [0, 1); shift to the open interval
    return rng.random(size) + _HALF_ULP


def cir_transition_sample(y_s, dt: float, params: CirParams, rng: np.random.Generator):
    """Draw ``y_t`` given ``y_s`` after ``dt`` years from the exact CIR law."""
    if dt <= 0:
        raise ValidationError("dt must be positive")
    y_s = np.asarray(y_s, dtype=float)
    if np.any(y_s < 0.0):
        raise ValidationError("CIR state must be non-negative")
    u = _open_uniforms(rng, (2,) + y_s.shape)
    out = _transition_from_uniforms(y_s, dt, params, u[0], u[1])
    return float(out) if out.ndim == 0 else out


def path_stream(seed: int, path: int) -> np.random.Generator:
    """Counter-based stream for one path: Philox keyed by (seed, path)."""
    return np.random.Generator(np.random.Philox(key=(seed & _MASK64) | (path << 64)))


def _simulate_factor_block(args) -> np.ndarray:
    params, y0, dt, n_steps, seed, first, last = args
    n = last - first
    u = np.empty((n, n_steps, 2))
    for j, path in enumerate(range(first, last)):
        u[j] = _open_uniforms(path_stream(seed, path), (n_steps, 2))
    y = np.empty((n, n_steps + 1))
    y[:, 0] = y0
    for k in range(n_steps):
        y[:, k + 1] = _transition_from_uniforms(y[:, k], dt, params, u[:, k, 0], u[:, k, 1])
    return y


def simulate_factor(params: CirParams, config: SimulationConfig) -> np.ndarray:
    """CIR factor paths ``y`` of shape (n_paths, horizon_weeks + 1) starting at y0."""
    bounds = np.linspace(0, config.n_paths, max(1, config.workers) + 1).astype(int)
    jobs = [
        (params, params.y0, config.step, config.horizon_weeks, config.seed, int(a), int(b))
        for a, b in zip(bounds[:-1], bounds[1:])
        if b > a
    ]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            blocks = list(pool.map(_simulate_factor_block, jobs))
    else:
        blocks = [_simulate_factor_block(job) for job in jobs]
    return np.concatenate(blocks, axis=0)


@dataclass
class SpreadSurfacePaths:
    """Simulated intensities (path, week) and spreads (path, week, maturity)."""

    model: CirppModel
    delta: float
    times: np.ndarray
    maturities: np.ndarray
    lambdas: np.ndarray
    psi: np.ndarray
    spreads: np.ndarray | None = field(default=None, repr=False)

    @property
    def factor(self) -> np.ndarray:
        return self.lambdas - self.psi[None, :]

    @property
    def n_paths(self) -> int:
        return self.lambdas.shape[0]

    @property
    def n_weeks(self) -> int:
        return self.lambdas.shape[1]

    def log_survival_at_week(self, week: int) -> np.ndarray:
        t = self.times[week]
        return self.model.log_conditional_survival(
            t, t + self.maturities[None, :], self.lambdas[:, week, None], psi_t=self.psi[week]
        )

    def spreads_at_week(self, week: int) -> np.ndarray:
        """(path, maturity) spread panel at one week, computed on demand if not stored."""
        if self.spreads is not None:
            return self.spreads[:, week, :]
        t = self.times[week]
        inputs = PricingInputs(self.delta, self.model)
        return credit_spread(inputs, t, t + self.maturities[None, :], self.lambdas[:, week, None])


def simulate_paths(
    model: CirppModel, delta: float, config: SimulationConfig, keep_spreads: bool = True
) -> SpreadSurfacePaths:
    if not 0.0 < delta <= 1.0:
        raise ValidationError("recovery delta must lie in (0, 1]")
    times = config.times
    maturities = np.asarray(config.maturities)
    needed = times[-1] + maturities.max()
    if needed > model.max_time + 1e-12:
        raise CurveDomainError(
            f"simulation needs curves up to {needed:.4f}y (horizon + longest tenor) "
            f"but the survival curve ends at {model.max_time:.4f}y"
        )
    if abs(config.step - WEEK) < 1e-15:
        psi_grid = model.psi_weekly(np.arange(times.size))
    else:
        psi_grid = model.psi(times)
    y = simulate_factor(model.params, config)
    lambdas = y + psi_grid[None, :]
    paths = SpreadSurfacePaths(model, delta, times, maturities, lambdas, psi_grid)
    if keep_spreads:
        spreads = np.empty((paths.n_paths, times.size, maturities.size))
        for k in range(times.size):
            spreads[:, k, :] = paths.spreads_at_week(k)
        paths.spreads = spreads
    log.debug("simulated %d paths x %d weeks", paths.n_paths, times.size - 1)
    return paths


DEFAULT_LEVELS = (0.01, 0.10, 0.20, 0.30, 0.70, 0.80, 0.90, 0.99)


@dataclass(frozen=True)
class SpreadSummary:
    weeks: np.ndarray
    maturities: np.ndarray
    levels: tuple[float, ...]
    mean: np.ndarray  # (week, maturity)
    quantiles: np.ndarray  # (level, week, maturity)


def _check_levels(levels) -> tuple[float, ...]:
    levels = tuple(float(q) for q in levels)
    if any(not 0.0 < q < 1.0 for q in levels):
        raise ValidationError("quantile levels must lie in (0, 1)")
    return levels


def summarize(paths: SpreadSurfacePaths, quantile_levels=DEFAULT_LEVELS, weeks=None) -> SpreadSummary:
    """Per (week, maturity) mean and type-7 empirical quantiles across paths."""
    levels = _check_levels(quantile_levels)
    if paths.n_paths < 1:
        raise ValidationError("no paths to summarize")
    weeks = np.arange(paths.n_weeks) if weeks is None else np.asarray(weeks, dtype=int)
    mean = np.empty((weeks.size, paths.maturities.size))
    quant = np.empty((len(levels), weeks.size, paths.maturities.size))
    for i, k in enumerate(weeks):
        panel = paths.spreads_at_week(int(k))
        mean[i] = panel.mean(axis=0)
        quant[:, i, :] = np.quantile(panel, levels, axis=0, method="linear")
    return SpreadSummary(weeks, paths.maturities.copy(), levels, mean, quant)


def histogram(paths: SpreadSurfacePaths, week: int, maturity: float, bins=50):
    """Histogram of simulated spreads for one (week, maturity) slice."""
    j = int(np.argmin(np.abs(paths.maturities - maturity)))
    if abs(paths.maturities[j] - maturity) > 1e-12:
        raise ValidationError(f"maturity {maturity} was not simulated")
    counts, edges = np.histogram(paths.spreads_at_week(week)[:, j], bins=bins)
    return counts, edges
