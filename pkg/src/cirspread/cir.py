"""Closed-form CIR/CIR++ analytics for the default intensity.

The intensity is ``lambda(t) = y(t) + psi(t)`` where ``y`` follows a CIR
square-root diffusion and the deterministic shift ``psi`` makes the model
reproduce the market survival curve at time zero.

Affine factors are written in terms of ``exp(-h * tau)`` so that nothing
overflows for long horizons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from cirspread.curves import HazardCurve, SurvivalCurve
from cirspread.errors import CurveDomainError, ValidationError

WEEK = 1.0 / 52.0


@dataclass(frozen=True)
class CirParams:
    kappa: float
    theta: float
    sigma: float
    y0: float

    def __post_init__(self) -> None:
        values = (self.kappa, self.theta, self.sigma, self.y0)
        if not all(math.isfinite(v) and v > 0.0 for v in values):
            raise ValidationError(f"CIR parameters must be finite and positive, got {values}")
        if not self.feller_holds():
            raise ValidationError(
                f"Feller condition 2*kappa*theta >= sigma^2 violated: "
                f"{2 * self.kappa * self.theta:.6e} < {self.sigma ** 2:.6e}"
            )

    def feller_holds(self) -> bool:
        return 2.0 * self.kappa * self.theta >= self.sigma**2 * (1.0 - 1e-12)

    @property
    def h(self) -> float:
        return math.sqrt(self.kappa**2 + 2.0 * self.sigma**2)

    @property
    def feller_exponent(self) -> float:
        """``2 kappa theta / sigma^2``, the power on the A factor."""
        return 2.0 * self.kappa * self.theta / self.sigma**2

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.kappa, self.theta, self.sigma, self.y0)

    def to_dict(self) -> dict[str, float]:
        return {"kappa": self.kappa, "theta": self.theta, "sigma": self.sigma, "y0": self.y0}


@dataclass(frozen=True)
class AffineFactors:
    h: float
    A: float | np.ndarray
    B: float | np.ndarray


def _denominator(params: CirParams, g):
    # 2h e^{-tau h} + (kappa + h)(1 - e^{-tau h})  ==  e^{-tau h} * [2h + (kappa+h)(e^{tau h} - 1)]
    h = params.h
    return 2.0 * h * g + (params.kappa + h) * (1.0 - g)


def log_a_factor(params: CirParams, tau):
    tau = np.asarray(tau, dtype=float)
    h = params.h
    g = np.exp(-h * tau)
    return params.feller_exponent * (
        math.log(2.0 * h) + 0.5 * (params.kappa - h) * tau - np.log(_denominator(params, g))
    )


def b_factor(params: CirParams, tau):
    tau = np.asarray(tau, dtype=float)
    g = np.exp(-params.h * tau)
    return 2.0 * (-np.expm1(-params.h * tau)) / _denominator(params, g)


def affine_factors(params: CirParams, t, T) -> AffineFactors:
    """CIR bond factors ``A(t, T)`` and ``B(t, T)`` (they depend on ``T - t`` only)."""
    tau = np.asarray(T, dtype=float) - np.asarray(t, dtype=float)
    if np.any(tau < 0.0):
        raise ValidationError("affine_factors requires t <= T")
    A = np.exp(log_a_factor(params, tau))
    B = b_factor(params, tau)
    if tau.ndim == 0:
        return AffineFactors(params.h, float(A), float(B))
    return AffineFactors(params.h, A, B)


def shift_derivatives(params: CirParams, t):
    """``D(t) = d/dt ln A(0, t)`` and ``E(t) = d/dt B(0, t)``."""
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0.0):
        raise ValidationError("shift_derivatives requires t >= 0")
    h, k = params.h, params.kappa
    g = np.exp(-h * ta)
    den = _denominator(params, g)
    D = params.feller_exponent * (0.5 * (k + h) - h * (k + h) / den)
    E = 4.0 * h * h * g / den**2
    if ta.ndim == 0:
        return float(D), float(E)
    return D, E


def intensity_variance(params: CirParams, T):
    """Model variance of the intensity at horizon ``T``."""
    T = np.asarray(T, dtype=float)
    k, th, s, y0 = params.as_tuple()
    e1 = np.exp(-k * T)
    var = y0 * s**2 / k * (e1 - e1 * e1) + th * s**2 / (2.0 * k) * (1.0 - e1) ** 2
    return float(var) if var.ndim == 0 else var


def intensity_volatility(params: CirParams, T):
    return np.sqrt(intensity_variance(params, T))


@dataclass(frozen=True)
class CirppModel:
    """CIR++ intensity fitted to a market survival curve."""

    params: CirParams
    survival: SurvivalCurve
    hazard: HazardCurve = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "hazard", self.survival.hazard())

    @property
    def max_time(self) -> float:
        return self.survival.max_time

    def psi(self, t):
        ta = np.asarray(t, dtype=float)
        D, E = shift_derivatives(self.params, np.maximum(ta, 0.0))
        out = self.hazard.rate(ta) + D - self.params.y0 * E
        return float(out) if ta.ndim == 0 else out

    @cached_property
    def _weekly_psi(self) -> np.ndarray:
        n = int(math.floor(self.max_time / WEEK + 1e-9))
        return self.psi(WEEK * np.arange(n + 1))

    def psi_weekly(self, weeks) -> np.ndarray:
        """``psi`` on the weekly grid ``t = week / 52``, served from a cache."""
        w = np.asarray(weeks)
        if np.any(w < 0) or np.any(w >= self._weekly_psi.size):
            t = WEEK * np.asarray(w, dtype=float)
            return self.psi(t)
        return self._weekly_psi[w]

    def initial_intensity(self) -> float:
        return self.params.y0 + self.psi(0.0)

    def log_conditional_survival(self, t, T, lambda_t, psi_t=None):
        t = np.asarray(t, dtype=float)
        T = np.asarray(T, dtype=float)
        lam = np.asarray(lambda_t, dtype=float)
        if np.any(t < 0.0) or np.any(T < t):
            raise ValidationError("conditional survival requires 0 <= t <= T")
        if np.any(T > self.max_time + 1e-12):
            raise CurveDomainError(
                f"maturity {float(np.max(T))} beyond survival curve end {self.max_time}"
            )
        if not np.all(np.isfinite(lam)):
            raise ValidationError("lambda_t must be finite")
        p = self.params
        if psi_t is None:
            psi_t = self.psi(t)
        y_t = lam - psi_t
        log_fit = (
            self.survival.log_at(T) - self.survival.log_at(t)
            + log_a_factor(p, t) - log_a_factor(p, T)
            + p.y0 * (b_factor(p, T) - b_factor(p, t))
        )
        return log_fit + log_a_factor(p, T - t) - b_factor(p, T - t) * y_t

    def conditional_survival(self, t, T, lambda_t):
        out = np.exp(self.log_conditional_survival(t, T, lambda_t))
        return float(out) if np.ndim(out) == 0 else out


def psi(model: CirppModel, t):
    """Deterministic shift ``psi(t) = lambda^m(t) + D(t) - y0 E(t)``."""
    return model.psi(t)


def conditional_survival(model: CirppModel, market_survival: SurvivalCurve | None, t, T, lambda_t):
    """``S(t, T)`` given the intensity ``lambda_t`` observed at ``t``."""
    if market_survival is not None and market_survival is not model.survival:
        model = CirppModel(model.params, market_survival)
    return model.conditional_survival(t, T, lambda_t)
