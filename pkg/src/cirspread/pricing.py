"""Risk-free and defaultable zero-coupon bonds and the credit spread.

Prices are pre-default (no default in the pricing window). The spread does
not depend on the risk-free model, so ``credit_spread`` never touches the
discount curve or the Hull-White parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cirspread.cir import CirppModel
from cirspread.curves import DiscountCurve, SurvivalCurve
from cirspread.errors import ValidationError


@dataclass(frozen=True)
class HullWhiteParams:
    a: float
    sigma_r: float
    r_t: float

    def __post_init__(self) -> None:
        if not self.a > 0.0:
            raise ValidationError("Hull-White mean reversion a must be > 0")
        if not self.sigma_r >= 0.0:
            raise ValidationError("Hull-White sigma_r must be >= 0")


@dataclass(frozen=True)
class PricingInputs:
    delta: float
    model: CirppModel
    discount: DiscountCurve | None = None
    hw: HullWhiteParams | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.delta <= 1.0:
            raise ValidationError("recovery delta must lie in (0, 1]")

    @property
    def market_survival(self) -> SurvivalCurve:
        return self.model.survival


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def hull_white_factors(discount: DiscountCurve, hw: HullWhiteParams, t, T):
    """``(A^HW(t, T), B^HW(t, T))`` fitted to the initial discount curve."""
    t = np.asarray(t, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(t < 0.0) or np.any(T < t):
        raise ValidationError("Hull-White bond requires 0 <= t <= T")
    a, s = hw.a, hw.sigma_r
    B = -np.expm1(-a * (T - t)) / a
    A = (discount.at(T) / discount.at(t)) * np.exp(
        B * discount.forward(t) - s**2 / (4.0 * a) * (-np.expm1(-2.0 * a * t)) * B**2
    )
    return A, B


def risk_free_bond(inputs: PricingInputs, t, T, r_t=None):
    """Hull-White zero-coupon bond ``P(t, T) = A^HW e^{-B^HW r(t)}``."""
    if inputs.hw is None or inputs.discount is None:
        raise ValidationError("risk_free_bond needs a discount curve and Hull-White parameters")
    r = inputs.hw.r_t if r_t is None else r_t
    A, B = hull_white_factors(inputs.discount, inputs.hw, t, T)
    return _scalar(A * np.exp(-B * np.asarray(r, dtype=float)))


def _survival_gap(inputs: PricingInputs, t, T, lambda_t):
    """``1 - S(t, T)`` without cancellation for S close to one."""
    return -np.expm1(inputs.model.log_conditional_survival(t, T, lambda_t))


def defaultable_bond(inputs: PricingInputs, t, T, lambda_t, r_t=None):
    """``H(t, T) = P(t, T) [delta + (1 - delta) S(t, T)]``."""
    P = risk_free_bond(inputs, t, T, r_t)
    gap = _survival_gap(inputs, t, T, lambda_t)
    return _scalar(P * (1.0 - (1.0 - inputs.delta) * gap))


def credit_spread(inputs: PricingInputs, t, T, lambda_t):
    """``Sp(t, T) = -ln[delta + (1 - delta) S(t, T)] / (T - t)``, continuously compounded."""
    tau = np.asarray(T, dtype=float) - np.asarray(t, dtype=float)
    if np.any(tau <= 0.0):
        raise ValidationError("credit_spread requires T > t")
    gap = _survival_gap(inputs, t, T, lambda_t)
    return _scalar(-np.log1p(-(1.0 - inputs.delta) * gap) / tau)


def zero_yield(price, t, T):
    """Continuously-compounded yield ``-ln(price) / (T - t)``."""
    return _scalar(-np.log(np.asarray(price, dtype=float)) / (np.asarray(T) - np.asarray(t)))


def spread_from_prices(H, P, t, T):
    """Excess yield of the risky bond, ``-ln(H / P) / (T - t)``."""
    H = np.asarray(H, dtype=float)
    P = np.asarray(P, dtype=float)
    tau = np.asarray(T, dtype=float) - np.asarray(t, dtype=float)
    if np.any(tau <= 0.0):
        raise ValidationError("spread_from_prices requires T > t")
    if np.any(H <= 0.0):
        raise ValidationError("defaultable bond price must be positive")
    if np.any(H > P):
        raise ValidationError("defaultable bond price exceeds the risk-free price")
    return _scalar(-np.log(H / P) / tau)
