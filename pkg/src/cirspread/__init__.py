"""CIR++ default-intensity model of the credit-spread term structure."""

from cirspread.errors import CurveDomainError, NumericalError, ValidationError
from cirspread.curves import (
    CdsQuoteCurve,
    DiscountCurve,
    HazardCurve,
    SpreadCurve,
    SurvivalCurve,
    bootstrap_survival_from_cds,
    curve_at,
    hazard_from_survival,
    implied_survival_from_spreads,
)
from cirspread.cir import (
    AffineFactors,
    CirParams,
    CirppModel,
    affine_factors,
    conditional_survival,
    intensity_variance,
    psi,
    shift_derivatives,
)
from cirspread.pricing import (
    HullWhiteParams,
    PricingInputs,
    credit_spread,
    defaultable_bond,
    risk_free_bond,
    spread_from_prices,
)

__version__ = "0.1.0"

# Reference parameter sets for the global (2009-2024) and present (2022-2024) windows.
GLOBAL_SCENARIO = CirParams(kappa=5.138e-1, theta=1.497e-2, sigma=8.904e-2, y0=4.348e-2)
PRESENT_SCENARIO = CirParams(kappa=9.186e-2, theta=5.519e-4, sigma=1.006e-2, y0=3.074e-2)

__all__ = [
    "AffineFactors",
    "CdsQuoteCurve",
    "CirParams",
    "CirppModel",
    "CurveDomainError",
    "DiscountCurve",
    "GLOBAL_SCENARIO",
    "HazardCurve",
    "HullWhiteParams",
    "NumericalError",
    "PRESENT_SCENARIO",
    "PricingInputs",
    "SpreadCurve",
    "SurvivalCurve",
    "ValidationError",
    "affine_factors",
    "bootstrap_survival_from_cds",
    "conditional_survival",
    "credit_spread",
    "curve_at",
    "defaultable_bond",
    "hazard_from_survival",
    "implied_survival_from_spreads",
    "intensity_variance",
    "psi",
    "risk_free_bond",
    "shift_derivatives",
    "spread_from_prices",
]
