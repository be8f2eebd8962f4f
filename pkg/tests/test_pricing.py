import math

import numpy as np
import pytest
from scipy import integrate

from cirspread import (
    CirppModel,
    DiscountCurve,
    HullWhiteParams,
    PricingInputs,
    SpreadCurve,
    ValidationError,
    credit_spread,
    defaultable_bond,
    implied_survival_from_spreads,
    risk_free_bond,
    spread_from_prices,
)
from cirspread.pricing import zero_yield

from conftest import dominating_survival, flat_survival, random_feasible_params


@pytest.fixture
def flat_discount():
    return DiscountCurve.flat(0.02, 20.0)


@pytest.fixture
def inputs(model_flat2, flat_discount):
    return PricingInputs(0.4, model_flat2, flat_discount, HullWhiteParams(0.1, 0.01, 0.02))


class TestRiskFreeBond:
    def test_zero_maturity(self, inputs):
        assert risk_free_bond(inputs, 2.0, 2.0, 0.03) == pytest.approx(1.0, abs=1e-15)

    def test_initial_fit(self, model_flat2):
        disc = DiscountCurve([1.0, 3.0, 10.0], np.exp(-np.array([0.015, 0.06, 0.25])))
        hw = HullWhiteParams(0.1, 0.01, disc.forward(0.0))
        inp = PricingInputs(0.4, model_flat2, disc, hw)
        T = np.array([0.5, 1.0, 2.0, 3.0, 7.0, 10.0])
        np.testing.assert_allclose(risk_free_bond(inp, 0.0, T), disc.at(T), rtol=1e-10)

    def test_needs_hull_white(self, model_flat2):
        with pytest.raises(ValidationError):
            risk_free_bond(PricingInputs(0.4, model_flat2), 0.0, 1.0)

    def test_against_monte_carlo(self, model_flat2, flat_discount):
        a, sig, f0 = 0.1, 0.01, 0.02
        t, T, r_t = 1.0, 5.0, 0.025
        inp = PricingInputs(0.4, model_flat2, flat_discount, HullWhiteParams(a, sig, r_t))

        # r = x + alpha with x an OU process started at r_t - alpha(t)
        def alpha(s):
            return f0 + sig**2 / (2 * a**2) * (1 - math.exp(-a * s)) ** 2

        rng = np.random.default_rng(3)
        n, dt = 40_000, 1.0 / 100
        steps = int(round((T - t) / dt))
        x = np.full(n, r_t - alpha(t))
        decay = math.exp(-a * dt)
        sd = sig * math.sqrt((1 - decay**2) / (2 * a))
        integral = 0.5 * x
        for j in range(steps):
            x = x * decay + sd * rng.standard_normal(n)
            integral += x if j < steps - 1 else 0.5 * x
        integral *= dt
        int_alpha, _ = integrate.quad(alpha, t, T)
        samples = np.exp(-integral - int_alpha)
        est, se = samples.mean(), samples.std(ddof=1) / math.sqrt(n)
        assert abs(risk_free_bond(inp, t, T) - est) < 3 * se


class TestDefaultableBond:
    def test_full_recovery(self, model_flat2, flat_discount):
        inp = PricingInputs(1.0, model_flat2, flat_discount, HullWhiteParams(0.1, 0.01, 0.02))
        assert defaultable_bond(inp, 1.0, 4.0, 0.05) == risk_free_bond(inp, 1.0, 4.0)
        assert credit_spread(inp, 1.0, 4.0, 0.05) == 0.0

    def test_riskless_curve(self, global_params, flat_discount):
        model = CirppModel(global_params, flat_survival(0.0))
        inp = PricingInputs(0.4, model, flat_discount, HullWhiteParams(0.1, 0.01, 0.02))
        # S is one only for the no-default degenerate case at t = 0, lambda = psi + y0
        lam = model.initial_intensity()
        assert model.conditional_survival(0.0, 5.0, lam) == pytest.approx(1.0, abs=1e-15)
        assert defaultable_bond(inp, 0.0, 5.0, lam) == pytest.approx(risk_free_bond(inp, 0.0, 5.0), abs=1e-15)

    def test_decomposition_arithmetic(self):
        assert 0.9 * (0.4 + 0.6 * 0.95) == pytest.approx(0.873, abs=1e-15)


class TestCreditSpread:
    def test_initial_curve_round_trip(self, global_params):
        curve = SpreadCurve([1, 2, 3, 5, 7, 10], [0.004, 0.005, 0.0065, 0.008, 0.0088, 0.0095])
        model = CirppModel(global_params, implied_survival_from_spreads(curve, 0.4))
        inp = PricingInputs(0.4, model)
        sp = credit_spread(inp, 0.0, curve.tenors, model.initial_intensity())
        np.testing.assert_allclose(sp, curve.spreads, rtol=0, atol=1e-12)

    def test_inverse_arithmetic(self):
        assert -math.log(0.4 + 0.6 * 0.918716) / 5 == pytest.approx(0.0100, abs=1e-6)

    def test_zero_maturity_rejected(self, inputs):
        with pytest.raises(ValidationError):
            credit_spread(inputs, 2.0, 2.0, 0.02)

    def test_independent_of_hull_white(self, model_flat2, flat_discount):
        a = PricingInputs(0.4, model_flat2, flat_discount, HullWhiteParams(0.1, 0.01, 0.02))
        b = PricingInputs(0.4, model_flat2, flat_discount, HullWhiteParams(0.7, 0.05, -0.01))
        T = np.linspace(1.5, 10, 20)
        assert np.array_equal(credit_spread(a, 1.0, T, 0.03), credit_spread(b, 1.0, T, 0.03))

    def test_decreasing_in_delta_and_bounded(self, global_params):
        rng = np.random.default_rng(5)
        model = CirppModel(global_params, dominating_survival(global_params, rng, margin=0.02))
        deltas = np.linspace(0.05, 0.95, 19)
        for _ in range(50):
            t = rng.uniform(0, 8)
            T = t + rng.uniform(0.1, 10)
            lam = model.psi(t) + rng.uniform(0, 0.2)
            sp = np.array([credit_spread(PricingInputs(d, model), t, T, lam) for d in deltas])
            assert np.all(np.diff(sp) < 0)
            assert np.all(sp < -np.log(deltas) / (T - t))


class TestSpreadFromPrices:
    def test_equal_prices(self):
        assert spread_from_prices(0.9, 0.9, 0.0, 5.0) == 0.0

    def test_arithmetic(self):
        assert spread_from_prices(0.873, 0.9, 0.0, 5.0) == pytest.approx(0.006091841, abs=1e-9)

    def test_yield_difference(self):
        H, P = 0.873, 0.9
        assert spread_from_prices(H, P, 1.0, 6.0) == pytest.approx(
            zero_yield(H, 1.0, 6.0) - zero_yield(P, 1.0, 6.0), abs=1e-15)

    @pytest.mark.parametrize("H,P", [(0.95, 0.9), (0.0, 0.9), (-0.1, 0.9)])
    def test_inconsistent_prices(self, H, P):
        with pytest.raises(ValidationError):
            spread_from_prices(H, P, 0.0, 5.0)

    def test_composition(self):
        rng = np.random.default_rng(9)
        disc = DiscountCurve.flat(0.03, 20.0)
        for _ in range(20):
            params = random_feasible_params(rng)
            model = CirppModel(params, dominating_survival(params, rng, margin=0.01))
            hw = HullWhiteParams(rng.uniform(0.01, 1.0), rng.uniform(0, 0.03), rng.uniform(-0.01, 0.06))
            inp = PricingInputs(rng.uniform(0.05, 0.95), model, disc, hw)
            t = rng.uniform(0, 9)
            T = t + rng.uniform(0.05, 10)
            lam = model.psi(t) + rng.exponential(0.05)
            H = defaultable_bond(inp, t, T, lam)
            P = risk_free_bond(inp, t, T)
            assert H <= P
            assert spread_from_prices(H, P, t, T) == pytest.approx(credit_spread(inp, t, T, lam), abs=1e-12)
