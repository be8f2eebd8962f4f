import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cirspread import (
    CdsQuoteCurve,
    CurveDomainError,
    DiscountCurve,
    HazardCurve,
    NumericalError,
    SpreadCurve,
    SurvivalCurve,
    ValidationError,
    bootstrap_survival_from_cds,
    curve_at,
    hazard_from_survival,
    implied_survival_from_spreads,
)
from cirspread.curves import _cds_grid, cds_legs


def brute_force_cds_pv(spread, recovery, hazard_rate, rate, maturity, freq=4, steps_per_year=5200):
    """Fine-grid CDS legs for flat hazard and flat rate, computed from scratch."""
    pay = np.arange(1, int(round(maturity * freq)) + 1) / freq
    premium = spread * np.sum(np.exp(-(hazard_rate + rate) * pay)) / freq
    n = int(round(maturity * steps_per_year))
    t = np.linspace(0.0, maturity, n + 1)
    mid = 0.5 * (t[1:] + t[:-1])
    dS = np.exp(-hazard_rate * t[:-1]) - np.exp(-hazard_rate * t[1:])
    protection = (1 - recovery) * np.sum(np.exp(-rate * mid) * dS)
    return protection - premium


class TestSurvivalAndHazard:
    def test_flat_one(self):
        s = SurvivalCurve([1.0, 5.0], [1.0, 1.0])
        h = hazard_from_survival(s)
        np.testing.assert_array_equal(h.rates, 0.0)
        np.testing.assert_array_equal(h.cumulative, 0.0)

    def test_forward_slopes(self):
        s = SurvivalCurve([1.0, 2.0], [math.exp(-0.01), math.exp(-0.03)])
        h = hazard_from_survival(s)
        np.testing.assert_allclose(h.rates, [0.01, 0.02], rtol=1e-12)
        assert h.rate(0.5) == pytest.approx(0.01)
        assert h.rate(1.0) == pytest.approx(0.01)
        assert h.rate(1.5) == pytest.approx(0.02)

    def test_round_trip(self, two_pillar):
        h = hazard_from_survival(two_pillar)
        np.testing.assert_allclose(np.exp(-h.cumulative), two_pillar.survival, rtol=0, atol=1e-12)

    def test_loglinear_midpoint(self):
        s = SurvivalCurve([1.0, 2.0], [math.exp(-0.01), math.exp(-0.03)])
        assert curve_at(s, 1.5) == pytest.approx(math.exp(-0.02), abs=1e-15)
        assert curve_at(s, 1.0) == math.exp(-0.01)
        assert curve_at(s, 0.0) == 1.0

    def test_no_extrapolation(self, two_pillar):
        with pytest.raises(CurveDomainError):
            curve_at(two_pillar, 2.5)
        with pytest.raises(CurveDomainError):
            two_pillar.at(-0.1)

    def test_rejects_increasing_survival(self):
        with pytest.raises(ValidationError):
            SurvivalCurve([1.0, 2.0], [0.9, 0.95])

    @given(st.lists(st.floats(0.0, 0.5), min_size=1, max_size=8), st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_constructed_curve_is_monotone(self, rates, seed):
        times = np.arange(1, len(rates) + 1, dtype=float)
        s = HazardCurve(times, rates).survival()
        u = np.sort(np.random.default_rng(seed).uniform(0, times[-1], 100))
        vals = s.at(np.concatenate(([0.0], u, times)))
        assert vals[0] == 1.0
        assert np.all(np.diff(s.at(np.concatenate(([0.0], u)))) <= 0)
        assert np.all((vals > 0) & (vals <= 1))

    def test_discount_forward(self):
        d = DiscountCurve([1.0, 2.0], [math.exp(-0.02), math.exp(-0.05)])
        assert d.forward(0.0) == pytest.approx(0.02)
        assert d.forward(1.5) == pytest.approx(0.03)
        assert d.at(0.0) == 1.0


class TestImpliedSurvival:
    def test_zero_spread(self):
        s = implied_survival_from_spreads(SpreadCurve([1.0, 5.0], [0.0, 0.0]), 0.4)
        np.testing.assert_array_equal(s.survival, 1.0)

    def test_arithmetic(self):
        s = implied_survival_from_spreads(SpreadCurve([5.0], [0.01]), 0.4)
        assert s.survival[0] == pytest.approx((math.exp(-0.05) - 0.4) / 0.6, rel=1e-14)
        assert s.survival[0] == pytest.approx(0.918716, abs=5e-7)

    def test_bound(self):
        bound = -math.log(0.4) / 10
        assert bound == pytest.approx(0.0916, abs=1e-4)
        implied_survival_from_spreads(SpreadCurve([10.0], [0.09]), 0.4)
        with pytest.raises(ValidationError, match="ln\\(delta\\)"):
            implied_survival_from_spreads(SpreadCurve([10.0], [0.10]), 0.4)


class TestBootstrap:
    def test_zero_premium(self):
        q = CdsQuoteCurve(None, [1.0, 3.0, 5.0], [0.0, 0.0, 0.0])
        s, h = bootstrap_survival_from_cds(q, DiscountCurve.flat(0.02, 5.0))
        np.testing.assert_array_equal(s.survival, 1.0)
        np.testing.assert_array_equal(h.rates, 0.0)

    def test_flat_credit_triangle(self):
        rate = 0.02
        q = CdsQuoteCurve(None, [5.0], [0.006], recovery=0.4)
        _, h = bootstrap_survival_from_cds(q, DiscountCurve.flat(rate, 5.0))
        lam = h.rates[0]
        # the fine-grid brute-force valuation prices the bootstrapped hazard at par
        assert abs(brute_force_cds_pv(0.006, 0.4, lam, rate, 5.0)) < 2e-7
        assert lam == pytest.approx(0.01, rel=0.02)

    def test_reprices_all_quotes(self):
        disc = DiscountCurve.flat(0.03, 10.0)
        q = CdsQuoteCurve(None, [1.0, 3.0, 5.0, 7.0, 10.0], [0.004, 0.006, 0.008, 0.009, 0.0095])
        _, h = bootstrap_survival_from_cds(q, disc)
        for T, spread in zip(q.tenors, q.spreads):
            grid = _cds_grid(float(T), 4, disc)
            prem, prot = cds_legs(spread, 0.4, grid, h.cumulative_at)
            assert abs(prot - prem) <= 1e-10 * prem

    def test_negative_hazard_rejected(self):
        q = CdsQuoteCurve(None, [1.0, 3.0], [0.02, 0.001])
        with pytest.raises(ValidationError, match="negative hazard"):
            bootstrap_survival_from_cds(q, DiscountCurve.flat(0.01, 3.0))

    def test_unbracketed_root(self):
        q = CdsQuoteCurve(None, [1.0], [0.5])
        with pytest.raises(NumericalError, match="T=1y"):
            bootstrap_survival_from_cds(q, DiscountCurve.flat(0.01, 1.0), max_hazard=0.1)

    def test_discount_must_cover(self):
        q = CdsQuoteCurve(None, [5.0], [0.01])
        with pytest.raises(CurveDomainError):
            bootstrap_survival_from_cds(q, DiscountCurve.flat(0.01, 3.0))

    @pytest.mark.parametrize("recovery", [0.0, 1.0, 1.2])
    def test_recovery_validated(self, recovery):
        with pytest.raises(ValidationError):
            CdsQuoteCurve(None, [5.0], [0.01], recovery=recovery)
