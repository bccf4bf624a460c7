import math

import numpy as np
import pytest

from heavytail.compound import (
    CompoundModel,
    Portfolio,
    exponent_on_cut,
    tail,
    tail_compound_lognormal,
    tail_compound_pareto,
    tail_portfolio,
    tail_single,
)
from heavytail.errors import DomainError, EmptyPortfolio
from heavytail.severity import Frequency, LognormalTail, ParetoTail, SplicedSeverity, UniformBody
from heavytail.specfun import normal_cdf, poisson_tail_exact

X0 = 1e5


def pareto_sev(omega=0.35, alpha=2.2, x0=X0, lo=4e4):
    return SplicedSeverity(omega, x0, UniformBody(lo, x0), ParetoTail(alpha, x0))


def benchmark_model(rate=20.0):
    return CompoundModel(pareto_sev(), Frequency(rate))


def lognormal_model(rate=5.0, mu=10.0, sigma=2.0):
    return CompoundModel(SplicedSeverity(1.0, 0.0, None, LognormalTail(mu, sigma)), Frequency(rate))


class TestSingle:
    @pytest.mark.parametrize("s", [1.5e5, 1e6, 1e7, 1e9])
    def test_pareto_closed_form(self, s):
        r = tail_single(pareto_sev(), s)
        assert r.prob == pytest.approx(0.35 * (s / X0) ** -1.2, rel=1e-10)

    def test_example_value(self):
        assert tail_single(pareto_sev(), 1e6).prob == pytest.approx(0.02208350, rel=1e-6)

    def test_no_tail_weight(self):
        r = tail_single(pareto_sev(omega=0.0), 1e6)
        assert r.prob == 0.0 and "NoCutDiscontinuity" in r.warnings

    def test_below_threshold(self):
        with pytest.raises(DomainError):
            tail_single(pareto_sev(), X0)

    def test_lognormal_far_tail(self):
        sev = SplicedSeverity(1.0, 0.0, None, LognormalTail(0.0, 1.0))
        r = tail_single(sev, math.exp(12.0))
        assert r.prob / normal_cdf(-12.0) == pytest.approx(1.0, rel=0.15)


class TestCompoundPareto:
    def test_needs_two_thresholds(self):
        with pytest.raises(DomainError):
            tail_compound_pareto(benchmark_model(), 1.9 * X0)

    def test_rejects_lognormal(self):
        with pytest.raises(DomainError):
            tail_compound_pareto(lognormal_model(), 1e8)

    @pytest.mark.parametrize("rate", [1e-3, 1e-5])
    def test_small_rate_linearisation(self, rate):
        r = tail_compound_pareto(benchmark_model(rate), 1e6)
        # deviation is first order in the rate
        assert r.prob / rate / (0.35 * 10 ** -1.2) == pytest.approx(1.0, rel=20 * rate)

    def test_poisson_term_diagnostics(self):
        s = 5e6
        on = tail_compound_pareto(benchmark_model(), s)
        off = tail_compound_pareto(benchmark_model(), s, include_poisson_term=False)
        d = on.diagnostics
        assert d["n0"] == 50 and d["poisson_term_included"]
        assert d["poisson_term"] == poisson_tail_exact(20.0, 50)
        assert on.prob - off.prob == pytest.approx(d["poisson_term"], rel=1e-6)

    def test_poisson_term_negligible_far_out(self):
        rate = 20.0
        n0 = math.ceil(rate + 12 * math.sqrt(rate))
        r = tail_compound_pareto(benchmark_model(rate), n0 * X0)
        assert r.diagnostics["poisson_term"] <= 1e-15

    @pytest.mark.slow
    def test_leading_behaviour_improves(self):
        m = CompoundModel(pareto_sev(omega=1.0), Frequency(1.0))
        devs = []
        for shat in (1e2, 1e3, 1e4):
            p = tail_compound_pareto(m, shat * X0).prob
            devs.append(abs(p / shat ** -1.2 - 1.0))
        assert devs[0] > devs[1] > devs[2]

    def test_decreasing_in_s(self):
        ps = [tail_compound_pareto(benchmark_model(), s).prob for s in np.geomspace(5e6, 1e9, 8)]
        assert all(b < a for a, b in zip(ps, ps[1:]))

    def test_increasing_in_rate_and_omega(self):
        s = 1e7
        by_rate = [tail_compound_pareto(benchmark_model(r), s).prob for r in (5.0, 10.0, 20.0)]
        assert by_rate[0] < by_rate[1] < by_rate[2]
        by_omega = [
            tail_compound_pareto(CompoundModel(pareto_sev(omega=w), Frequency(5.0)), s).prob
            for w in (0.1, 0.35, 0.8)
        ]
        assert by_omega[0] < by_omega[1] < by_omega[2]

    def test_dispatch(self):
        assert tail(benchmark_model(), 1e7).prob == tail_compound_pareto(benchmark_model(), 1e7).prob


class TestCompoundLognormal:
    def test_rejects_pareto(self):
        with pytest.raises(DomainError):
            tail_compound_lognormal(benchmark_model(), 1e7)

    def test_no_tail_weight(self):
        x0 = math.exp(10.0)
        sev = SplicedSeverity(0.0, x0, UniformBody(0.0, x0), LognormalTail(10.0, 2.0, x0))
        r = tail_compound_lognormal(CompoundModel(sev, Frequency(5.0)), 1e7)
        assert r.prob == 0.0 and "NoCutDiscontinuity" in r.warnings

    @pytest.mark.parametrize("order", [1, 2])
    def test_small_rate_linearisation(self, order):
        rate = 1e-5
        m = lognormal_model(rate)
        r = tail_compound_lognormal(m, 1e7, order=order)
        single = tail_single(m.severity, 1e7, order=order)
        assert r.prob / rate == pytest.approx(single.prob, rel=1e-4)

    def test_near_mc_quantile(self):
        # the 99.9% quantile of this model is about 2.6e7 by simulation
        r = tail_compound_lognormal(lognormal_model(), 2.6e7)
        assert 5e-4 < r.prob < 2e-3
        assert r.diagnostics["w2_at_peak"] > 1.0

    def test_decreasing_in_s(self):
        ps = [tail_compound_lognormal(lognormal_model(), s).prob for s in np.geomspace(1e7, 1e9, 6)]
        assert all(b < a for a, b in zip(ps, ps[1:]))


class TestPortfolio:
    def test_empty(self):
        with pytest.raises(EmptyPortfolio):
            Portfolio(())

    def test_single_unit_identity(self):
        for s in (5e6, 2e7):
            a = tail_portfolio(Portfolio((benchmark_model(),)), s).prob
            b = tail_compound_pareto(benchmark_model(), s).prob
            assert a == pytest.approx(b, rel=1e-12)

    def test_single_lognormal_unit_identity(self):
        a = tail_portfolio(Portfolio((lognormal_model(),)), 3e7).prob
        b = tail_compound_lognormal(lognormal_model(), 3e7).prob
        assert a == pytest.approx(b, rel=1e-12)

    def test_two_identical_units(self):
        s = 2e7
        two = tail_portfolio(Portfolio((benchmark_model(10.0), benchmark_model(10.0))), s).prob
        one = tail_compound_pareto(benchmark_model(20.0), s).prob
        assert two == pytest.approx(one, rel=1e-10)

    def test_exponent_additivity(self):
        a = (pareto_sev(), 20.0)
        b = (pareto_sev(omega=0.2, alpha=1.8, x0=5e4, lo=1e4), 10.0)
        x = np.random.default_rng(3).uniform(1e-9, 2e-4, 50)
        re_ab, im_ab = exponent_on_cut([a, b], x)
        re_a, im_a = exponent_on_cut([a], x)
        re_b, im_b = exponent_on_cut([b], x)
        np.testing.assert_allclose(re_ab, re_a + re_b, rtol=1e-14)
        np.testing.assert_allclose(im_ab, im_a + im_b, rtol=1e-14)

    def test_factor_mode_is_weighted_average(self):
        units = (benchmark_model(10.0), benchmark_model(5.0))
        p = Portfolio(units, factor_weights=(1.0, 3.0), factor_scales=((0.5, 1.0), (1.5, 2.0)))
        assert p.mixing == "factor" and p.factor_weights == (0.25, 0.75)
        s = 2e7
        expect = 0.25 * tail_portfolio(Portfolio((units[0].scaled(0.5), units[1])), s).prob + 0.75 * tail_portfolio(
            Portfolio((units[0].scaled(1.5), units[1].scaled(2.0))), s
        ).prob
        assert tail_portfolio(p, s).prob == pytest.approx(expect, rel=1e-12)

    def test_factor_validation(self):
        with pytest.raises(DomainError):
            Portfolio((benchmark_model(),), factor_weights=(1.0,))
        with pytest.raises(DomainError):
            Portfolio((benchmark_model(),), factor_weights=(1.0,), factor_scales=((0.0,),))
