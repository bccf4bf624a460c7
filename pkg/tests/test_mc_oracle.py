import csv
import math

import numpy as np
import pytest

from heavytail.compound import CompoundModel, Portfolio
from heavytail.errors import BodyNotSamplable, DomainError
from heavytail.mc_oracle import (
    McConfig,
    dump_totals_csv,
    estimate_tail_prob,
    nearest_rank,
    sample_body,
    sample_severity,
    simulate_quantile,
    simulate_totals,
)
from heavytail.severity import (
    Frequency,
    LognormalTail,
    MomentBody,
    ParetoTail,
    PointMassBody,
    SplicedSeverity,
    UniformBody,
)
from heavytail.specfun import poisson_tail_exact

X0 = 1e5


def benchmark_model(rate=20.0):
    sev = SplicedSeverity(0.35, X0, UniformBody(4e4, X0), ParetoTail(2.2, X0))
    return CompoundModel(sev, Frequency(rate))


def point_mass_model(c=2.5, rate=3.0):
    sev = SplicedSeverity(0.0, X0, PointMassBody(c), ParetoTail(2.2, X0))
    return CompoundModel(sev, Frequency(rate))


class TestSamplers:
    def test_pareto_median(self):
        sev = SplicedSeverity(1.0, X0, None, ParetoTail(2.2, X0))
        assert sample_severity(sev, 0.5) == pytest.approx(1e5 * 0.5 ** (-1 / 1.2), rel=1e-14)
        assert sample_severity(sev, 0.5) == pytest.approx(178180, rel=1e-5)

    def test_pareto_at_threshold(self):
        sev = SplicedSeverity(1.0, X0, None, ParetoTail(2.2, X0))
        assert sample_severity(sev, 1.0) == X0

    def test_untruncated_lognormal(self):
        sev = SplicedSeverity(1.0, 0.0, None, LognormalTail(1.0, 0.5))
        u = np.array([0.1, 0.5, 0.9])
        from scipy.stats import lognorm

        np.testing.assert_allclose(sample_severity(sev, u), lognorm.isf(u, 0.5, scale=math.e), rtol=1e-12)

    def test_truncated_lognormal_above_threshold(self):
        x0 = math.exp(1.0)
        sev = SplicedSeverity(1.0, x0, None, LognormalTail(0.0, 1.0, x0))
        x = sample_severity(sev, np.linspace(1e-6, 1.0, 101))
        assert np.all(x >= x0 * (1 - 1e-12))
        assert x[-1] == pytest.approx(x0, rel=1e-12)

    def test_mixture_pick(self):
        sev = SplicedSeverity(0.35, X0, UniformBody(4e4, X0), ParetoTail(2.2, X0))
        x = sample_severity(sev, np.array([0.5, 0.5]), pick=np.array([0.1, 0.9]))
        assert x[0] == pytest.approx(178180, rel=1e-5)
        assert x[1] == pytest.approx(7e4)

    def test_body_variants(self):
        assert sample_body(PointMassBody(3.0), 0.2, X0) == 3.0
        with pytest.raises(BodyNotSamplable):
            sample_body(MomentBody(0.5, 0.1), 0.2, X0)

    def test_pareto_ccdf_matches(self):
        sev = SplicedSeverity(1.0, X0, None, ParetoTail(2.2, X0))
        u = 1.0 - np.random.default_rng(17).random(10 ** 6)
        x = sample_severity(sev, u)
        for r in (2.0, 10.0):
            p = r ** -1.2
            phat = np.mean(x > r * X0)
            assert abs(phat - p) <= 4 * math.sqrt(p * (1 - p) / x.size)


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            {"n_paths": 9999},
            {"n_reps": 0},
            {"percentile": 1.0},
            {"percentile": 0.0},
            {"seed": -1},
            {"seed": 2 ** 64},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            McConfig(**kw)


def test_nearest_rank():
    v = np.arange(1.0, 11.0)
    assert nearest_rank(v, 0.9) == 9.0
    assert nearest_rank(v, 0.91) == 10.0
    assert nearest_rank(v, 0.01) == 1.0


class TestSimulation:
    def test_almost_no_events(self):
        cfg = McConfig(n_paths=20_000, n_reps=2)
        e = simulate_quantile(benchmark_model(1e-12), cfg)
        assert e.quantile_mean == 0.0 and e.quantiles == (0.0, 0.0)

    def test_point_mass_quantile(self):
        # Poisson(3) CDF is 0.966 at 6 and 0.988 at 7
        cfg = McConfig(n_paths=100_000, n_reps=3, percentile=0.98)
        e = simulate_quantile(point_mass_model(), cfg)
        q = next(k for k in range(100) if poisson_tail_exact(3.0, k) <= 0.02)
        assert q == 7
        assert e.quantiles == (2.5 * q,) * 3

    def test_ci_brackets_mean(self):
        e = simulate_quantile(benchmark_model(), McConfig(n_paths=20_000, n_reps=4))
        assert e.ci95_lo <= e.quantile_mean <= e.ci95_hi

    def test_tail_prob_at_zero(self):
        cfg = McConfig(n_paths=100_000, n_reps=2)
        p, se = estimate_tail_prob(benchmark_model(2.0), 0.0, cfg)
        assert abs(p - (1 - math.exp(-2.0))) <= 4 * se

    def test_tail_prob_far_out(self):
        p, se = estimate_tail_prob(benchmark_model(), 1e15, McConfig(n_paths=20_000, n_reps=1))
        assert p == 0.0 and se == 0.0

    def test_tail_prob_reported_with_quantile(self):
        e = simulate_quantile(benchmark_model(), McConfig(n_paths=20_000, n_reps=2), tail_at=0.0)
        s, p, se = e.tail_prob_at
        assert s == 0.0 and p == pytest.approx(1.0 - math.exp(-20.0), abs=1e-6)

    def test_moment_body_rejected(self):
        sev = SplicedSeverity(0.35, X0, MomentBody(0.6, 0.2), ParetoTail(2.2, X0))
        with pytest.raises(BodyNotSamplable):
            simulate_totals(CompoundModel(sev, Frequency(2.0)), McConfig(n_paths=10_000, n_reps=1))

    def test_portfolio_sums_units(self):
        # two point-mass units with distinct sizes: totals lie on the lattice a*i + b*j
        a, b = point_mass_model(1.0, 2.0), point_mass_model(1000.0, 1.0)
        tot = simulate_totals(Portfolio((a, b)), McConfig(n_paths=10_000, n_reps=1))
        assert np.all(np.mod(tot, 1.0) == 0.0)
        assert np.mean(tot) == pytest.approx(2.0 + 1000.0, rel=0.05)

    def test_factor_portfolio_mean(self):
        unit = point_mass_model(1.0, 4.0)
        p = Portfolio((unit,), factor_weights=(0.5, 0.5), factor_scales=((0.5,), (1.5,)))
        tot = simulate_totals(p, McConfig(n_paths=200_000, n_reps=1))
        assert np.mean(tot) == pytest.approx(4.0, rel=0.01)
        # mixing inflates the variance above the Poisson value
        assert np.var(tot) == pytest.approx(4.0 + 0.25 * 16.0, rel=0.03)


class TestDeterminism:
    def test_repeatable(self):
        cfg = McConfig(n_paths=150_000, n_reps=2, seed=99)
        a = simulate_quantile(benchmark_model(), cfg)
        b = simulate_quantile(benchmark_model(), cfg)
        assert a == b

    def test_thread_count_irrelevant(self):
        base = dict(n_paths=200_000, n_reps=1, seed=5)
        one = simulate_totals(benchmark_model(), McConfig(threads=1, **base))
        four = simulate_totals(benchmark_model(), McConfig(threads=4, **base))
        assert np.array_equal(one, four)

    def test_env_thread_cap(self, monkeypatch):
        monkeypatch.setenv("HEAVYTAIL_THREADS", "1")
        cfg = McConfig(n_paths=150_000, n_reps=1, seed=5)
        a = simulate_totals(benchmark_model(), cfg)
        monkeypatch.setenv("HEAVYTAIL_THREADS", "3")
        assert np.array_equal(a, simulate_totals(benchmark_model(), cfg))

    def test_reps_differ(self):
        cfg = McConfig(n_paths=10_000, n_reps=2)
        assert not np.array_equal(simulate_totals(benchmark_model(), cfg, 0), simulate_totals(benchmark_model(), cfg, 1))


@pytest.mark.slow
def test_sd_shrinks_like_inverse_root_n():
    ns = np.array([10 ** 4, 10 ** 5, 10 ** 6])
    sds = [
        simulate_quantile(benchmark_model(), McConfig(n_paths=int(n), n_reps=r, percentile=0.99, seed=3)).quantile_sd
        for n, r in zip(ns, (40, 40, 10))
    ]
    slope = np.polyfit(np.log(ns), np.log(sds), 1)[0]
    assert abs(slope + 0.5) <= 0.1


def test_dump_csv(tmp_path):
    cfg = McConfig(n_paths=10_000, n_reps=1, seed=4)
    out = tmp_path / "totals.csv"
    dump_totals_csv(benchmark_model(), cfg, out)
    with open(out, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["total"] and len(rows) == 10_001
    np.testing.assert_array_equal([float(r[0]) for r in rows[1:]], simulate_totals(benchmark_model(), cfg))
