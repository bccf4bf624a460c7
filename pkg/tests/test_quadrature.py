import math

import numpy as np
import pytest

from heavytail.errors import DomainError, GrowthDetected, NonConvergence
from heavytail.quadrature import QuadratureSpec, TailResult, gk15, integrate_halfline

GAMMA_1_2 = 0.91816874239976062  # mpmath


def oscillating(y):
    return np.exp(-y) * np.sin(40.0 * y ** 1.2) / y


def oscillating_zeros(n=200):
    k = np.arange(1, n + 1)
    return (k * math.pi / 40.0) ** (1 / 1.2)


# integrands with known values, used as a small regression corpus
CORPUS = [
    (lambda y: np.exp(-y), 1.0),
    (lambda y: np.exp(-y) * y ** 0.2, GAMMA_1_2),
    (lambda y: np.exp(-10 * y) * y ** 0.2 / GAMMA_1_2, 10 ** -1.2),
    (lambda y: np.exp(-3 * y) * y ** 0.5 / y, math.sqrt(math.pi / 3)),
]


def test_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(rel_tol=0)
    with pytest.raises(DomainError):
        QuadratureSpec(max_subdivisions=4)
    assert QuadratureSpec().cutoff_policy == "auto"
    assert QuadratureSpec(cutoff=5.0).cutoff_policy == "fixed"


def test_gk15_polynomial_exact():
    k, err = gk15(lambda u: u ** 10 - 3 * u ** 3, 0.0, 2.0)
    assert k == pytest.approx(2 ** 11 / 11 - 3 * 2 ** 4 / 4, rel=1e-14)
    assert err < 1e-10


def test_exponential():
    v, err, _ = integrate_halfline(lambda y: np.exp(-y))
    assert abs(v - 1.0) <= 1e-12
    assert err <= 1e-9


def test_power_times_exponential():
    v, _, _ = integrate_halfline(lambda y: np.exp(-y) * y ** 0.2)
    assert v == pytest.approx(GAMMA_1_2, rel=1e-11)


def test_single_pareto_arrangement():
    # (1/pi) * (pi / Gamma(1.2)) * y^1.2 * e^{-10 y} / y
    f = lambda y: (np.exp(-10 * y) / y) * (math.pi / GAMMA_1_2) * y ** 1.2 / math.pi
    v, _, diag = integrate_halfline(f, scale=0.1)
    assert v == pytest.approx(10 ** -1.2, rel=1e-11)
    assert diag["n_evaluations"] > 0 and diag["cutoff"] > 1.0


@pytest.mark.parametrize("f,ref", CORPUS)
def test_halving_tolerance_does_not_increase_error(f, ref):
    errs = []
    for tol in (1e-6, 5e-7, 2.5e-7, 1.25e-7, 1e-8, 5e-9):
        v, e, _ = integrate_halfline(f, QuadratureSpec(rel_tol=tol, abs_tol=1e-300))
        assert v == pytest.approx(ref, rel=max(10 * tol, 1e-12))
        errs.append(e)
    assert all(b <= a for a, b in zip(errs, errs[1:]))


@pytest.mark.parametrize("f,ref", CORPUS)
def test_independent_of_cutoff_beyond_auto(f, ref):
    v, e, diag = integrate_halfline(f)
    v2, e2, _ = integrate_halfline(f, QuadratureSpec(cutoff=2 * diag["cutoff"]))
    assert abs(v2 - v) <= e + e2 + 1e-15


def test_sine_zero_presplit_changes_only_cost():
    spec = QuadratureSpec(rel_tol=1e-11, max_subdivisions=2000)
    env = lambda y: -y  # |y f(y)| <= e^{-y}
    v1, e1, d1 = integrate_halfline(oscillating, spec, breakpoints=oscillating_zeros(), log_envelope=env)
    v2, e2, d2 = integrate_halfline(oscillating, spec, log_envelope=env)
    assert abs(v1 - v2) <= e1 + e2 + 1e-14
    assert d1["n_evaluations"] != d2["n_evaluations"]


def test_nonconvergence():
    with pytest.raises(NonConvergence):
        integrate_halfline(
            oscillating,
            QuadratureSpec(rel_tol=1e-14, abs_tol=1e-300, max_subdivisions=8),
            log_envelope=lambda y: -y,
        )


def test_growth_with_fixed_cutoff():
    with pytest.raises(GrowthDetected):
        integrate_halfline(lambda y: np.exp(y), QuadratureSpec(cutoff=50.0))


def test_growth_with_auto_cutoff():
    with pytest.raises(GrowthDetected):
        integrate_halfline(lambda y: np.exp(y) * y, upper=1e3)


def test_truncated_at_envelope_minimum():
    # decays, then grows again: the auto cutoff stops at the minimum
    f = lambda y: np.exp(-y) + 1e-10 * np.exp(y - 30.0)
    v, err, diag = integrate_halfline(f, upper=1e4)
    assert "CutoffTruncated" in diag["warnings"]
    assert 20 < diag["cutoff"] < 35
    assert v == pytest.approx(1.0, abs=err + 1e-12)


class TestTailResult:
    def test_inside(self):
        r = TailResult.from_raw(0.25, 1e-9, 3.0, 100)
        assert r.prob == 0.25 and r.warnings == []

    def test_clamped_with_warning(self):
        r = TailResult.from_raw(-1e-3, 1e-9, 3.0, 100)
        assert r.prob == 0.0 and "Clamped" in r.warnings
        assert r.diagnostics["raw_value"] == -1e-3

    def test_within_error_no_warning(self):
        r = TailResult.from_raw(1.0 + 1e-12, 1e-9, 3.0, 100)
        assert r.prob == 1.0 and r.warnings == []
