"""Closed-form large-loss approximations.

* The power series in ``s_hat = s/x0`` of the compound Pareto tail, obtained
  by expanding the cut integrand at small ``y``.  It is a validation path
  and a source of starting points, not a production tail value.
* The leading saddle-point tail of a single lognormal loss.
* A large-deviation estimate of the Poisson tail ``P(N > n)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .errors import AlphaNearSingular, DomainError
from .severity import ParetoTail, body_moments
from .specfun import gamma, cospi, poisson_tail_exact, rgamma

__all__ = [
    "AsymptoticExpansion",
    "expand_compound_pareto",
    "eval_expansion",
    "invert_expansion",
    "a1_cosine_form",
    "a1_reflection_form",
    "a4_cosine_form",
    "a4_reflection_form",
    "lognormal_single_asymptotic",
    "lognormal_mills_leading",
    "poisson_tail_cramer",
]

log = logging.getLogger(__name__)

SINGULAR_ALPHAS = (1.5, 2.0, 2.5, 3.0)
_SINGULAR_TOL = 1e-6


@dataclass(frozen=True)
class AsymptoticExpansion:
    """Coefficients of ``sum_k coef_k * s_hat^(-exponent_k)`` for the compound Pareto tail.

    ``coefficients`` and ``exponents`` are ordered leading, a1, a2, a3, a4,
    a5.  ``leading_correction`` names the correction with the smaller
    exponent: ``"a1"`` for ``alpha < 2`` and ``"a2"`` above.
    """

    leading: float
    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    exponents: tuple
    c1: float
    c2: float
    x0: float
    alpha: float
    leading_correction: str

    @property
    def coefficients(self) -> tuple:
        return (self.leading, self.a1, self.a2, self.a3, self.a4, self.a5)


def a1_cosine_form(alpha: float, rate: float, omega: float) -> float:
    """``(omega rate)^2 Gamma(2-a) Gamma(2a-2) cos(pi a) / Gamma(a-1)``."""
    return (omega * rate) ** 2 * gamma(2 - alpha) * gamma(2 * alpha - 2) * cospi(alpha) / gamma(alpha - 1)


def a1_reflection_form(alpha: float, rate: float, omega: float) -> float:
    """``-(1/2) (omega rate)^2 Gamma(2-a)^2 / Gamma(3-2a)``."""
    # 1/Gamma vanishes at its poles (alpha = 3.5, 4.5, ...)
    return -0.5 * (omega * rate) ** 2 * gamma(2 - alpha) ** 2 * rgamma(3 - 2 * alpha)


def a4_cosine_form(alpha: float, rate: float, omega: float, c1: float) -> float:
    """``(omega rate)^2 rate c1 Gamma(2-a) Gamma(2a-1) cos(pi a) / Gamma(a-1)``."""
    return (omega * rate) ** 2 * rate * c1 * gamma(2 - alpha) * gamma(2 * alpha - 1) * cospi(alpha) / gamma(alpha - 1)


def a4_reflection_form(alpha: float, rate: float, omega: float, c1: float) -> float:
    """``(1/2) (omega rate)^2 rate c1 Gamma(2-a)^2 / Gamma(2-2a)``."""
    return 0.5 * (omega * rate) ** 2 * rate * c1 * gamma(2 - alpha) ** 2 * rgamma(2 - 2 * alpha)


def expand_compound_pareto(model, m1: float = None, m2: float = None) -> AsymptoticExpansion:
    """Series coefficients of the compound Pareto tail.

    ``c1 = omega (1-a)/(2-a) + (1-omega) m1`` and ``c2 = (omega/2)(1-a)/(3-a)
    + (1-omega) m2`` collect the small-``y`` expansion of the real part of
    the MGF on the cut; the body moments default to the rescaled raw
    moments ``E[X]/x0`` and ``E[X^2]/(2 x0^2)`` of the body model.

    Raises
    ------
    AlphaNearSingular
        ``alpha`` within 1e-6 of 3/2, 2, 5/2 or 3, where a coefficient has a
        Gamma-function pole.
    """
    sev = model.severity
    if not isinstance(sev.tail, ParetoTail):
        raise DomainError("series expansion needs a Pareto tail")
    a = sev.tail.alpha
    for bad in SINGULAR_ALPHAS:
        if abs(a - bad) <= _SINGULAR_TOL:
            raise AlphaNearSingular(f"alpha={a} is at a singular value {bad}")
    w = sev.omega
    rate = model.frequency.rate
    if m1 is None or m2 is None:
        if sev.body is None:
            bm1, bm2 = 0.0, 0.0
        else:
            bm1, bm2 = body_moments(sev.body, sev.x0)
        m1 = bm1 if m1 is None else m1
        m2 = bm2 if m2 is None else m2
    c1 = w * (1 - a) / (2 - a) + (1 - w) * m1
    c2 = 0.5 * w * (1 - a) / (3 - a) + (1 - w) * m2
    a1 = a1_reflection_form(a, rate, w)
    a2 = w * rate ** 2 * (a - 1) * c1
    a3 = -(math.pi ** 2 / 6.0) * gamma(3 * a - 3) * (w * rate / gamma(a - 1)) ** 3
    a4 = a4_reflection_form(a, rate, w, c1)
    a5 = w * rate ** 2 * a * (a - 1) * (c2 + 0.5 * rate * c1 ** 2)
    exps = (a - 1, 2 * (a - 1), a, 3 * (a - 1), 2 * a - 1, a + 1)
    return AsymptoticExpansion(
        w * rate, a1, a2, a3, a4, a5, exps, c1, c2, sev.x0, a,
        "a1" if a < 2 else "a2",
    )


def eval_expansion(exp: AsymptoticExpansion, s: float, n_terms: int = 6) -> float:
    """Partial sum of the first ``n_terms`` series terms (leading, a1, ..., a5)."""
    if not 1 <= n_terms <= 6:
        raise DomainError("n_terms must be between 1 and 6")
    sh = s / exp.x0
    if not sh > 1.0:
        raise DomainError("series needs s > x0")
    terms = [c * sh ** (-e) for c, e in zip(exp.coefficients[:n_terms], exp.exponents[:n_terms])]
    return math.fsum(terms)


def invert_expansion(exp: AsymptoticExpansion, p_tail: float, n_terms: int = 6,
                     s_lo: float = None, s_hi: float = None) -> float:
    """Solve ``eval_expansion(s) = p_tail`` for ``s`` by bisection in ``ln s``.

    The bracket defaults to a wide band around the leading-order solution.
    Truncated series turn over at small ``s``, so the band is scanned
    downward from the top and the largest crossing is taken.
    """
    if not 0.0 < p_tail < exp.leading:
        raise DomainError("p_tail must lie in (0, omega * rate)")
    guess = exp.x0 * (exp.leading / p_tail) ** (1.0 / (exp.alpha - 1.0))
    lo = math.log(s_lo if s_lo else max(guess / 100.0, 1.0001 * exp.x0))
    hi = math.log(s_hi if s_hi else guess * 100.0)
    g = lambda ls: eval_expansion(exp, math.exp(ls), n_terms) - p_tail
    grid = [hi - k * (hi - lo) / 400 for k in range(401)]
    ghi = g(grid[0])
    if ghi > 0:
        raise DomainError("series does not bracket the requested tail level")
    for a in grid[1:]:
        ga = g(a)
        if ga > 0:
            lo = a
            break
        hi, ghi = a, ga
    else:
        raise DomainError("series does not bracket the requested tail level")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0 or hi - lo < 1e-14:
            break
        if gm > 0:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def lognormal_single_asymptotic(mu: float, sigma: float, s: float) -> float:
    """Leading saddle-point tail of one lognormal loss.

    The saddle sits at ``w0 = ln s - mu`` where the exponent equals
    ``-w0^2/2``; the Gaussian width around it gives
    ``sigma/(sqrt(2 pi) w0) exp(-w0^2 / (2 sigma^2))``.
    """
    w0 = math.log(s) - mu
    if w0 < 2.0 * sigma:
        raise DomainError("saddle formula needs ln s - mu >= 2 sigma")
    phi0 = -0.5 * w0 * w0
    return sigma / (math.sqrt(2.0 * math.pi) * w0) * math.exp(phi0 / (sigma * sigma))


def lognormal_mills_leading(mu: float, sigma: float, s: float) -> float:
    """First term of the Mills-ratio expansion of ``N(-(ln s - mu)/sigma)``."""
    z = (math.log(s) - mu) / sigma
    return math.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * z)


def poisson_tail_cramer(rate: float, n: int) -> float:
    """Large-deviation estimate ``exp(-n (rate - ln rate - 1))`` of ``P(N > n)``.

    This is taken verbatim from the exponential-interarrival argument; note
    it does not depend on ``n/rate`` and equals 1 at ``rate = 1``.  The
    exact tail and the log-ratio are logged at DEBUG level for comparison.
    """
    if not rate > 0.0 or n < 1:
        raise DomainError("need rate > 0 and n >= 1")
    value = math.exp(-n * (rate - math.log(rate) - 1.0))
    if log.isEnabledFor(logging.DEBUG):
        exact = poisson_tail_exact(rate, n)
        ratio = math.log(value / exact) if value > 0 and exact > 0 else float("nan")
        log.debug("poisson tail rate=%g n=%d: estimate %.6e exact %.6e log-ratio %.4f",
                  rate, n, value, exact, ratio)
    return value
