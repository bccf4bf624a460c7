"""Quantiles (value at risk) by inverting the tail probability.

VaR at confidence ``c`` is the level ``s`` with ``P(S > s) = 1 - c``.  The
root is found in ``ln s`` with a bracketing Illinois (modified regula
falsi) iteration; the stopping rule is on the relative error of the tail
probability, which is what a percentile guarantee means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import ndtri

from .asymptotics import expand_compound_pareto, invert_expansion
from .compound import CompoundModel, Portfolio, tail
from .errors import BracketFailure, DomainError, GrowthDetected, NonConvergence, NonMonotoneTail
from .quadrature import QuadratureSpec
from .severity import ParetoTail

__all__ = ["VarQuery", "VarResult", "initial_guess", "leading_order_tail", "solve_var"]

_LOG_S_MAX = 700.0


@dataclass(frozen=True)
class VarQuery:
    """What to invert: a model, a confidence level and the accuracy wanted.

    ``method`` is ``"quadrature"`` (default) or ``"asymptotic"`` (partial
    sum of the compound Pareto series with ``n_terms`` terms).
    """

    model: object
    confidence: float
    tol_rel: float = 1e-6
    spec: QuadratureSpec = field(default_factory=QuadratureSpec)
    method: str = "quadrature"
    n_terms: int = 6

    def __post_init__(self):
        if not 0.5 < self.confidence < 1.0:
            raise DomainError("confidence must lie in (0.5, 1)")
        if not self.tol_rel > 0:
            raise DomainError("tol_rel must be positive")
        if self.method not in ("quadrature", "asymptotic"):
            raise DomainError(f"unknown method {self.method!r}")


class VarResult(NamedTuple):
    var: float
    tail_at_var: float
    iterations: int


def _units(model):
    if isinstance(model, CompoundModel):
        return [model]
    if isinstance(model, Portfolio):
        if model.mixing == "factor":
            w = np.asarray(model.factor_weights)
            sc = np.asarray(model.factor_scales)
            mean_scale = w @ sc
            return [u.scaled(c) for u, c in zip(model.units, mean_scale)]
        return list(model.units)
    raise DomainError(f"cannot compute VaR for {type(model).__name__}")


def _single_ccdf(sev, s):
    t = sev.tail
    if isinstance(t, ParetoTail):
        return (max(s, t.x0) / t.x0) ** (-(t.alpha - 1.0))
    z = (math.log(s) - t.mu) / t.sigma
    from .specfun import normal_cdf

    return t.nu * normal_cdf(-max(z, t.wbar0 / t.sigma if t.x0 > 0 else z))


def leading_order_tail(model, s: float) -> float:
    """``sum_i rate_i omega_i P(X_i > s)``: one big loss dominates."""
    return math.fsum(u.rate * u.severity.omega * _single_ccdf(u.severity, s) for u in _units(model))


def initial_guess(model, p_tail: float) -> float:
    """Starting point for the root search.

    For one Pareto-tailed model this is ``x0 (omega rate / p)^(1/(alpha-1))``;
    otherwise the leading-order tail ``sum rate omega P(X > s)`` is inverted
    numerically (a lognormal unit alone gives
    ``exp(mu - sigma N^-1(p / (omega nu rate)))``).
    """
    units = _units(model)
    if len(units) == 1:
        u = units[0]
        sev = u.severity
        top = sev.omega * u.rate
        if not 0.0 < p_tail < top:
            raise DomainError("p_tail must lie in (0, omega * rate)")
        if isinstance(sev.tail, ParetoTail):
            return sev.x0 * (top / p_tail) ** (1.0 / (sev.tail.alpha - 1.0))
        t = sev.tail
        q = p_tail / (top * t.nu)
        return math.exp(t.mu - t.sigma * ndtri(q))
    total = sum(u.rate * u.severity.omega for u in units)
    if not 0.0 < p_tail < total:
        raise DomainError("p_tail must lie in (0, sum omega * rate)")
    lo = math.log(max(max(u.severity.x0 for u in units), 1e-300))
    hi = lo + 1.0
    while leading_order_tail(model, math.exp(hi)) > p_tail:
        hi += 2.0 * (hi - lo)
        if hi > 700:
            raise DomainError("leading-order tail does not reach p_tail")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if leading_order_tail(model, math.exp(mid)) > p_tail:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def _min_level(model):
    xs = [u.severity.x0 for u in _units(model) if isinstance(u.severity.tail, ParetoTail)]
    return 2.0 * max(xs) * (1.0 + 1e-12) if xs else 0.0


def solve_var(q: VarQuery) -> VarResult:
    """Level ``s`` where the tail equals ``1 - confidence``.

    Raises
    ------
    BracketFailure
        No sign change found around the initial guess.
    NonMonotoneTail
        The tail increases somewhere in the bracket (offending samples attached).
    """
    p = 1.0 - q.confidence
    if q.method == "asymptotic":
        if not isinstance(q.model, CompoundModel):
            raise DomainError("the series method covers a single compound Pareto model")
        exp = expand_compound_pareto(q.model)
        s = invert_expansion(exp, p, q.n_terms)
        return VarResult(s, p, 0)

    floor = _min_level(q.model)

    def g(ls):
        return tail(q.model, math.exp(ls), q.spec).prob - p

    guess = math.log(max(initial_guess(q.model, p), floor * 1.5 if floor else 0.0))

    def safe(ls, direction):
        # below the convergence regime, step toward the guess
        for _ in range(30):
            try:
                return ls, g(ls)
            except GrowthDetected:
                ls = ls + direction * 0.25
        raise BracketFailure("tail cannot be evaluated near the bracket edge")

    lo, hi = guess - math.log(2.0), guess + math.log(2.0)
    if floor:
        lo = max(lo, math.log(floor))
    lo, glo = safe(lo, +1)
    hi, ghi = safe(hi, +1)
    step = math.log(4.0)
    for _ in range(40):
        if glo > 0 > ghi:
            break
        if glo <= 0:
            if floor and lo <= math.log(floor) + 1e-12:
                raise BracketFailure("tail at the smallest admissible level is already below p")
            lo = lo - step if not floor else max(lo - step, math.log(floor))
            lo, glo = safe(lo, +1)
        if ghi >= 0:
            if hi + step > _LOG_S_MAX:
                raise BracketFailure("tail stays above p up to the largest representable level")
            hi += step
            hi, ghi = safe(hi, +1)
        step *= 2.0
    else:
        raise BracketFailure("could not bracket the requested tail level")

    # monotonicity spot check across the bracket
    grid = np.linspace(lo, hi, 5)
    vals = [glo] + [g(x) for x in grid[1:-1]] + [ghi]
    if any(b > a for a, b in zip(vals[:-1], vals[1:])):
        raise NonMonotoneTail(
            "tail is not decreasing across the bracket",
            samples=[(math.exp(x), v + p) for x, v in zip(grid, vals)],
        )
    for x, v in zip(grid[1:-1], vals[1:-1]):
        if v > 0:
            lo, glo = x, v
        elif v < 0:
            hi, ghi = x, v
            break

    side = 0
    for it in range(1, 201):
        x = (lo * ghi - hi * glo) / (ghi - glo)
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
        gx = g(x)
        if abs(gx) <= q.tol_rel * p:
            return VarResult(math.exp(x), gx + p, it)
        if gx > 0:
            lo, glo = x, gx
            if side == +1:
                ghi *= 0.5
            side = +1
        else:
            hi, ghi = x, gx
            if side == -1:
                glo *= 0.5
            side = -1
        if hi - lo < 1e-15:
            return VarResult(math.exp(x), gx + p, it)
    raise NonConvergence("VaR iteration did not converge")
