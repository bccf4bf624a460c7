"""Tail probabilities of single losses, compound Poisson sums and portfolios.

Every tail here is one real integral along the branch cut of the relevant
MGF.  For a compound Poisson sum with exponent ``E(z) = sum_i rate_i
(M_i(z) - 1)`` the tail reads

    P(S > s) = -(1/pi) int_0^inf dx/x exp(-s x + Re E) sin(Im E),

with ``E`` taken on the upper bank ``z = x e^{i pi}``.  A single model,
several independent units and a single loss (``E`` replaced by ``M``, to
first order in the rate) all run through the same engine, so they agree
to rounding wherever they should.

Pareto tails additionally pick up the Poisson tail ``P(N > floor(s/x0))``
from the residue at the origin (on by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .branchcut import (
    KAPPA_MAX,
    lognormal_saddles,
    log_abs_im_mgf_spliced_lognormal,
    psi,
    re_mgf_spliced_lognormal,
    third_arc_bound,
)
from .errors import DomainError, EmptyPortfolio
from .quadrature import QuadratureSpec, TailResult, integrate_halfline
from .severity import Frequency, LognormalTail, ParetoTail, SplicedSeverity
from .specfun import gamma, poisson_tail_exact

__all__ = [
    "CompoundModel",
    "Portfolio",
    "tail_single",
    "tail_compound_pareto",
    "tail_compound_lognormal",
    "tail_portfolio",
    "tail",
    "exponent_on_cut",
    "DEFAULT_LOGNORMAL_ORDER",
]

# second-order saddle brackets by default for compound lognormal tails;
# orders 0 and 1 stay selectable
DEFAULT_LOGNORMAL_ORDER = 2
_MAX_BREAKPOINTS = 400


@dataclass(frozen=True)
class CompoundModel:
    """Poisson number of i.i.d. spliced losses."""

    severity: SplicedSeverity
    frequency: Frequency

    @property
    def rate(self) -> float:
        return self.frequency.rate

    @property
    def x0(self) -> float:
        return self.severity.x0

    @property
    def is_pareto(self) -> bool:
        return isinstance(self.severity.tail, ParetoTail)

    def scaled(self, factor: float) -> "CompoundModel":
        """Same severity with the intensity multiplied by ``factor``."""
        f = self.frequency
        return CompoundModel(self.severity, Frequency(f.lam * factor, f.horizon))


@dataclass(frozen=True)
class Portfolio:
    """Independent compound units, optionally mixed over a discrete common factor.

    In factor mode ``factor_weights[g]`` is the probability of grid point
    ``g`` and ``factor_scales[g][i]`` multiplies unit ``i``'s intensity
    there; conditionally on the factor, units are independent.
    """

    units: tuple
    factor_weights: Optional[tuple] = None
    factor_scales: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        if not self.units:
            raise EmptyPortfolio("portfolio needs at least one unit")
        if (self.factor_weights is None) != (self.factor_scales is None):
            raise DomainError("factor mode needs both weights and intensity scales")
        if self.factor_weights is not None:
            w = np.asarray(self.factor_weights, dtype=float)
            sc = np.asarray(self.factor_scales, dtype=float)
            if w.ndim != 1 or np.any(w < 0) or w.sum() <= 0:
                raise DomainError("factor weights must be non-negative with positive sum")
            if sc.shape != (w.size, len(self.units)) or np.any(sc <= 0):
                raise DomainError("factor scales must be positive, shape (n_grid, n_units)")
            object.__setattr__(self, "factor_weights", tuple(w / w.sum()))
            object.__setattr__(self, "factor_scales", tuple(map(tuple, sc)))

    @property
    def mixing(self) -> str:
        return "independent" if self.factor_weights is None else "factor"


# ---------------------------------------------------------------------------
# exponent on the cut


def _unit_log_im(sev: SplicedSeverity, rate: float, x, order: int):
    """``log |Im E|`` contributed by one unit at ``x``; ``-inf`` without a tail."""
    x = np.asarray(x, dtype=float)
    if isinstance(sev.tail, ParetoTail):
        if sev.omega == 0.0:
            return np.full_like(x, -np.inf)
        a = sev.tail.alpha
        return math.log(rate * sev.omega * math.pi / gamma(a - 1.0)) + (a - 1.0) * np.log(sev.x0 * x)
    return math.log(rate) + log_abs_im_mgf_spliced_lognormal(sev, x, order)


def _unit_terms(sev: SplicedSeverity, rate: float, x, order: int):
    """(Re E, log|Im E|, Im E) contributed by one unit at ``x`` (arrays)."""
    x = np.asarray(x, dtype=float)
    if isinstance(sev.tail, ParetoTail):
        re = rate * psi(sev, x)
    else:
        re = rate * (re_mgf_spliced_lognormal(sev, x, order) - 1.0)
    log_im = _unit_log_im(sev, rate, x, order)
    return re, log_im, -np.exp(log_im)


def exponent_on_cut(units, x, order: int = DEFAULT_LOGNORMAL_ORDER):
    """Compound exponent ``sum_i rate_i (M_i - 1)`` on the upper bank.

    ``units`` is a sequence of ``(severity, rate)`` pairs.  Returns
    ``(Re E, Im E)`` arrays, each the sum of the unit contributions.
    """
    x = np.asarray(x, dtype=float)
    re = np.zeros_like(x)
    im = np.zeros_like(x)
    for sev, rate in units:
        r, _, i = _unit_terms(sev, rate, x, order)
        re = re + r
        im = im + i
    return re, im


def _log_abs_im_total(units, x, order):
    logs = [_unit_log_im(sev, rate, x, order) for sev, rate in units]
    return np.logaddexp.reduce(np.vstack(logs), axis=0) if len(logs) > 1 else logs[0]


def _upper_cap(units, s):
    caps = []
    for sev, _ in units:
        if isinstance(sev.tail, ParetoTail):
            n0 = math.floor(s / sev.x0)
            caps.append(n0 / sev.x0)
        else:
            t = sev.tail
            caps.append(KAPPA_MAX * math.exp(-t.mu) / (t.sigma * t.sigma))
    return min(caps)


def _sine_zeros(log_im_fn, lo, hi, limit=_MAX_BREAKPOINTS):
    """Points where ``|Im E| = k pi`` (``Im E`` monotone in ``x``), by interpolation."""
    if not hi > lo:
        return []
    u = np.linspace(math.log(lo), math.log(hi), 801)
    with np.errstate(all="ignore"):
        li = log_im_fn(np.exp(u))
    li = np.where(np.isfinite(li), li, -1e300)
    mag = np.exp(np.minimum(li, 700.0)) / math.pi
    kmax = min(int(mag[-1]), limit)
    if kmax < 1 or np.any(np.diff(mag) < 0):
        return []
    ks = np.arange(1, kmax + 1)
    return list(np.exp(np.interp(ks, mag, u)))


def _integrate_cut(units, s, spec, order, *, linear=False):
    """Core engine: returns (value, err, diagnostics)."""
    scale = 1.0 / s

    def terms(x):
        re = np.zeros_like(x)
        im = np.zeros_like(x)
        for sev, rate in units:
            r, _, i = _unit_terms(sev, rate, x, order)
            re += r
            im += i
        return re, im

    if linear:
        # single loss: exp(Re E) sin(Im E) -> Im M
        def f(x):
            im = -np.exp(_log_abs_im_total(units, x, order))
            return -np.exp(-s * x) * im / (math.pi * x)

        def log_env(x):
            return -s * x + _log_abs_im_total(units, x, order) - math.log(math.pi)

        upper = None
        if any(isinstance(sev.tail, LognormalTail) for sev, _ in units):
            upper = _upper_cap(units, s)
    else:
        def f(x):
            re, im = terms(x)
            with np.errstate(over="ignore", invalid="ignore"):
                return -np.exp(-s * x + re) * np.sin(im) / (math.pi * x)

        def log_env(x):
            re, _ = terms(x)
            li = _log_abs_im_total(units, x, order)
            return -s * x + re + np.minimum(li, 0.0) - math.log(math.pi)

        upper = _upper_cap(units, s)

    hi_bp = min(400.0 / s, upper) if upper is not None else 400.0 / s
    bps = [] if linear else _sine_zeros(lambda x: _log_abs_im_total(units, x, order), 1e-30 / s, hi_bp)
    value, err, diag = integrate_halfline(
        f, spec, scale=scale, breakpoints=bps, log_envelope=log_env, upper=upper
    )
    diag["n_breakpoints"] = len(bps)
    return value, err, diag


def _pareto_rate(units):
    return sum(rate for sev, rate in units if isinstance(sev.tail, ParetoTail))


def _finish(units, s, spec, order, include_poisson_term, linear=False):
    warns = []
    if all(sev.omega == 0.0 for sev, _ in units):
        warns.append("NoCutDiscontinuity")
        value, err, diag = 0.0, 0.0, {"cutoff": 0.0, "n_evaluations": 0, "warnings": []}
    else:
        value, err, diag = _integrate_cut(units, s, spec, order, linear=linear)
    warns += diag.get("warnings", [])
    pareto = [(sev, r) for sev, r in units if isinstance(sev.tail, ParetoTail)]
    if pareto and not linear:
        x0min = min(sev.x0 for sev, _ in pareto)
        n0 = math.floor(s / x0min)
        rate = _pareto_rate(units)
        pt = poisson_tail_exact(rate, n0)
        diag["n0"] = n0
        diag["poisson_term"] = pt
        diag["poisson_term_included"] = bool(include_poisson_term)
        from .asymptotics import poisson_tail_cramer

        diag["poisson_cramer_estimate"] = poisson_tail_cramer(rate, max(n0, 1))
        if include_poisson_term:
            value += pt
    lognormal = [(sev, r) for sev, r in units if isinstance(sev.tail, LognormalTail)]
    if lognormal and diag.get("cutoff"):
        # saddle position where the integrand peaks, roughly at x ~ ln(s)/s
        t = lognormal[0][0].tail
        x_peak = min(max(math.log(max(s, math.e)) - t.mu, 1.0) / (s * t.sigma ** 2), _upper_cap(lognormal, s))
        try:
            sd = lognormal_saddles(t.mu, t.sigma, x_peak)
            diag["w2_at_peak"] = sd.w2
            diag["suppressed_terms_bound"] = float(third_arc_bound(t.sigma, sd.w2))
            if sd.w2 < 8.0:
                warns.append("OutsideAsymptoticRegime")
        except DomainError:
            pass
    diag["kernel_order"] = order
    return TailResult.from_raw(
        value, err, diag.get("cutoff", 0.0), diag.get("n_evaluations", 0), warns, diag
    )


# ---------------------------------------------------------------------------
# public operations


def tail_single(sev: SplicedSeverity, s: float, spec: QuadratureSpec = QuadratureSpec(), order: int = 1) -> TailResult:
    """``P(X > s)`` for one loss from the jump of ``Im M`` across the cut.

    For a Pareto tail the integral reproduces ``omega (s/x0)^-(alpha-1)``;
    for a lognormal tail it approximates ``omega nu N(-(ln s - mu)/sigma)``
    with the saddle kernel of the given order.
    """
    if isinstance(sev.tail, ParetoTail) and s <= sev.x0:
        raise DomainError("single-loss cut integral needs s > x0")
    if not s > 0:
        raise DomainError("s must be positive")
    return _finish([(sev, 1.0)], s, spec, order, False, linear=True)


def tail_compound_pareto(
    model: CompoundModel,
    s: float,
    spec: QuadratureSpec = QuadratureSpec(),
    include_poisson_term: bool = True,
) -> TailResult:
    """Tail of a compound Poisson sum of Pareto-tailed losses.

    ``(1/pi) int dy/y exp(-s_hat y + rate Psi(y/x0)) sin(pi omega rate
    y^(alpha-1)/Gamma(alpha-1))`` with ``s_hat = s/x0``, split at the sine
    zeros, plus ``P(N > floor(s/x0))`` when ``include_poisson_term``.
    """
    if not model.is_pareto:
        raise DomainError("model does not have a Pareto tail")
    if s < 2.0 * model.x0:
        raise DomainError("compound Pareto tail needs s >= 2 x0")
    return _finish([(model.severity, model.rate)], s, spec, 1, include_poisson_term)


def tail_compound_lognormal(
    model: CompoundModel,
    s: float,
    spec: QuadratureSpec = QuadratureSpec(),
    order: int = DEFAULT_LOGNORMAL_ORDER,
) -> TailResult:
    """Tail of a compound Poisson sum of lognormal-tailed losses.

    ``-(1/pi) int dx/x exp(-s x + rate (Re M_s - 1)) sin(rate Im M_s)``
    with the saddle-point cut values; integrated up to ``kappa = 1/e``.
    """
    if model.is_pareto:
        raise DomainError("model does not have a lognormal tail")
    if not s > 0:
        raise DomainError("s must be positive")
    return _finish([(model.severity, model.rate)], s, spec, order, False)


def _independent_units(units: Sequence[CompoundModel]):
    return [(u.severity, u.rate) for u in units]


def tail_portfolio(
    p: Portfolio,
    s: float,
    spec: QuadratureSpec = QuadratureSpec(),
    include_poisson_term: bool = True,
    order: int = DEFAULT_LOGNORMAL_ORDER,
) -> TailResult:
    """Tail of the total loss of a portfolio of compound units.

    Independent mode integrates once with the summed exponent; factor mode
    averages conditional tails over the factor grid in fixed order.
    """
    if p.mixing == "independent":
        units = _independent_units(p.units)
        if any(isinstance(sev.tail, ParetoTail) for sev, _ in units):
            x0min = min(sev.x0 for sev, _ in units if isinstance(sev.tail, ParetoTail))
            if s < 2.0 * x0min:
                raise DomainError("portfolio with Pareto units needs s >= 2 min(x0)")
        return _finish(units, s, spec, order, include_poisson_term)
    parts = []
    for w, scales in zip(p.factor_weights, p.factor_scales):
        units = [(u.severity, u.rate * c) for u, c in zip(p.units, scales)]
        parts.append((w, _finish(units, s, spec, order, include_poisson_term)))
    prob = math.fsum(w * r.prob for w, r in parts)
    err = math.fsum(w * r.abs_err_estimate for w, r in parts)
    warns = sorted({x for _, r in parts for x in r.warnings})
    diag = {"factor_terms": [r.prob for _, r in parts]}
    return TailResult(
        prob, err, max(r.cutoff_used for _, r in parts),
        sum(r.n_evaluations for _, r in parts), warns, diag,
    )


def tail(model, s: float, spec: Optional[QuadratureSpec] = None, **kwargs) -> TailResult:
    """Dispatch to the tail routine matching ``model``'s type and tail family."""
    spec = spec or QuadratureSpec()
    if isinstance(model, Portfolio):
        return tail_portfolio(model, s, spec, **kwargs)
    if isinstance(model, CompoundModel):
        if model.is_pareto:
            return tail_compound_pareto(model, s, spec, **kwargs)
        return tail_compound_lognormal(model, s, spec, **kwargs)
    if isinstance(model, SplicedSeverity):
        return tail_single(model, s, spec, **kwargs)
    raise TypeError(f"no tail routine for {type(model).__name__}")
