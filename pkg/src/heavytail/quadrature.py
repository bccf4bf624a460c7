"""Adaptive quadrature on the half-line for the cut-kernel integrals.

The integrands are concentrated around ``y ~ 1/s`` and span many decades,
so integration runs in ``u = ln y``: the ``1/y`` weight at the origin
becomes a plain measure and the rule never touches ``y = 0``.  Panels are
15-point Gauss-Kronrod with the embedded 7-point Gauss rule as the error
estimate, refined by global adaptive bisection.

The upper end needs care: the compound integrands eventually grow again
(they are asymptotic forms valid only where they are small), so by default
the range is truncated where the integrand's envelope stops decaying.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, GrowthDetected, HeavyTailError, NonConvergence

__all__ = ["QuadratureSpec", "TailResult", "integrate_halfline", "gk15"]

# Gauss-Kronrod 7/15 nodes and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])

NEGLIGIBLE_LOG = 46.0  # e^-46 ~ 1e-20 relative to the peak
_U_FLOOR = -700.0
_SCAN_STEP = math.log(10.0) / 20.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy and range controls for :func:`integrate_halfline`.

    ``cutoff=None`` selects the automatic upper cutoff; a number fixes the
    upper limit of ``y``.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 200
    cutoff: Optional[float] = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 8:
            raise DomainError("max_subdivisions must be at least 8")
        if self.cutoff is not None and not self.cutoff > 0:
            raise DomainError("a fixed cutoff must be positive")

    @property
    def cutoff_policy(self) -> str:
        return "auto" if self.cutoff is None else "fixed"


@dataclass
class TailResult:
    """A tail probability with its quadrature error estimate and diagnostics."""

    prob: float
    abs_err_estimate: float
    cutoff_used: float
    n_evaluations: int
    warnings: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @classmethod
    def from_raw(cls, value, err, cutoff, n_eval, warnings=(), diagnostics=None):
        """Clamp ``value`` into [0, 1]; warn ``Clamped`` if it left by more than ``err``."""
        warns = list(warnings)
        diag = dict(diagnostics or {})
        diag["raw_value"] = value
        prob = min(max(value, 0.0), 1.0)
        if value < -err or value > 1.0 + err:
            warns.append("Clamped")
        return cls(prob, abs(err), cutoff, n_eval, warns, diag)


def gk15(h: Callable, a: float, b: float):
    """One Gauss-Kronrod panel on [a, b]: (Kronrod value, QUADPACK-style error)."""
    c = 0.5 * (a + b)
    r = 0.5 * (b - a)
    fv = np.asarray(h(c + r * _NODES), dtype=float)
    k = r * float(np.dot(_KW, fv))
    g = r * float(np.dot(_GW, fv))
    mean = k / (2.0 * r) if r else 0.0
    resasc = abs(r) * float(np.dot(_KW, np.abs(fv - mean)))
    err = abs(k - g)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    resabs = abs(r) * float(np.dot(_KW, np.abs(fv)))
    if resabs > np.finfo(float).tiny / (50 * np.finfo(float).eps):
        err = max(50 * np.finfo(float).eps * resabs, err)
    return k, err


def _safe_env(env_fn, u):
    """Envelope on a batch; points where evaluation fails count as +inf."""
    try:
        return env_fn(u)
    except (HeavyTailError, OverflowError, FloatingPointError):
        out = np.empty_like(u)
        for i, ui in enumerate(u):
            try:
                out[i] = env_fn(np.array([ui]))[0]
            except (HeavyTailError, OverflowError, FloatingPointError):
                out[i] = np.inf
        return out


def _scan_envelope(env_fn, u0, direction, limit, chunk=40, max_steps=8000):
    """Walk from ``u0`` in ``direction`` to ``limit``, yielding (u, envelope) chunks."""
    done = 0
    while done < max_steps:
        u = u0 + direction * _SCAN_STEP * np.arange(done, done + chunk)
        u = u[u <= limit] if direction > 0 else u[u >= limit]
        if u.size == 0:
            return
        yield u, _safe_env(env_fn, u)
        done += chunk


def _first_peak(env_values):
    """Index of the first genuine maximum: stop once the envelope has fallen
    by an e-fold and starts rising again (later growth is not the bulk)."""
    best, best_i, passed = -math.inf, 0, False
    for i, e in enumerate(env_values):
        if passed and e > env_values[i - 1]:
            break
        if e > best:
            best, best_i = e, i
        if e < best - 1.0:
            passed = True
    return best_i


def _upper_limit(env_fn, u_peak, u_cap, fixed):
    """Auto cutoff: end of decay, envelope minimum, or the cap.

    Returns (u_hi, warnings, boundary log-magnitude).
    """
    peak = -math.inf
    passed = False
    prev = None
    seen_u, seen_e = [], []
    for us, es in _scan_envelope(env_fn, u_peak, +1, u_cap):
        for u, e in zip(us, es):
            e = -math.inf if np.isnan(e) else float(e)
            seen_u.append(u)
            seen_e.append(e)
            if not fixed and e < peak - NEGLIGIBLE_LOG:
                return u, [], e
            peak = max(peak, e)
            if e < peak - 1.0:
                passed = True
            if passed and prev is not None and e > prev[1] and not fixed:
                return prev[0], ["CutoffTruncated"], prev[1]
            prev = (u, e)
    if not seen_u:
        return u_cap, [], -math.inf
    if fixed:
        # growth over the last decade of a user-fixed range is an error
        su, se = np.array(seen_u), np.array(seen_e)
        last = se[su >= u_cap - math.log(10.0)]
        if last.size > 1 and last[-1] > last[0] and last[-1] > peak - NEGLIGIBLE_LOG:
            raise GrowthDetected("integrand grows over the last decade below the fixed cutoff")
        return u_cap, [], seen_e[-1]
    if seen_e[-1] == math.inf or (not passed and seen_e[-1] > peak - NEGLIGIBLE_LOG):
        raise GrowthDetected(
            "integrand never decays below the upper cap; the cut representation "
            "does not converge at this argument"
        )
    return u_cap, ["CutoffAtCap"] if seen_e[-1] > peak - NEGLIGIBLE_LOG else [], seen_e[-1]


def integrate_halfline(
    f: Callable,
    spec: QuadratureSpec = QuadratureSpec(),
    *,
    scale: float = 1.0,
    breakpoints: Sequence[float] = (),
    log_envelope: Optional[Callable] = None,
    upper: Optional[float] = None,
):
    """Integrate ``f(y)`` over ``(0, cutoff]``.

    Parameters
    ----------
    f
        Vectorised integrand in ``y``; evaluated only at ``y > 0``.
    spec
        Tolerances and cutoff policy.
    scale
        Where the integrand lives (typically ``1/s``); anchors the scans.
    breakpoints
        Points in ``y`` to split at before adaptation (e.g. sine zeros).
    log_envelope
        Optional ``log`` of a non-oscillating bound on ``|y f(y)|`` used to
        place the cutoffs; defaults to ``log |y f(y)|``, which dips at every
        zero of an oscillating integrand and then ends the range early.
    upper
        Hard cap on ``y`` (the auto cutoff never goes beyond it).

    Returns
    -------
    value, err, diagnostics
        ``diagnostics`` holds ``cutoff``, ``lower``, ``n_evaluations``,
        ``subdivisions``, ``warnings`` and ``lower_tail``.
    """
    n_eval = [0]

    def h(u):
        y = np.exp(u)
        n_eval[0] += u.size
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            v = np.asarray(f(y), dtype=float) * y
        return v

    def env(u):
        if log_envelope is not None:
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                return np.asarray(log_envelope(np.exp(u)), dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(h(u)))

    warns: list = []
    u_scale = math.log(scale)
    if spec.cutoff is not None:
        u_cap = math.log(spec.cutoff)
    elif upper is not None:
        u_cap = math.log(upper)
    else:
        u_cap = u_scale + 60.0
    if upper is not None:
        u_cap = min(u_cap, math.log(upper))

    # locate the peak of the envelope on a coarse grid around the scale
    grid = np.arange(max(u_scale - 40.0, _U_FLOOR), min(u_cap, u_scale + 8.0) + 1e-12, 0.25)
    if grid.size == 0:
        grid = np.array([u_cap])
    eg = _safe_env(env, grid)
    eg = np.where(np.isnan(eg), -np.inf, eg)
    u_peak = float(grid[_first_peak(eg)])

    u_hi, w_hi, e_hi = _upper_limit(env, u_peak, u_cap, spec.cutoff is not None)
    warns += w_hi

    # lower end: walk down until negligible; a geometric remainder is added
    peak = -math.inf
    u_lo = None
    last_u = u_peak
    for us, es in _scan_envelope(env, u_peak, -1, _U_FLOOR):
        es = np.where(np.isnan(es), -np.inf, es)
        peak = max(peak, float(np.max(es)))
        below = np.flatnonzero(es < peak - NEGLIGIBLE_LOG)
        if below.size:
            u_lo = float(us[below[0]])
            break
        last_u = float(us[-1])
    lower_tail = 0.0
    if u_lo is None:
        u_lo = last_u
        # integrand ~ e^{r u} near the floor: remainder g / r
        g1, g0 = h(np.array([u_lo + 1.0, u_lo]))
        if g0 != 0.0 and g1 / g0 > 1.0:
            lower_tail = g0 / math.log(g1 / g0)
        warns.append("LowerTailExtrapolated")
    if u_lo >= u_hi:
        u_lo = u_hi - 1.0

    # initial panels: breakpoints plus a cap on panel width
    cuts = {u_lo, u_hi}
    for b in breakpoints:
        if b > 0:
            ub = math.log(b)
            if u_lo < ub < u_hi:
                cuts.add(ub)
    edges = sorted(cuts)
    panels = []
    for a, b in zip(edges[:-1], edges[1:]):
        m = max(1, int(math.ceil((b - a) / 2.0)))
        pts = np.linspace(a, b, m + 1)
        panels += list(zip(pts[:-1], pts[1:]))

    heap = []
    total = 0.0
    total_err = 0.0
    for a, b in panels:
        v, e = gk15(h, a, b)
        total += v
        total_err += e
        heapq.heappush(heap, (-e, a, b, v))

    subdiv = 0
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if subdiv >= spec.max_subdivisions:
            raise NonConvergence(
                f"no convergence after {subdiv} subdivisions "
                f"(value {total:.6g}, error {total_err:.3g})"
            )
        neg_e, a, b, v = heapq.heappop(heap)
        m = 0.5 * (a + b)
        v1, e1 = gk15(h, a, m)
        v2, e2 = gk15(h, m, b)
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_e
        heapq.heappush(heap, (-e1, a, m, v1))
        heapq.heappush(heap, (-e2, m, b, v2))
        subdiv += 1
        if subdiv % 50 == 0:
            # refresh the running sums to shed accumulated rounding
            total = math.fsum(item[3] for item in heap)
            total_err = math.fsum(-item[0] for item in heap)

    value = math.fsum(item[3] for item in heap) + lower_tail
    err = math.fsum(-item[0] for item in heap) + 0.1 * abs(lower_tail)
    if "CutoffTruncated" in warns or "CutoffAtCap" in warns:
        err += math.exp(min(e_hi, 700.0)) if np.isfinite(e_hi) else 0.0
    if not math.isfinite(value):
        raise NonConvergence("integral is not finite")
    diag = {
        "cutoff": math.exp(u_hi),
        "lower": math.exp(u_lo),
        "n_evaluations": n_eval[0],
        "subdivisions": subdiv,
        "warnings": warns,
        "lower_tail": lower_tail,
        "boundary_log_magnitude": e_hi,
    }
    return value, err, diag
