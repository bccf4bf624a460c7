"""Values of single-loss MGFs on the upper bank of the negative real axis.

With the convention ``M(z) = E[exp(-zX)]`` the MGF of a heavy-tailed law
has a branch cut along ``z <= 0``.  The tail probability integrals only
need ``M(x e^{i pi})`` for ``x > 0``:

* Pareto tails: the real part comes from Kummer's function, the imaginary
  part is a pure power ``-omega pi y^(alpha-1) / Gamma(alpha-1)``,
  ``y = x0 x``.
* Lognormal tails: the continued MGF is an integral with two real saddle
  points ``w1 <= 1 <= w2`` solving ``w e^{-w} = kappa = x sigma^2 e^mu``;
  the real part is governed by ``w1`` and the imaginary part by ``w2``.

The saddle-point brackets come in three orders: 0 (prefactor only), 1
(first correction as usually quoted) and 2 (full second-order correction,
including the cubic-squared term).  See :func:`im_mgf_lognormal`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    IntegerAlphaUnsupported,
    IntegerAlphaWarning,
    KappaOutOfRange,
    SaddleTooClose,
    SeparationViolated,
)
from .severity import (
    LognormalTail,
    ParetoTail,
    SplicedSeverity,
    body_mgf_neg,
)
from .specfun import INV_E, cospi, gamma, kummer_phi, lambert_w0, lambert_w_minus1

__all__ = [
    "SaddleEval",
    "CutKernelDiagnostics",
    "effective_alpha",
    "delta_im_pareto_single",
    "psi",
    "lognormal_saddles",
    "im_mgf_lognormal",
    "re_mgf_lognormal",
    "log_abs_im_mgf_lognormal",
    "im_mgf_spliced_lognormal",
    "log_abs_im_mgf_spliced_lognormal",
    "re_mgf_spliced_lognormal",
    "kernel_diagnostics",
    "third_arc_bound",
    "cut_values",
    "lognormal_x_max",
]

KAPPA_MAX = INV_E * (1.0 - 1e-6)
SADDLE_GAP = 1e-3
SEPARATION = 2.0
BLEND_HALF_WIDTH = 0.05
INTEGER_ALPHA_SHIFT = 1e-6


@dataclass(frozen=True)
class SaddleEval:
    """Real saddle points of the continued lognormal MGF at one ``x``."""

    kappa: float
    w1: float
    w2: float


@dataclass(frozen=True)
class CutKernelDiagnostics:
    evaluations: int
    regime: str  # "series" | "saddle" | "boundary"
    suppressed_terms_bound: float = 0.0


# ---------------------------------------------------------------------------
# Pareto tail


def effective_alpha(alpha: float, perturb: bool = True) -> float:
    """Return ``alpha`` nudged off an integer, where ``Gamma(2-alpha)`` has a pole."""
    if abs(alpha - round(alpha)) > 1e-9:
        return alpha
    if not perturb:
        raise IntegerAlphaUnsupported(
            f"alpha={alpha} is an integer; Gamma(2-alpha) cos(pi alpha) has a pole"
        )
    warnings.warn(
        f"integer alpha={alpha} shifted by {INTEGER_ALPHA_SHIFT:g}",
        IntegerAlphaWarning,
        stacklevel=3,
    )
    return alpha + INTEGER_ALPHA_SHIFT


def delta_im_pareto_single(sev: SplicedSeverity, y):
    """Jump of ``Im M`` across the cut for a Pareto-tailed severity.

    ``-2 omega pi y^(alpha-1) / Gamma(alpha-1)`` with ``y = x0 x``; this form
    is regular at every ``alpha > 1``.
    """
    a = sev.tail.alpha
    yy = np.asarray(y, dtype=float)
    out = -2.0 * sev.omega * math.pi / gamma(a - 1.0) * yy ** (a - 1.0)
    return float(out) if np.ndim(out) == 0 else out


def _pareto_im(sev: SplicedSeverity, y):
    # upper-bank value: half of the jump
    return 0.5 * delta_im_pareto_single(sev, y)


def psi(sev: SplicedSeverity, x, perturb: bool = True):
    """Real part of ``M(x e^{i pi}) - 1`` for a Pareto-tailed severity.

    ``omega [Phi(1-a, 2-a, y) - 1] + (1-omega)[M1(-x) - 1]
    + omega Gamma(2-a) cos(pi a) y^(a-1)`` with ``y = x0 x``.  Vectorised
    over ``x``; exactly zero at ``x = 0``.
    """
    a = effective_alpha(sev.tail.alpha, perturb)
    xx = np.asarray(x, dtype=float)
    y = sev.x0 * xx
    out = np.zeros_like(y)
    if sev.omega > 0.0:
        phi = kummer_phi(1.0 - a, 2.0 - a, y)
        out = out + sev.omega * ((phi - 1.0) + gamma(2.0 - a) * cospi(a) * y ** (a - 1.0))
    if sev.omega < 1.0:
        out = out + (1.0 - sev.omega) * (body_mgf_neg(sev.body, y, sev.x0) - 1.0)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Lognormal tail


def _kappa(mu, sigma, x):
    return np.asarray(x, dtype=float) * sigma * sigma * math.exp(mu)


def lognormal_x_max(mu: float, sigma: float) -> float:
    """Largest ``x`` with ``kappa <= 1/e``: ``exp(-mu-1)/sigma^2``."""
    return math.exp(-mu - 1.0) / (sigma * sigma)


def _saddles(mu, sigma, x):
    k = _kappa(mu, sigma, x)
    if np.any(k > INV_E * (1.0 + 1e-12)):
        raise KappaOutOfRange(
            f"kappa = x sigma^2 e^mu = {float(np.max(k)):.6g} exceeds 1/e"
        )
    k = np.minimum(k, INV_E)
    w1 = -lambert_w0(-k)
    w2 = np.where(k > 0.0, -lambert_w_minus1(-np.maximum(k, 1e-300)), np.inf)
    return k, w1, w2


def lognormal_saddles(mu: float, sigma: float, x: float) -> SaddleEval:
    """Saddles ``w1 = -W0(-kappa)`` and ``w2 = -W_{-1}(-kappa)``, ``kappa = x sigma^2 e^mu``."""
    if not sigma > 0.0 or not x > 0.0:
        raise KappaOutOfRange("saddles need sigma > 0 and x > 0")
    k, w1, w2 = _saddles(mu, sigma, x)
    return SaddleEval(float(k), float(w1), float(w2))


def _im_bracket(w, sigma, order):
    if order == 0:
        return 1.0
    d = w - 1.0
    if order == 1:
        return 1.0 + sigma * sigma / 8.0 * w / (d * d)
    if order == 2:
        # near w2 = 1 the expansion breaks down and the bracket turns
        # negative; it is floored at zero there (kernel switched off)
        return np.maximum(1.0 + sigma * sigma / (8.0 * d * d) * (w - 5.0 / 3.0 * w * w / d), 0.0)
    raise ValueError(f"kernel order must be 0, 1 or 2, got {order}")


def _re_bracket(w, sigma, order):
    if order == 0:
        return 1.0
    d = 1.0 - w
    if order == 1:
        return 1.0 + sigma * sigma / 8.0 * w / (d * d)
    if order == 2:
        return 1.0 + sigma * sigma / (8.0 * d * d) * (w + 5.0 / 3.0 * w * w / d)
    raise ValueError(f"kernel order must be 0, 1 or 2, got {order}")


def log_abs_im_mgf_lognormal(mu, sigma, x, order: int = 1, _w2=None):
    """``log |Im M(x e^{i pi})|`` of the lognormal MGF (saddle ``w2``).

    Kept in log form because the value underflows long before the
    integrand it feeds becomes negligible.
    """
    w2 = _saddles(mu, sigma, x)[2] if _w2 is None else _w2
    if np.any(w2 - 1.0 < SADDLE_GAP):
        raise SaddleTooClose("w2 - 1 below 1e-3: square-root singularity of the saddle")
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        br = _im_bracket(w2, sigma, order)
        out = (
            math.log(0.5)
            + (w2 - 0.5 * w2 * w2) / (sigma * sigma)
            - 0.5 * np.log(w2 - 1.0)
            + np.log(br)
        )
    out = np.where(np.isinf(w2), -np.inf, out)
    return float(out) if np.ndim(out) == 0 else out


def im_mgf_lognormal(mu, sigma, x, order: int = 1):
    """Saddle-point value of ``Im M(x e^{i pi})`` for a lognormal law.

    ``-1/2 exp((w2 - w2^2/2)/sigma^2) / sqrt(w2 - 1) * bracket`` with

    * order 0: ``bracket = 1``;
    * order 1: ``bracket = 1 + (sigma^2/8) w2/(w2-1)^2``;
    * order 2: ``bracket = 1 + sigma^2/(8 (w2-1)^2) (w2 - 5/3 w2^2/(w2-1))``,
      the complete ``O(sigma^2)`` correction (quartic and squared-cubic
      derivatives of the exponent), which is markedly more accurate.

    Raises
    ------
    KappaOutOfRange
        ``kappa > 1/e``.
    SaddleTooClose
        ``w2 - 1 < 1e-3``.
    """
    out = -np.exp(log_abs_im_mgf_lognormal(mu, sigma, x, order))
    return float(out) if np.ndim(out) == 0 else out


def re_mgf_lognormal(mu, sigma, x, order: int = 1, _w1=None):
    """Saddle-point value of ``Re M(x e^{i pi})`` for a lognormal law.

    ``exp((w1 - w1^2/2)/sigma^2) / sqrt(1 - w1) * bracket`` with the
    brackets of :func:`im_mgf_lognormal` mirrored to the ``w1`` saddle.
    Tends to 1 as ``x -> 0``.
    """
    w1 = _saddles(mu, sigma, x)[1] if _w1 is None else _w1
    if np.any(1.0 - w1 < SADDLE_GAP):
        raise SaddleTooClose("1 - w1 below 1e-3: square-root singularity of the saddle")
    with np.errstate(over="ignore"):
        out = np.exp((w1 - 0.5 * w1 * w1) / (sigma * sigma)) / np.sqrt(1.0 - w1)
        out = out * _re_bracket(w1, sigma, order)
    return float(out) if np.ndim(out) == 0 else out


def _check_lognormal(sev):
    if not isinstance(sev.tail, LognormalTail):
        raise TypeError("severity must have a lognormal tail")


def _body_part(sev, x):
    """``(1 - omega) M1(-x)``; zero without a body."""
    if sev.omega >= 1.0 or sev.body is None:
        return np.zeros_like(np.asarray(x, dtype=float))
    scale = sev.x0 if sev.x0 > 0.0 else 1.0
    return (1.0 - sev.omega) * body_mgf_neg(sev.body, np.asarray(x, dtype=float) * scale, scale)


def log_abs_im_mgf_spliced_lognormal(sev: SplicedSeverity, x, order: int = 1):
    """``log |Im M_s(x e^{i pi})|`` of a spliced lognormal severity (``-inf`` if omega = 0).

    Raises
    ------
    SeparationViolated
        ``w2 - wbar0 < 2``: the truncation point is too close to the saddle.
    """
    _check_lognormal(sev)
    t = sev.tail
    xx = np.asarray(x, dtype=float)
    if sev.omega == 0.0:
        out = np.full_like(xx, -np.inf)
        return float(out) if out.ndim == 0 else out
    _, _, w2 = _saddles(t.mu, t.sigma, xx)
    if np.any(w2 - t.wbar0 < SEPARATION):
        raise SeparationViolated("saddle w2 lies within 2 of the truncation point")
    out = math.log(sev.omega * t.nu) + log_abs_im_mgf_lognormal(t.mu, t.sigma, xx, order, _w2=w2)
    return float(out) if np.ndim(out) == 0 else out


def im_mgf_spliced_lognormal(sev: SplicedSeverity, x, order: int = 1):
    """``Im M_s(x e^{i pi}) = omega nu Im M(x e^{i pi})``; the analytic body adds nothing.

    Raises
    ------
    SeparationViolated
        ``w2 - wbar0 < 2``: the truncation point is too close to the saddle.
    """
    out = -np.exp(log_abs_im_mgf_spliced_lognormal(sev, x, order))
    return float(out) if np.ndim(out) == 0 else out


def re_mgf_spliced_lognormal(sev: SplicedSeverity, x, order: int = 1):
    """``Re M_s(x e^{i pi})`` of a body spliced to a truncated lognormal.

    Body part ``(1-omega) M1(-x)`` plus the tail part, which is

    * the interior saddle value ``omega nu Re M`` when ``wbar0 < w1``;
    * the left-endpoint value ``omega nu sigma/sqrt(2 pi)
      exp((kappa e^wbar0 - wbar0^2/2)/sigma^2) / (wbar0 - kappa e^wbar0)``
      when ``wbar0 > w1``;

    blended linearly over ``|wbar0 - w1| <= 0.05`` (the endpoint form is
    held at ``w1 + 0.05`` inside the band, where it would otherwise diverge).
    """
    _check_lognormal(sev)
    t = sev.tail
    xx = np.asarray(x, dtype=float)
    out = _body_part(sev, xx)
    if sev.omega > 0.0:
        k, w1, _ = _saddles(t.mu, t.sigma, xx)
        wb = t.wbar0
        d = wb - w1
        interior = sev.omega * t.nu * re_mgf_lognormal(t.mu, t.sigma, xx, order, _w1=w1)
        if np.isfinite(wb):
            w_edge = np.maximum(wb, w1 + BLEND_HALF_WIDTH)
            with np.errstate(over="ignore"):
                edge = _boundary_term_vec(sev, k, w_edge)
            wt = np.clip((d + BLEND_HALF_WIDTH) / (2.0 * BLEND_HALF_WIDTH), 0.0, 1.0)
            tail_part = np.where(wt <= 0.0, interior, np.where(wt >= 1.0, edge, (1 - wt) * interior + wt * edge))
        else:
            tail_part = interior
        out = out + tail_part
    return float(out) if np.ndim(out) == 0 else out


def _boundary_term_vec(sev, kappa, wb):
    t = sev.tail
    s2 = t.sigma * t.sigma
    ke = kappa * np.exp(wb)
    return (
        sev.omega * t.nu * t.sigma / math.sqrt(2.0 * math.pi)
        * np.exp((ke - 0.5 * wb * wb) / s2)
        / (wb - ke)
    )


def third_arc_bound(sigma: float, w2):
    """Size estimate of the neglected far-arc contribution to the continued MGF.

    ``sigma/(2 sqrt(2 pi) w2) exp(-w2/sigma^2 - (w2^2 - pi^2)/(2 sigma^2))``;
    reported only, never used as a correction.
    """
    w2 = np.asarray(w2, dtype=float)
    s2 = sigma * sigma
    with np.errstate(over="ignore", divide="ignore"):
        out = sigma / (2.0 * math.sqrt(2.0 * math.pi) * w2) * np.exp(
            -w2 / s2 - (w2 * w2 - math.pi ** 2) / (2.0 * s2)
        )
    return float(out) if out.ndim == 0 else out


def kernel_diagnostics(sev: SplicedSeverity, x, evaluations: int = 0) -> CutKernelDiagnostics:
    """Classify the kernel regime at ``x`` and report the far-arc bound."""
    if isinstance(sev.tail, ParetoTail):
        return CutKernelDiagnostics(evaluations, "series", 0.0)
    t = sev.tail
    s = lognormal_saddles(t.mu, t.sigma, float(x))
    regime = "boundary" if t.wbar0 > s.w1 else "saddle"
    return CutKernelDiagnostics(evaluations, regime, float(third_arc_bound(t.sigma, s.w2)))


# ---------------------------------------------------------------------------


def cut_values(sev: SplicedSeverity, x, order: int = 1, perturb: bool = True):
    """``(Re M - 1, Im M)`` on the upper bank ``z = x e^{i pi}``, vectorised in ``x``.

    Returning ``Re M - 1`` keeps the compound exponent ``rate (M - 1)``
    accurate at small ``x``.
    """
    xx = np.asarray(x, dtype=float)
    if isinstance(sev.tail, ParetoTail):
        re = psi(sev, xx, perturb=perturb)
        im = _pareto_im(sev, sev.x0 * xx)
    else:
        re = re_mgf_spliced_lognormal(sev, xx, order) - 1.0
        im = im_mgf_spliced_lognormal(sev, xx, order)
    return re, im
