"""Real-argument special functions used by the tail-probability formulas.

Gamma with explicit pole handling, Kummer's confluent hypergeometric
function on the non-negative axis, both real branches of the Lambert W
function, the normal CDF and the exact Poisson tail.  Everything here is a
pure function of its arguments.
"""

import math

import numpy as np
from scipy import special as _sc

from .errors import DomainError, OverflowGuard, ParameterPole, PoleArgument

__all__ = [
    "gamma",
    "rgamma",
    "sinpi",
    "cospi",
    "kummer_phi",
    "lambert_w0",
    "lambert_w_minus1",
    "normal_cdf",
    "poisson_tail_exact",
]

INV_E = math.exp(-1.0)
_POLE_TOL = 1e-12
# allowance below -1/e for arguments that are -1/e up to rounding
_BRANCH_SLACK = 4e-16


def _near_nonpositive_int(x, tol=_POLE_TOL):
    return x <= tol and abs(x - round(x)) <= tol


def sinpi(x):
    """sin(pi*x) with exact zeros at the integers."""
    r = math.fmod(float(x), 2.0)
    if r < 0.0:
        r += 2.0
    if r <= 0.25:
        return math.sin(math.pi * r)
    if r <= 0.75:
        return math.cos(math.pi * (r - 0.5))
    if r <= 1.25:
        return -math.sin(math.pi * (r - 1.0))
    if r <= 1.75:
        return -math.cos(math.pi * (r - 1.5))
    return math.sin(math.pi * (r - 2.0))


def cospi(x):
    """cos(pi*x) with exact zeros at the half-integers."""
    return sinpi(float(x) + 0.5)


def gamma(x):
    """Gamma function for real, non-pole arguments.

    Arguments below 1/2 go through the reflection formula
    ``Gamma(x) Gamma(1-x) = pi / sin(pi x)`` so the poles at the
    non-positive integers stay explicit.

    Raises
    ------
    PoleArgument
        If ``x`` lies within 1e-12 of a non-positive integer.
    OverflowGuard
        If the value exceeds the double range (x > ~171.6).
    """
    x = float(x)
    if _near_nonpositive_int(x):
        raise PoleArgument(f"Gamma has a pole at x={x!r}")
    if x >= 0.5:
        try:
            return math.gamma(x)
        except OverflowError:
            raise OverflowGuard(f"Gamma({x}) overflows") from None
    if 1.0 - x > 171.0:
        # |Gamma(x)| < 1e-300 here
        return 0.0
    return math.pi / (sinpi(x) * math.gamma(1.0 - x))


def rgamma(x):
    """Reciprocal Gamma, an entire function: zero at the non-positive integers."""
    x = float(x)
    if x >= 0.5:
        if x > 171.0:
            return 0.0
        return 1.0 / math.gamma(x)
    return sinpi(x) * math.gamma(1.0 - x) / math.pi


# ---------------------------------------------------------------------------
# Kummer's function

_KUMMER_MAX_TERMS = 5000
_CANCEL_LIMIT = 1e3
_ASYMPTOTIC_ONLY = 600.0


def _kummer_series(a, b, z):
    """Power series with Neumaier-compensated summation.

    Returns (sum, max |term|) elementwise.
    """
    total = np.ones_like(z)
    comp = np.zeros_like(z)
    term = np.ones_like(z)
    biggest = np.ones_like(z)
    active = z > 0.0
    n = 0
    while active.any() and n < _KUMMER_MAX_TERMS:
        term = np.where(active, term * ((a + n) / (b + n)) * z / (n + 1), 0.0)
        t = total + term
        comp += np.where(np.abs(total) >= np.abs(term), (total - t) + term, (term - t) + total)
        total = t
        biggest = np.maximum(biggest, np.abs(term))
        n += 1
        # stop once past the term peak and the terms no longer register
        done = (n > z) & (np.abs(term) <= 1e-17 * np.abs(total + comp))
        active &= ~done & (term != 0.0)
    return total + comp, biggest


def _kummer_asymptotic(a, b, z):
    """Large-z expansion for real z > 0; returns (value, relative error estimate).

    The subdominant exponentially small part is taken Stokes-averaged
    (cos(pi a) factor) so the result stays real.
    """
    ga = rgamma(a)
    lead = 0.0
    err = 0.0
    if ga != 0.0:
        s, last, k, term = 1.0, 1.0, 0, 1.0
        while k < 200:
            nxt = term * (b - a + k) * (1 - a + k) / ((k + 1) * z)
            if abs(nxt) >= abs(term) or nxt == 0.0:
                break
            term = nxt
            s += term
            last = abs(term)
            k += 1
            if last < 1e-17 * abs(s):
                break
        log_mag = z + (a - b) * math.log(z)
        if log_mag > 700.0:
            raise OverflowGuard(f"Kummer function overflows at z={z}")
        lead = ga * math.exp(log_mag) * s
        err = last
    gba = rgamma(b - a)
    sub = 0.0
    if gba != 0.0:
        s2, term, k = 1.0, 1.0, 0
        while k < 200:
            nxt = term * (a + k) * (a - b + 1 + k) / ((k + 1) * (-z))
            if abs(nxt) >= abs(term) or nxt == 0.0:
                break
            term = nxt
            s2 += term
            k += 1
        sub = gba * cospi(a) * z ** (-a) * s2
    gb = gamma(b)
    value = gb * (lead + sub)
    return value, err


def kummer_phi(a, b, z):
    """Confluent hypergeometric function 1F1(a; b; z) for real z >= 0.

    Summed from its power series with compensated summation.  When the
    series cancels by more than three digits and the large-z expansion is
    accurate to better than 1e-13 at that point, the expansion is used
    instead.  Accepts a scalar or an array for ``z``.

    Raises
    ------
    ParameterPole
        ``b`` is a non-positive integer.
    DomainError
        Any ``z < 0``.
    OverflowGuard
        The result exceeds the double range.
    """
    a = float(a)
    b = float(b)
    if _near_nonpositive_int(b):
        raise ParameterPole(f"Kummer function undefined for b={b!r}")
    zz = np.asarray(z, dtype=float)
    if np.any(zz < 0.0) or np.any(np.isnan(zz)):
        raise DomainError("kummer_phi is only implemented for z >= 0")
    scalar = zz.ndim == 0
    zz = np.atleast_1d(zz)
    out = np.empty_like(zz)

    big = zz > _ASYMPTOTIC_ONLY
    small = ~big
    if small.any():
        with np.errstate(over="ignore", invalid="ignore"):
            val, biggest = _kummer_series(a, b, zz[small])
        out[small] = val
        ratio = biggest / np.maximum(np.abs(val), 1e-300)
        for j in np.flatnonzero(ratio > _CANCEL_LIMIT):
            zj = zz[small][j]
            try:
                aval, aerr = _kummer_asymptotic(a, b, zj)
            except OverflowGuard:
                continue
            if aerr < 1e-13:
                idx = np.flatnonzero(small)[j]
                out[idx] = aval
    for idx in np.flatnonzero(big):
        out[idx], _ = _kummer_asymptotic(a, b, zz[idx])
    if not np.all(np.isfinite(out)) or np.any(np.abs(out) > 1e300):
        raise OverflowGuard("Kummer function exceeds the double range")
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Lambert W


def _check_branch_domain(x, upper=None):
    if np.any(np.isnan(x)) or np.any(x < -INV_E - _BRANCH_SLACK):
        raise DomainError("Lambert W is real only for x >= -1/e")
    if upper is not None and np.any(x >= upper):
        raise DomainError("W_{-1} is real only for -1/e <= x < 0")


def _halley(w, x, fixed):
    for _ in range(60):
        ew = np.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
            step = np.where(fixed, 0.0, f / denom)
        step = np.where(np.isfinite(step), step, 0.0)
        w = w - step
        if np.all(np.abs(step) <= 4e-16 * np.maximum(1.0, np.abs(w))):
            break
    return w


def _branch_point_series(x, sign):
    # p = +-sqrt(2(e x + 1)); W = -1 + p - p^2/3 + 11/72 p^3
    p = sign * np.sqrt(np.maximum(2.0 * (math.e * x + 1.0), 0.0))
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3


def lambert_w0(x):
    """Principal branch W_0 of the Lambert function, ``W e^W = x``, x >= -1/e.

    Initial guesses: the branch-point series near -1/e, the Taylor series
    ``x - x^2 + 3/2 x^3 - ...`` near the origin and ``log x - log log x``
    for large x; then Halley iteration.
    """
    xx = np.asarray(x, dtype=float)
    _check_branch_domain(xx)
    scalar = xx.ndim == 0
    xx = np.atleast_1d(np.maximum(xx, -INV_E))
    w = np.empty_like(xx)
    near = xx < -0.25
    tiny = (~near) & (np.abs(xx) <= 0.25)
    mid = (xx > 0.25) & (xx <= 3.0)
    large = xx > 3.0
    w[near] = _branch_point_series(xx[near], 1.0)
    t = xx[tiny]
    w[tiny] = t - t ** 2 + 1.5 * t ** 3 - 8.0 / 3.0 * t ** 4 + 125.0 / 24.0 * t ** 5
    lp = np.log1p(xx[mid])
    w[mid] = lp * (1.0 - np.log1p(lp) / (2.0 + lp))
    l1 = np.log(xx[large])
    l2 = np.log(l1)
    w[large] = l1 - l2 + l2 / l1
    fixed = (xx == -INV_E) | (xx == 0.0)
    w[xx == -INV_E] = -1.0
    w[xx == 0.0] = 0.0
    w = _halley(w, xx, fixed)
    w = np.maximum(w, -1.0)
    return float(w[0]) if scalar else w


def lambert_w_minus1(x):
    """Lower real branch W_{-1} of the Lambert function, -1/e <= x < 0."""
    xx = np.asarray(x, dtype=float)
    _check_branch_domain(xx, upper=0.0)
    scalar = xx.ndim == 0
    xx = np.atleast_1d(np.maximum(xx, -INV_E))
    w = np.empty_like(xx)
    near = xx < -0.25
    w[near] = _branch_point_series(xx[near], -1.0)
    far = ~near
    l1 = np.log(-xx[far])
    l2 = np.log(-l1)
    w[far] = l1 - l2 + l2 / l1
    fixed = xx == -INV_E
    w[fixed] = -1.0
    w = _halley(w, xx, fixed)
    w = np.minimum(w, -1.0)
    return float(w[0]) if scalar else w


# ---------------------------------------------------------------------------


def normal_cdf(x):
    """Standard normal CDF via the complementary error function."""
    v = 0.5 * _sc.erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(v) if np.ndim(v) == 0 else v


def _log_poisson_terms(rate, ks):
    return -rate + ks * math.log(rate) - _sc.gammaln(ks + 1.0)


def _logsum(logt):
    m = float(np.max(logt))
    return m, math.fsum(np.exp(logt - m))


def poisson_tail_exact(rate, n0):
    """P(N > n0) for N ~ Poisson(rate), summed in log space.

    Sums the terms above ``n0`` directly when ``n0`` sits at or beyond the
    mode, and otherwise the complementary head ``k <= n0``; both sums only
    cover the terms that matter at double precision.
    """
    rate = float(rate)
    n0 = int(n0)
    if rate <= 0.0:
        raise DomainError("Poisson rate must be positive")
    if n0 < 0:
        return 1.0
    width = int(40.0 * math.sqrt(rate) + 60.0)
    if n0 + 1 > rate:
        k_hi = n0 + 1 + width
        while True:
            ks = np.arange(n0 + 1, k_hi + 1, dtype=float)
            logt = _log_poisson_terms(rate, ks)
            if logt[-1] < logt.max() - 45.0:
                break
            k_hi += width
        m, s = _logsum(logt)
        return math.exp(m + math.log(s))
    k_lo = max(0, int(rate) - width)
    ks = np.arange(k_lo, n0 + 1, dtype=float)
    logt = _log_poisson_terms(rate, ks)
    m, s = _logsum(logt)
    return max(0.0, 1.0 - math.exp(m + math.log(s)))
