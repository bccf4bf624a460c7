"""Single-loss severity models: a light body below a threshold spliced to a
heavy Pareto or lognormal tail above it.

The body enters the tail formulas only through its exponential moment
``E[exp(y X / x0)]`` (the Laplace transform continued to the negative real
axis) and, for the asymptotic series, through its first two rescaled
moments.  Calibration helpers estimate the Pareto exponent by maximum
likelihood and the tail weight empirically.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    DegenerateData,
    DensityUnavailable,
    DomainError,
    EmptyData,
    InsufficientTailData,
    OverflowGuard,
)
from .specfun import normal_cdf

__all__ = [
    "ParetoTail",
    "LognormalTail",
    "MomentBody",
    "UniformBody",
    "PointMassBody",
    "SplicedSeverity",
    "Frequency",
    "pareto_ccdf",
    "body_mgf_neg",
    "body_moments",
    "fit_alpha",
    "fit_omega",
    "junction_residual",
    "read_losses_csv",
]


@dataclass(frozen=True)
class ParetoTail:
    """Power-law tail with CCDF ``(s/x0)^-(alpha-1)`` for ``s >= x0``."""

    alpha: float
    x0: float

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise DomainError(f"Pareto exponent must exceed 1, got {self.alpha}")
        if not self.x0 > 0.0:
            raise DomainError(f"Pareto threshold must be positive, got {self.x0}")

    @property
    def C(self) -> float:
        """Density normalisation ``(alpha-1) x0^(alpha-1)``."""
        return (self.alpha - 1.0) * self.x0 ** (self.alpha - 1.0)

    def density(self, x: float) -> float:
        return (self.alpha - 1.0) / self.x0 * (x / self.x0) ** (-self.alpha)


@dataclass(frozen=True)
class LognormalTail:
    """Lognormal law truncated to ``x >= x0`` and renormalised.

    ``x0 = 0`` gives the plain lognormal.
    """

    mu: float
    sigma: float
    x0: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise DomainError(f"lognormal sigma must be positive, got {self.sigma}")
        if self.x0 < 0.0:
            raise DomainError("lognormal truncation point must be non-negative")

    @property
    def wbar0(self) -> float:
        """Log-threshold relative to the location, ``ln x0 - mu`` (-inf if x0 = 0)."""
        return math.log(self.x0) - self.mu if self.x0 > 0.0 else -math.inf

    @property
    def nu(self) -> float:
        """Renormalisation ``1 / N(-wbar0/sigma)`` of the truncated density."""
        if self.x0 == 0.0:
            return 1.0
        return 1.0 / normal_cdf(-self.wbar0 / self.sigma)

    def density(self, x: float) -> float:
        z = (math.log(x) - self.mu) / self.sigma
        return self.nu * math.exp(-0.5 * z * z) / (x * self.sigma * math.sqrt(2.0 * math.pi))


@dataclass(frozen=True)
class MomentBody:
    """Body known only through its rescaled moment coefficients.

    ``E[exp(yX/x0)] = 1 + m1 y + m2 y^2 + sum_k higher[k] y^(k+3)``, i.e.
    ``m1 = E[X]/x0`` and ``m2 = E[X^2]/(2 x0^2)`` for an exact body.
    """

    m1: float
    m2: float
    higher: tuple = ()


@dataclass(frozen=True)
class UniformBody:
    """Uniform body on ``[lo, hi]``."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo >= 0.0 and self.lo < self.hi):
            raise DomainError(f"uniform body needs 0 <= lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class PointMassBody:
    """Degenerate body concentrated at ``at``."""

    at: float

    def __post_init__(self):
        if self.at < 0.0:
            raise DomainError("point-mass body must sit at a non-negative loss")


BodyModel = Union[MomentBody, UniformBody, PointMassBody]
TailModel = Union[ParetoTail, LognormalTail]


@dataclass(frozen=True)
class SplicedSeverity:
    """Mixture ``(1-omega) f_body`` below ``x0`` and ``omega f_tail`` above.

    ``body`` may be omitted only when ``omega == 1``.  A lognormal tail may
    use ``x0 = 0`` (no splice at all).
    """

    omega: float
    x0: float
    body: Optional[BodyModel]
    tail: TailModel

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise DomainError(f"omega must lie in [0, 1], got {self.omega}")
        if not math.isclose(self.tail.x0, self.x0, rel_tol=1e-12, abs_tol=0.0):
            raise DomainError("tail threshold must equal the splice point x0")
        if self.x0 <= 0.0 and not isinstance(self.tail, LognormalTail):
            raise DomainError("splice point x0 must be positive")
        if self.body is None:
            if self.omega != 1.0:
                raise DomainError("a body model is required when omega < 1")
        elif self.x0 > 0.0:
            top = {
                UniformBody: lambda b: b.hi,
                PointMassBody: lambda b: b.at,
            }.get(type(self.body))
            if top is not None and top(self.body) > self.x0 * (1.0 + 1e-12):
                raise DomainError("body support must lie inside [0, x0]")

    @property
    def is_pareto(self) -> bool:
        return isinstance(self.tail, ParetoTail)


@dataclass(frozen=True)
class Frequency:
    """Poisson loss frequency: intensity ``lam`` per unit time over ``horizon``."""

    lam: float
    horizon: float = 1.0

    def __post_init__(self):
        rate = self.lam * self.horizon
        if not (self.lam > 0.0 and self.horizon > 0.0 and math.isfinite(rate)):
            raise DomainError("Poisson intensity and horizon must be positive and finite")

    @property
    def rate(self) -> float:
        """Expected number of losses over the horizon."""
        return self.lam * self.horizon


# ---------------------------------------------------------------------------


def pareto_ccdf(tail: ParetoTail, s: float) -> float:
    """``P(X > s) = (s/x0)^-(alpha-1)`` for ``s >= x0``."""
    if s < tail.x0:
        raise DomainError(f"s={s} below the Pareto threshold {tail.x0}")
    return (s / tail.x0) ** (-(tail.alpha - 1.0))


def body_mgf_neg(body: BodyModel, y, x0: float):
    """Exponential moment ``E[exp(y X / x0)]`` of the body, ``y >= 0``.

    Vectorised over ``y``.  Equals 1 at ``y = 0`` for every body.

    Raises
    ------
    OverflowGuard
        If any value exceeds 1e300.
    """
    yy = np.asarray(y, dtype=float)
    if isinstance(body, MomentBody):
        coeffs = (1.0, body.m1, body.m2) + tuple(body.higher)
        out = np.polynomial.polynomial.polyval(yy, coeffs)
    elif isinstance(body, UniformBody):
        a = yy * body.lo / x0
        h = yy * (body.hi - body.lo) / x0
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            ratio = np.where(h > 0.0, np.expm1(h) / np.where(h > 0.0, h, 1.0), 1.0)
            out = np.exp(a) * ratio
    elif isinstance(body, PointMassBody):
        with np.errstate(over="ignore"):
            out = np.exp(yy * body.at / x0)
    else:
        raise DomainError(f"unknown body model {body!r}")
    if np.any(~np.isfinite(out)) or np.any(np.abs(out) > 1e300):
        raise OverflowGuard("body exponential moment exceeds 1e300")
    return float(out) if np.ndim(out) == 0 else out


def body_moments(body: BodyModel, x0: float) -> tuple:
    """Rescaled raw moments ``(E[X]/x0, E[X^2]/(2 x0^2))`` of the body."""
    if isinstance(body, MomentBody):
        return body.m1, body.m2
    if isinstance(body, UniformBody):
        lo, hi = body.lo / x0, body.hi / x0
        return 0.5 * (lo + hi), (lo * lo + lo * hi + hi * hi) / 6.0
    if isinstance(body, PointMassBody):
        a = body.at / x0
        return a, 0.5 * a * a
    raise DomainError(f"unknown body model {body!r}")


def fit_alpha(losses: Sequence[float], x0: float, min_tail: int = 2) -> tuple:
    """Maximum-likelihood Pareto exponent from the losses strictly above ``x0``.

    Returns
    -------
    alpha_hat, std_err, n_tail
        ``alpha_hat = 1 + N / sum(ln(x_i/x0))`` and ``std_err = (alpha_hat-1)/sqrt(N)``.
    """
    x = np.asarray(losses, dtype=float)
    tail = x[x > x0]
    n = tail.size
    if n == 0 and np.count_nonzero(x == x0) >= min_tail:
        raise DegenerateData("all candidate tail losses sit exactly at the threshold")
    if n < min_tail:
        raise InsufficientTailData(f"need at least {min_tail} losses above x0, got {n}")
    logs = math.fsum(np.log(tail / x0))
    if logs <= 0.0:
        raise DegenerateData("all tail losses sit at the threshold")
    alpha = 1.0 + n / logs
    return alpha, (alpha - 1.0) / math.sqrt(n), n


def fit_omega(losses: Sequence[float], x0: float) -> float:
    """Empirical tail weight: fraction of losses strictly above ``x0``."""
    x = np.asarray(losses, dtype=float)
    if x.size == 0:
        raise EmptyData("no losses supplied")
    return float(np.count_nonzero(x > x0)) / x.size


def _body_density_at(body: BodyModel, x: float) -> float:
    if isinstance(body, UniformBody):
        return 1.0 / (body.hi - body.lo) if body.lo <= x <= body.hi else 0.0
    raise DensityUnavailable(f"{type(body).__name__} has no density")


def junction_residual(sev: SplicedSeverity) -> float:
    """Density mismatch ``(1-omega) f_body(x0) - omega f_tail(x0)`` at the splice."""
    if sev.body is None:
        raise DensityUnavailable("severity has no body model")
    f1 = _body_density_at(sev.body, sev.x0)
    f2 = sev.tail.density(sev.x0)
    return (1.0 - sev.omega) * f1 - sev.omega * f2


def read_losses_csv(path) -> np.ndarray:
    """Read a one-column loss file; a non-numeric first row is taken as a header."""
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not row[0].strip():
                continue
            try:
                values.append(float(row[0]))
            except ValueError:
                if i == 0:
                    continue
                raise DomainError(f"non-numeric loss on line {i + 1}: {row[0]!r}") from None
    return np.asarray(values, dtype=float)
