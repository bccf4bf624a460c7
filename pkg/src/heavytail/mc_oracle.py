"""Seeded Monte Carlo simulation of compound Poisson losses.

Paths are generated in fixed-size blocks.  Each (replication, block) pair
owns its own Philox counter range, so a block's random numbers depend only
on the seed and the block's coordinates: results are bit-identical no
matter how many threads run the blocks or in which order they finish.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr, ndtri

from .compound import CompoundModel, Portfolio
from .errors import BodyNotSamplable, DomainError
from .severity import (
    LognormalTail,
    MomentBody,
    ParetoTail,
    PointMassBody,
    SplicedSeverity,
    UniformBody,
)

__all__ = [
    "McConfig",
    "McEstimate",
    "sample_severity",
    "sample_body",
    "simulate_totals",
    "simulate_quantile",
    "estimate_tail_prob",
    "nearest_rank",
    "dump_totals_csv",
]

THREADS_ENV = "HEAVYTAIL_THREADS"


@dataclass(frozen=True)
class McConfig:
    """Simulation size and seed.  ``threads=None`` reads ``HEAVYTAIL_THREADS``."""

    n_paths: int = 1_000_000
    n_reps: int = 10
    seed: int = 20240601
    percentile: float = 0.999
    block_size: int = 1 << 16
    threads: Optional[int] = None

    def __post_init__(self):
        if self.n_paths < 10_000:
            raise DomainError("n_paths must be at least 10^4")
        if self.n_reps < 1:
            raise DomainError("n_reps must be at least 1")
        if not 0.0 < self.percentile < 1.0:
            raise DomainError("percentile must lie in (0, 1)")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.block_size < 1:
            raise DomainError("block_size must be positive")


@dataclass(frozen=True)
class McEstimate:
    """Quantile estimate across replications with a normal 95% interval."""

    quantile_mean: float
    quantile_sd: float
    ci95_lo: float
    ci95_hi: float
    quantiles: tuple = ()
    tail_prob_at: Optional[tuple] = None  # (s, p_hat, stderr)


# ---------------------------------------------------------------------------
# samplers


def sample_body(body, u, x0: float):
    """Inverse-CDF draw from the body model."""
    u = np.asarray(u, dtype=float)
    if isinstance(body, UniformBody):
        return body.lo + u * (body.hi - body.lo)
    if isinstance(body, PointMassBody):
        return np.full_like(u, body.at)
    if isinstance(body, MomentBody):
        raise BodyNotSamplable("a body known only by its moments cannot be sampled")
    raise BodyNotSamplable(f"cannot sample body {body!r}")


def _sample_tail(tail, u):
    if isinstance(tail, ParetoTail):
        return tail.x0 * u ** (-1.0 / (tail.alpha - 1.0))
    if isinstance(tail, LognormalTail):
        c = 1.0 if tail.x0 == 0.0 else ndtr(-tail.wbar0 / tail.sigma)
        return np.exp(tail.mu - tail.sigma * ndtri(u * c))
    raise DomainError(f"unknown tail model {tail!r}")


def sample_severity(sev: SplicedSeverity, u, pick=None):
    """Inverse-CDF severity draw; ``u`` in (0, 1) is the upper-tail probability.

    Without ``pick`` the tail component is sampled: ``x0 u^(-1/(alpha-1))``
    for Pareto, ``exp(mu - sigma N^-1(u N(-wbar0/sigma)))`` for the truncated
    lognormal.  With ``pick`` (a second uniform), a draw comes from the tail
    when ``pick < omega`` and from the body otherwise.
    """
    uu = np.asarray(u, dtype=float)
    if pick is None:
        out = _sample_tail(sev.tail, uu)
    else:
        pk = np.asarray(pick, dtype=float)
        from_tail = pk < sev.omega
        out = np.empty(np.broadcast(uu, pk).shape)
        uu = np.broadcast_to(uu, out.shape)
        out[from_tail] = _sample_tail(sev.tail, uu[from_tail])
        if (~from_tail).any():
            out[~from_tail] = sample_body(sev.body, uu[~from_tail], sev.x0)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# simulation


def _units_of(model):
    if isinstance(model, CompoundModel):
        return [model], None, None
    if isinstance(model, Portfolio):
        return list(model.units), model.factor_weights, model.factor_scales
    raise DomainError(f"cannot simulate {type(model).__name__}")


def _check_samplable(units):
    for u in units:
        sev = u.severity
        if sev.omega < 1.0 and isinstance(sev.body, MomentBody):
            raise BodyNotSamplable("a body known only by its moments cannot be sampled")


def _block_totals(model, seed, rep, block, n):
    units, weights, scales = _units_of(model)
    gen = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, block, rep]))
    totals = np.zeros(n)
    if weights is not None:
        g = gen.choice(len(weights), size=n, p=np.asarray(weights))
        sc = np.asarray(scales)[g]
    for i, unit in enumerate(units):
        lam = unit.rate if weights is None else unit.rate * sc[:, i]
        counts = gen.poisson(lam, size=n)
        k = int(counts.sum())
        if k == 0:
            continue
        sev = unit.severity
        u = 1.0 - gen.random(k)  # (0, 1]
        if 0.0 < sev.omega < 1.0:
            x = sample_severity(sev, u, gen.random(k))
        elif sev.omega == 0.0:
            x = sample_body(sev.body, u, sev.x0)
        else:
            x = sample_severity(sev, u)
        totals += np.bincount(np.repeat(np.arange(n), counts), weights=x, minlength=n)
    return totals


def _threads(cfg):
    if cfg.threads is not None:
        n = cfg.threads
    else:
        n = os.cpu_count() or 1
        env = os.environ.get(THREADS_ENV)
        if env:
            n = min(n, int(env))
    return max(1, int(n))


def simulate_totals(model, cfg: McConfig, rep: int = 0) -> np.ndarray:
    """All ``n_paths`` aggregate losses of one replication, in path order."""
    units, _, _ = _units_of(model)
    _check_samplable(units)
    sizes = [cfg.block_size] * (cfg.n_paths // cfg.block_size)
    if cfg.n_paths % cfg.block_size:
        sizes.append(cfg.n_paths % cfg.block_size)
    jobs = [(b, n) for b, n in enumerate(sizes)]
    nt = _threads(cfg)
    if nt == 1 or len(jobs) == 1:
        parts = [_block_totals(model, cfg.seed, rep, b, n) for b, n in jobs]
    else:
        with ThreadPoolExecutor(max_workers=nt) as ex:
            parts = list(ex.map(lambda j: _block_totals(model, cfg.seed, rep, *j), jobs))
    return np.concatenate(parts)


def nearest_rank(values: np.ndarray, p: float) -> float:
    """Nearest-rank empirical quantile: the ``ceil(p n)``-th smallest value."""
    n = values.size
    k = max(1, int(math.ceil(p * n - 1e-9)))
    return float(np.partition(values, k - 1)[k - 1])


def simulate_quantile(model, cfg: McConfig, tail_at: Optional[float] = None) -> McEstimate:
    """Per-replication nearest-rank quantiles and their mean, sd and 95% interval.

    With ``tail_at`` the pooled exceedance frequency of that level is
    reported as well.
    """
    qs = []
    exceed = 0
    for r in range(cfg.n_reps):
        tot = simulate_totals(model, cfg, r)
        qs.append(nearest_rank(tot, cfg.percentile))
        if tail_at is not None:
            exceed += int(np.count_nonzero(tot > tail_at))
    q = np.array(qs)
    mean = float(q.mean())
    sd = float(q.std(ddof=1)) if q.size > 1 else 0.0
    half = 1.96 * sd / math.sqrt(q.size)
    tp = None
    if tail_at is not None:
        n = cfg.n_paths * cfg.n_reps
        p = exceed / n
        tp = (tail_at, p, math.sqrt(p * (1.0 - p) / n))
    return McEstimate(mean, sd, mean - half, mean + half, tuple(qs), tp)


def estimate_tail_prob(model, s: float, cfg: McConfig) -> tuple:
    """Pooled fraction of aggregate losses above ``s`` with its binomial stderr."""
    exceed = 0
    for r in range(cfg.n_reps):
        exceed += int(np.count_nonzero(simulate_totals(model, cfg, r) > s))
    n = cfg.n_paths * cfg.n_reps
    p = exceed / n
    return p, math.sqrt(p * (1.0 - p) / n)


def dump_totals_csv(model, cfg: McConfig, path, rep: int = 0) -> None:
    """Write one replication's aggregate losses as a one-column CSV."""
    tot = simulate_totals(model, cfg, rep)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["total"])
        w.writerows([repr(float(v))] for v in tot)
