"""Tail probabilities and quantiles of compound Poisson losses with spliced
heavy-tailed severities, computed from a branch-cut integral representation.

The main entry points are :func:`tail` (probability that the aggregate loss
exceeds a level), :func:`solve_var` (the quantile at a confidence level) and
:func:`simulate_quantile` (a seeded Monte Carlo cross-check).
"""

from .asymptotics import (
    AsymptoticExpansion,
    eval_expansion,
    expand_compound_pareto,
    invert_expansion,
    lognormal_single_asymptotic,
)
from .compound import CompoundModel, Portfolio, tail, tail_compound_lognormal, tail_compound_pareto, tail_portfolio, tail_single
from .errors import *  # noqa: F401,F403
from .mc_oracle import McConfig, McEstimate, estimate_tail_prob, sample_severity, simulate_quantile, simulate_totals
from .quadrature import QuadratureSpec, TailResult
from .severity import (
    Frequency,
    LognormalTail,
    MomentBody,
    ParetoTail,
    PointMassBody,
    SplicedSeverity,
    UniformBody,
    fit_alpha,
    fit_omega,
)
from .varsolve import VarQuery, VarResult, initial_guess, solve_var

__version__ = "0.1.0"
