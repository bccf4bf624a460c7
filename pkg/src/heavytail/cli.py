"""Command-line front end.

Every run is described by one JSON config file so that it can be archived
and diffed.  The layout::

    {
      "model": {
        "units": [
          {"severity": {"family": "pareto", "alpha": 2.2, "x0": 1e5,
                        "omega": 0.35,
                        "body": {"kind": "uniform", "lo": 4e4, "hi": 1e5}},
           "frequency": {"lambda": 20, "horizon": 1}}
        ],
        "factor": {"weights": [...], "scales": [[...], ...]}      (optional)
      },
      "query": {"var_at": 0.999}   or {"tail_at": 1e8}
               or {"sweep": {"lo": 1e7, "hi": 1e8, "n": 11}},
      "method": {"rel_tol": 1e-10, "abs_tol": 1e-14, "max_subdivisions": 200,
                 "cutoff": null, "include_poisson_term": true, "order": 2,
                 "n_terms": 6, "tol_rel": 1e-6},
      "mc": {"paths": 1000000, "reps": 20, "seed": 1, "block_size": 65536},
      "fit": {"data": "losses.csv", "x0": 1e5},
      "output": {"path": "out.csv", "format": "csv"}
    }

A single unit may be given directly as ``"model": {"severity": ..., "frequency": ...}``.
A severity may set ``"alpha"`` to ``"fit"`` and ``"omega"`` to ``"empirical"``
to calibrate from ``"data"`` (a loss CSV).  Relative paths are resolved
against the config file's directory.

Exit codes: 0 success, 2 input error, 3 numerical failure (a JSON
diagnostics record goes to stderr and, with an output path, to
``<out>.diagnostics.json``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .compound import CompoundModel, Portfolio, tail
from .errors import DataError, DomainError, EmptyData, NonMonotoneTail, NumericalError
from .mc_oracle import McConfig, simulate_quantile
from .quadrature import QuadratureSpec
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
    read_losses_csv,
)
from .varsolve import VarQuery, solve_var

__all__ = ["RunConfig", "ConfigError", "load_config", "build_model", "main"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

COMPARE_COLUMNS = ("method", "rep", "value", "ci_lo", "ci_hi", "runtime_ms")
QUERY_KINDS = ("tail_at", "var_at", "sweep")


class ConfigError(ValueError):
    """The config file is malformed or refers to missing files."""


@dataclass
class RunConfig:
    """Parsed run description (see the module docstring for the JSON layout)."""

    model: dict
    query: dict = field(default_factory=dict)
    method: dict = field(default_factory=dict)
    mc: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @property
    def query_kind(self) -> Optional[str]:
        return next(iter(self.query), None)

    def quadrature_spec(self) -> QuadratureSpec:
        m = self.method
        return QuadratureSpec(
            rel_tol=float(m.get("rel_tol", 1e-10)),
            abs_tol=float(m.get("abs_tol", 1e-14)),
            max_subdivisions=int(m.get("max_subdivisions", 200)),
            cutoff=m.get("cutoff"),
        )

    def tail_kwargs(self, model) -> dict:
        kw = {}
        if "include_poisson_term" in self.method and _has_pareto(model):
            kw["include_poisson_term"] = bool(self.method["include_poisson_term"])
        if "order" in self.method and not (isinstance(model, CompoundModel) and model.is_pareto):
            kw["order"] = int(self.method["order"])
        return kw

    def mc_config(self, seed: Optional[int] = None, percentile: Optional[float] = None) -> McConfig:
        m = self.mc
        return McConfig(
            n_paths=int(m.get("paths", 1_000_000)),
            n_reps=int(m.get("reps", 10)),
            seed=int(seed if seed is not None else m.get("seed", 20240601)),
            percentile=float(percentile if percentile is not None else self.query.get("var_at", 0.999)),
            block_size=int(m.get("block_size", 1 << 16)),
        )

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p


def _has_pareto(model) -> bool:
    units = model.units if isinstance(model, Portfolio) else [model]
    return any(u.is_pareto for u in units)


def load_config(path) -> RunConfig:
    """Read and validate a JSON run config."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - {"model", "query", "method", "mc", "fit", "output"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    query = raw.get("query", {}) or {}
    if query:
        kinds = [k for k in query if k in QUERY_KINDS]
        if len(kinds) != 1 or len(query) != 1:
            raise ConfigError(f"query must hold exactly one of {QUERY_KINDS}")
    return RunConfig(
        model=raw.get("model", {}) or {},
        query=query,
        method=raw.get("method", {}) or {},
        mc=raw.get("mc", {}) or {},
        fit=raw.get("fit", {}) or {},
        output=raw.get("output", {}) or {},
        base_dir=path.resolve().parent,
    )


# ---------------------------------------------------------------------------
# model construction


def _body(spec: Optional[dict]):
    if spec is None:
        return None
    kind = spec.get("kind")
    if kind == "uniform":
        return UniformBody(float(spec["lo"]), float(spec["hi"]))
    if kind == "moments":
        return MomentBody(float(spec["m1"]), float(spec["m2"]))
    if kind == "point":
        return PointMassBody(float(spec["at"]))
    raise ConfigError(f"unknown body kind {kind!r}")


def _severity(spec: dict, cfg: RunConfig) -> SplicedSeverity:
    family = spec.get("family")
    x0 = float(spec.get("x0", 0.0))
    alpha, omega = spec.get("alpha"), spec.get("omega", 1.0)
    if alpha == "fit" or omega == "empirical":
        if "data" not in spec:
            raise ConfigError("calibration requested but no 'data' path given")
        losses = _read_losses(cfg.resolve(spec["data"]))
        if omega == "empirical":
            omega = fit_omega(losses, x0)
        if alpha == "fit":
            alpha = fit_alpha(losses, x0)[0]
    if family == "pareto":
        tail_model = ParetoTail(float(alpha), x0)
    elif family == "lognormal":
        tail_model = LognormalTail(float(spec["mu"]), float(spec["sigma"]), x0)
    else:
        raise ConfigError(f"unknown severity family {family!r}")
    return SplicedSeverity(float(omega), x0, _body(spec.get("body")), tail_model)


def _unit(spec: dict, cfg: RunConfig) -> CompoundModel:
    try:
        fr = spec["frequency"]
        freq = Frequency(float(fr["lambda"]), float(fr.get("horizon", 1.0)))
        return CompoundModel(_severity(spec["severity"], cfg), freq)
    except KeyError as exc:
        raise ConfigError(f"missing model field {exc}") from None


def build_model(cfg: RunConfig):
    """The ``CompoundModel`` or ``Portfolio`` described by ``cfg.model``."""
    m = cfg.model
    if "units" in m:
        units = [_unit(u, cfg) for u in m["units"]]
        factor = m.get("factor")
        if factor:
            return Portfolio(units, factor_weights=factor["weights"], factor_scales=factor["scales"])
        return Portfolio(units) if len(units) != 1 else units[0]
    if "severity" in m:
        return _unit(m, cfg)
    raise ConfigError("model needs 'units' or 'severity'/'frequency'")


def _read_losses(path: Path) -> np.ndarray:
    if not path.is_file():
        raise ConfigError(f"loss file not found: {path}")
    losses = read_losses_csv(path)
    if losses.size == 0:
        raise EmptyData(f"no losses in {path}")
    return losses


# ---------------------------------------------------------------------------
# commands (each returns a list of row dicts)


def cmd_fit(cfg: RunConfig, args) -> list:
    """Calibrate alpha and omega from a loss file."""
    f = cfg.fit
    if "data" not in f or "x0" not in f:
        raise ConfigError("'fit' section needs 'data' and 'x0'")
    losses = _read_losses(cfg.resolve(f["data"]))
    x0 = float(f["x0"])
    omega = fit_omega(losses, x0)
    alpha, sd, n = fit_alpha(losses, x0)
    return [{"alpha_hat": alpha, "sigma_alpha": sd, "omega": omega, "n_tail": n}]


def _tail_row(model, s, cfg):
    t0 = time.perf_counter()
    r = tail(model, s, cfg.quadrature_spec(), **cfg.tail_kwargs(model))
    return {
        "s": s,
        "prob": r.prob,
        "abs_err": r.abs_err_estimate,
        "cutoff": r.cutoff_used,
        "n_evaluations": r.n_evaluations,
        "warnings": ";".join(r.warnings),
        "runtime_ms": 1e3 * (time.perf_counter() - t0),
    }


def cmd_tail(cfg: RunConfig, args) -> list:
    if cfg.query_kind != "tail_at":
        raise ConfigError("'tail' needs query.tail_at")
    model = build_model(cfg)
    levels = cfg.query["tail_at"]
    levels = levels if isinstance(levels, list) else [levels]
    return [_tail_row(model, float(s), cfg) for s in levels]


def cmd_sweep(cfg: RunConfig, args) -> list:
    if cfg.query_kind != "sweep":
        raise ConfigError("'sweep' needs query.sweep")
    sw = cfg.query["sweep"]
    grid = np.geomspace(float(sw["lo"]), float(sw["hi"]), int(sw.get("n", 11)))
    model = build_model(cfg)
    return [_tail_row(model, float(s), cfg) for s in grid]


def _var_query(cfg, model, method="quadrature"):
    return VarQuery(
        model,
        float(cfg.query["var_at"]),
        tol_rel=float(cfg.method.get("tol_rel", 1e-6)),
        spec=cfg.quadrature_spec(),
        method=method,
        n_terms=int(cfg.method.get("n_terms", 6)),
    )


def _quadrature_var(cfg, model):
    """VaR plus an interval from propagating the tail error through the local slope."""
    t0 = time.perf_counter()
    res = solve_var(_var_query(cfg, model))
    ms = 1e3 * (time.perf_counter() - t0)
    spec, kw = cfg.quadrature_spec(), cfg.tail_kwargs(model)
    at = tail(model, res.var, spec, **kw)
    h = 1e-3 * res.var
    slope = (tail(model, res.var + h, spec, **kw).prob - tail(model, res.var - h, spec, **kw).prob) / (2 * h)
    p = 1.0 - float(cfg.query["var_at"])
    # residual of the root plus the quadrature error, both mapped to s
    ds = (abs(at.prob - p) + at.abs_err_estimate) / abs(slope) if slope else math.inf
    return res, ms, ds


def _asymptotic_var(cfg, model):
    t0 = time.perf_counter()
    res = solve_var(_var_query(cfg, model, "asymptotic"))
    return res, 1e3 * (time.perf_counter() - t0)


def cmd_var(cfg: RunConfig, args) -> list:
    if cfg.query_kind != "var_at":
        raise ConfigError("'var' needs query.var_at")
    model = build_model(cfg)
    conf = float(cfg.query["var_at"])
    res, ms, ds = _quadrature_var(cfg, model)
    rows = [{"method": "quadrature", "confidence": conf, "var": res.var, "tail_at_var": res.tail_at_var,
             "iterations": res.iterations, "var_err": ds, "runtime_ms": ms}]
    if isinstance(model, CompoundModel) and model.is_pareto:
        ares, ams = _asymptotic_var(cfg, model)
        rows.append({"method": "asymptotic", "confidence": conf, "var": ares.var,
                     "tail_at_var": ares.tail_at_var, "iterations": ares.iterations,
                     "var_err": "", "runtime_ms": ams})
    return rows


def _mc_rows(cfg, model, seed):
    t0 = time.perf_counter()
    est = simulate_quantile(model, cfg.mc_config(seed))
    ms = 1e3 * (time.perf_counter() - t0)
    per = ms / len(est.quantiles)
    rows = [{"method": "mc", "rep": r, "value": q, "ci_lo": "", "ci_hi": "", "runtime_ms": per}
            for r, q in enumerate(est.quantiles)]
    rows.append({"method": "mc_mean", "rep": "", "value": est.quantile_mean, "ci_lo": est.ci95_lo,
                 "ci_hi": est.ci95_hi, "runtime_ms": ms})
    return rows, est


def cmd_mc(cfg: RunConfig, args) -> list:
    model = build_model(cfg)
    rows, est = _mc_rows(cfg, model, args.seed)
    for r in rows:
        r["quantile_sd"] = est.quantile_sd if r["method"] == "mc_mean" else ""
    return rows


def cmd_compare(cfg: RunConfig, args) -> list:
    """Quadrature VaR, series VaR (Pareto only) and every MC replication."""
    if cfg.query_kind != "var_at":
        raise ConfigError("'compare' needs query.var_at")
    model = build_model(cfg)
    res, ms, ds = _quadrature_var(cfg, model)
    rows = [{"method": "quadrature", "rep": "", "value": res.var, "ci_lo": res.var - ds,
             "ci_hi": res.var + ds, "runtime_ms": ms}]
    if isinstance(model, CompoundModel) and model.is_pareto:
        ares, ams = _asymptotic_var(cfg, model)
        rows.append({"method": "asymptotic", "rep": "", "value": ares.var, "ci_lo": "", "ci_hi": "",
                     "runtime_ms": ams})
    mc_rows, _ = _mc_rows(cfg, model, args.seed)
    return rows + mc_rows


COMMANDS = {
    "fit": cmd_fit,
    "tail": cmd_tail,
    "var": cmd_var,
    "mc": cmd_mc,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(rows: list, fmt: str) -> str:
    """RFC-4180 CSV (header from the first row) or a JSON array."""
    if fmt == "json":
        return json.dumps(rows if len(rows) != 1 else rows[0], indent=2) + "\n"
    buf = io.StringIO()
    cols = list(rows[0]) if rows else []
    for r in rows[1:]:
        cols += [k for k in r if k not in cols]
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in cols])
    return buf.getvalue()


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="heavytail", description="Tail probabilities and VaR of compound Poisson losses.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run config")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default: config or json for fit, csv otherwise)")
    p.add_argument("--seed", type=int, help="MC seed (overrides the config)")
    return p


def _diagnostics(exc, command) -> dict:
    d = {"error": type(exc).__name__, "message": str(exc), "command": command}
    if isinstance(exc, NonMonotoneTail):
        d["samples"] = [list(map(float, s)) for s in exc.samples]
    return d


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    out_path = args.out
    try:
        cfg = load_config(args.config)
        out_path = out_path or cfg.output.get("path")
        if out_path and not args.out:
            out_path = str(cfg.resolve(out_path))
        fmt = args.format or cfg.output.get("format") or ("json" if args.command == "fit" else "csv")
        rows = COMMANDS[args.command](cfg, args)
    except NumericalError as exc:
        diag = json.dumps(_diagnostics(exc, args.command), indent=2)
        print(diag, file=sys.stderr)
        if out_path:
            Path(str(out_path) + ".diagnostics.json").write_text(diag + "\n", encoding="utf-8")
        return EXIT_NUMERICAL
    except (DomainError, DataError, ConfigError, OSError, KeyError, TypeError, ValueError) as exc:
        print(f"heavytail {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = render(rows, fmt)
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
