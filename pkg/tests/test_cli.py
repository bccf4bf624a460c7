import csv
import io
import json
import math
import subprocess
import sys

import pytest

from heavytail.cli import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, load_config, build_model, main, render
from heavytail.compound import CompoundModel, Portfolio, tail
from heavytail.mc_oracle import McConfig, simulate_quantile
from heavytail.quadrature import QuadratureSpec
from heavytail.severity import Frequency, ParetoTail, SplicedSeverity, UniformBody
from heavytail.varsolve import VarQuery, solve_var

X0 = 1e5
PARETO_UNIT = {
    "severity": {
        "family": "pareto",
        "alpha": 2.2,
        "x0": X0,
        "omega": 0.35,
        "body": {"kind": "uniform", "lo": 4e4, "hi": X0},
    },
    "frequency": {"lambda": 20, "horizon": 1},
}


def benchmark_model():
    return CompoundModel(SplicedSeverity(0.35, X0, UniformBody(4e4, X0), ParetoTail(2.2, X0)), Frequency(20.0))


@pytest.fixture
def write_config(tmp_path):
    def _write(query=None, model=None, **sections):
        cfg = {"model": model or PARETO_UNIT, **sections}
        if query is not None:
            cfg["query"] = query
        p = tmp_path / "run.json"
        p.write_text(json.dumps(cfg), encoding="utf-8")
        return p

    return _write


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestGolden:
    def test_tail_matches_library(self, capsys, write_config):
        cfg = write_config({"tail_at": [5e6, 2e7]})
        code, out, _ = run(capsys, "tail", "--config", cfg, "--format", "json")
        assert code == EXIT_OK
        rows = json.loads(out)
        for row in rows:
            assert row["prob"] == tail(benchmark_model(), row["s"]).prob

    def test_var_matches_library(self, capsys, write_config):
        cfg = write_config({"var_at": 0.999})
        code, out, _ = run(capsys, "var", "--config", cfg, "--format", "json")
        assert code == EXIT_OK
        quad, asym = json.loads(out)
        assert quad["method"] == "quadrature" and asym["method"] == "asymptotic"
        assert quad["var"] == solve_var(VarQuery(benchmark_model(), 0.999)).var
        assert asym["var"] == solve_var(VarQuery(benchmark_model(), 0.999, method="asymptotic")).var
        assert quad["var_err"] >= 0

    def test_mc_matches_library(self, capsys, write_config):
        cfg = write_config({"var_at": 0.99}, mc={"paths": 20000, "reps": 3, "seed": 11})
        code, out, _ = run(capsys, "mc", "--config", cfg, "--format", "json")
        assert code == EXIT_OK
        rows = json.loads(out)
        est = simulate_quantile(benchmark_model(), McConfig(n_paths=20000, n_reps=3, seed=11, percentile=0.99))
        assert [r["value"] for r in rows if r["method"] == "mc"] == list(est.quantiles)
        mean = rows[-1]
        assert mean["method"] == "mc_mean" and mean["value"] == est.quantile_mean
        assert (mean["ci_lo"], mean["ci_hi"]) == (est.ci95_lo, est.ci95_hi)

    def test_config_options_reach_library(self, capsys, write_config):
        cfg = write_config(
            {"tail_at": 1e7}, method={"rel_tol": 1e-8, "include_poisson_term": False}
        )
        code, out, _ = run(capsys, "tail", "--config", cfg, "--format", "json")
        ref = tail(benchmark_model(), 1e7, QuadratureSpec(rel_tol=1e-8), include_poisson_term=False)
        assert code == EXIT_OK and json.loads(out)["prob"] == ref.prob


class TestCompare:
    def test_columns_and_rows(self, capsys, write_config):
        cfg = write_config({"var_at": 0.99}, mc={"paths": 20000, "reps": 4, "seed": 2})
        code, out, _ = run(capsys, "compare", "--config", cfg)
        assert code == EXIT_OK
        assert out.splitlines()[0] == "method,rep,value,ci_lo,ci_hi,runtime_ms"
        rows = csv_rows(out)
        methods = [r["method"] for r in rows]
        assert methods == ["quadrature", "asymptotic"] + ["mc"] * 4 + ["mc_mean"]
        q = rows[0]
        assert float(q["ci_lo"]) <= float(q["value"]) <= float(q["ci_hi"])

    def test_seed_reproducible(self, capsys, write_config, tmp_path):
        cfg = write_config({"var_at": 0.99}, mc={"paths": 20000, "reps": 3})

        def mc_columns(seed, name):
            out = tmp_path / name
            assert run(capsys, "compare", "--config", cfg, "--seed", seed, "--out", out)[0] == EXIT_OK
            rows = csv_rows(out.read_text(encoding="utf-8"))
            return [(r["rep"], r["value"], r["ci_lo"], r["ci_hi"]) for r in rows if r["method"].startswith("mc")]

        first = mc_columns(42, "a.csv")
        assert mc_columns(42, "b.csv") == first
        assert mc_columns(43, "c.csv") != first

    def test_csv_is_rfc4180(self, capsys, write_config):
        cfg = write_config({"var_at": 0.99}, mc={"paths": 10000, "reps": 2})
        code = main(["compare", "--config", str(cfg)])
        raw = capsys.readouterr().out
        assert code == EXIT_OK and raw.count("\r\n") == len(raw.splitlines())


class TestSweep:
    def test_monotone(self, capsys, write_config):
        cfg = write_config({"sweep": {"lo": 1e7, "hi": 1e8, "n": 6}})
        code, out, _ = run(capsys, "sweep", "--config", cfg)
        assert code == EXIT_OK
        probs = [float(r["prob"]) for r in csv_rows(out)]
        assert len(probs) == 6 and all(b < a for a, b in zip(probs, probs[1:]))


class TestFit:
    def test_toy_file(self, capsys, write_config, tmp_path):
        (tmp_path / "losses.csv").write_text("\n".join([repr(X0 * math.e)] * 4) + "\n")
        cfg = write_config(fit={"data": "losses.csv", "x0": X0})
        code, out, _ = run(capsys, "fit", "--config", cfg)
        assert code == EXIT_OK
        rep = json.loads(out)
        assert rep["alpha_hat"] == pytest.approx(2.0) and rep["sigma_alpha"] == pytest.approx(0.5)
        assert rep["omega"] == 1.0 and rep["n_tail"] == 4

    def test_empty_file(self, capsys, write_config, tmp_path):
        (tmp_path / "losses.csv").write_text("")
        cfg = write_config(fit={"data": "losses.csv", "x0": X0})
        code, _, err = run(capsys, "fit", "--config", cfg)
        assert code == EXIT_INPUT and "EmptyData" in err

    def test_calibrated_severity(self, capsys, write_config, tmp_path):
        (tmp_path / "losses.csv").write_text("5e4\n" + "\n".join([repr(X0 * math.e)] * 4) + "\n")
        unit = json.loads(json.dumps(PARETO_UNIT))
        unit["severity"].update(alpha="fit", omega="empirical", data="losses.csv")
        cfg = write_config({"tail_at": 1e7}, model=unit)
        m = build_model(load_config(cfg))
        assert m.severity.omega == 0.8 and m.severity.tail.alpha == pytest.approx(2.0)


class TestExitCodes:
    def test_missing_config(self, capsys, tmp_path):
        assert run(capsys, "tail", "--config", tmp_path / "nope.json")[0] == EXIT_INPUT

    def test_two_queries(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"model": PARETO_UNIT, "query": {"tail_at": 1e7, "var_at": 0.99}}))
        assert run(capsys, "tail", "--config", p)[0] == EXIT_INPUT

    def test_domain_error(self, capsys, write_config):
        cfg = write_config({"tail_at": 1.5e5})
        code, _, err = run(capsys, "tail", "--config", cfg)
        assert code == EXIT_INPUT and "DomainError" in err

    def test_unknown_family(self, capsys, write_config):
        unit = json.loads(json.dumps(PARETO_UNIT))
        unit["severity"]["family"] = "weibull"
        cfg = write_config({"tail_at": 1e7}, model=unit)
        assert run(capsys, "tail", "--config", cfg)[0] == EXIT_INPUT

    def test_numerical_failure_dumps_diagnostics(self, capsys, write_config, tmp_path):
        # too small a level for the cut integral to decay
        cfg = write_config({"tail_at": 3e5}, method={"cutoff": 1e-3})
        out = tmp_path / "t.csv"
        code, _, err = run(capsys, "tail", "--config", cfg, "--out", out)
        assert code == EXIT_NUMERICAL
        diag = json.loads(err)
        assert diag["error"] == "GrowthDetected" and diag["command"] == "tail"
        assert json.loads((tmp_path / "t.csv.diagnostics.json").read_text()) == diag


def test_portfolio_config(capsys, write_config):
    cfg = write_config({"tail_at": 2e7}, model={"units": [dict(PARETO_UNIT), dict(PARETO_UNIT)]})
    model = build_model(load_config(cfg))
    assert isinstance(model, Portfolio) and len(model.units) == 2
    code, out, _ = run(capsys, "tail", "--config", cfg, "--format", "json")
    assert code == EXIT_OK and json.loads(out)["prob"] == tail(model, 2e7).prob


def test_render_json_single_row():
    assert json.loads(render([{"a": 1.5}], "json")) == {"a": 1.5}


def test_console_entry_point(write_config):
    cfg = write_config({"tail_at": 1e7})
    r = subprocess.run([sys.executable, "-m", "heavytail", "tail", "--config", str(cfg), "--format", "json"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0 and json.loads(r.stdout)["s"] == 1e7
