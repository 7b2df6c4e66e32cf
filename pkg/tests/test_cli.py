import json
import math

import numpy as np
import pandas as pd
import pytest

from twint.commands.dist import parse_matrix, parse_vector
from twint.commands.simulate import parse_df
from twint.core.config import settings
from twint.core.exceptions import UsageError
from twint.main import main
from twint.models.extended import GeneralizedTwinT
from twint.models.twin_t import TwinT
from twint.schemas.simulation import ScenarioResult
from twint.services.simulation_service import SimulationHarness


def _lines(capsys):
    return capsys.readouterr().out.splitlines()


def _regression_csv(tmp_path, n=120):
    x = 0.1 + 9.9 * np.arange(n) / (n - 1)
    y = -0.5 + 2.0 * x + 0.5 * TwinT(nu=4.0).sample(n, seed=77)
    path = tmp_path / "line.csv"
    pd.DataFrame({"y": y, "x": x}).to_csv(path, index=False)
    return path


# --- argument helpers ---

def test_parse_vector_and_matrix():
    assert parse_vector("1,-2.5,3e1") == [1.0, -2.5, 30.0]
    assert parse_matrix("1,0.5;0.5,2") == [[1.0, 0.5], [0.5, 2.0]]
    with pytest.raises(UsageError):
        parse_vector("1,x")


def test_parse_df():
    assert parse_df("inf") == math.inf
    assert parse_df("normal") == math.inf
    assert parse_df("3") == 3.0


# --- dist ---

def test_dist_pdf(capsys):
    assert main(["dist", "--family", "twin-t", "--action", "pdf", "--nu", "4", "--x", "0", "1.5"]) == 0
    lines = _lines(capsys)
    d = TwinT(nu=4.0)
    assert [float(v) for v in lines] == pytest.approx([d.pdf(0.0), d.pdf(1.5)], rel=1e-14)


def test_dist_location_scale_cdf_and_quantile(capsys):
    assert main(["dist", "--family", "twin-t", "--action", "cdf", "--nu", "2", "--loc", "1", "--scale", "2",
                 "--x", "1"]) == 0
    assert _lines(capsys) == ["0.5"]
    assert main(["dist", "--family", "twin-t", "--action", "quantile", "--nu", "3", "--x", "0.5"]) == 0
    assert _lines(capsys) == ["0"]


def test_dist_generalized_quantile(capsys):
    assert main(["dist", "--family", "generalized", "--action", "quantile", "--beta", "1.5",
                 "--gamma-param", "2.5", "--x", "0.9"]) == 0
    (line,) = _lines(capsys)
    assert GeneralizedTwinT(beta=1.5, gam=2.5).cdf(float(line)) == pytest.approx(0.9, abs=1e-9)


def test_dist_sample_is_seeded(capsys):
    argv = ["dist", "--family", "two-piece", "--action", "sample", "--nu", "5", "--gamma", "1.5",
            "--n", "4", "--seed", "12"]
    assert main(argv) == 0
    first = _lines(capsys)
    assert main(argv) == 0
    assert _lines(capsys) == first
    assert len(first) == 4


def test_dist_multivariate_logpdf(capsys):
    assert main(["dist", "--family", "multivariate", "--action", "logpdf", "--nu", "3",
                 "--mu", "0,0", "--scale-matrix", "1,0.5;0.5,2", "--x", "0,0", "1,-1"]) == 0
    values = [float(v) for v in _lines(capsys)]
    assert len(values) == 2 and values[0] > values[1]


def test_dist_writes_output_file(tmp_path, capsys):
    out = tmp_path / "draws.txt"
    assert main(["dist", "--family", "generalized", "--action", "sample", "--beta", "1.5",
                 "--gamma-param", "2", "--n", "3", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert len(out.read_text().splitlines()) == 3


def test_dist_rejects_bad_nu(capsys):
    assert main(["dist", "--family", "twin-t", "--action", "pdf", "--nu", "0", "--x", "1"]) == 2
    assert "error[E_DOMAIN]: nu must be > 0" in capsys.readouterr().err


@pytest.mark.parametrize("argv,code", [
    (["dist", "--family", "twin-t", "--action", "pdf", "--x", "1"], "E_DOMAIN"),
    (["dist", "--family", "multivariate", "--action", "cdf", "--nu", "3", "--scale-matrix", "1", "--x", "0"],
     "E_DOMAIN"),
    (["dist", "--family", "twin-t", "--action", "quantile", "--nu", "3", "--x", "1.5"], "E_DOMAIN"),
    (["dist", "--family", "cauchy", "--action", "pdf"], "E_USAGE"),
    (["bogus"], "E_USAGE"),
])
def test_dist_usage_and_domain_errors(capsys, argv, code):
    assert main(argv) == 2
    err = capsys.readouterr().err
    assert f"error[{code}]" in err
    assert len([line for line in err.splitlines() if line.startswith("error[")]) == 1


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0
    assert "dist" in capsys.readouterr().out


# --- fit ---

def test_fit_regress_report(tmp_path, capsys):
    path = _regression_csv(tmp_path)
    assert main(["fit", "regress", "--data", str(path), "--response", "y", "--covariates", "x"]) == 0
    lines = _lines(capsys)
    assert lines[0] == "family=twin_t"
    assert "converged=true" in lines
    fields = dict(line.split("=", 1) for line in lines if not line.startswith("note="))
    assert abs(float(fields["estimate.b1"]) - 2.0) < 4.0 * float(fields["std_error.b1"])


def test_fit_regress_json_to_file(tmp_path, capsys):
    path = _regression_csv(tmp_path)
    out = tmp_path / "report.json"
    assert main(["fit", "regress", "--data", str(path), "--response", "y", "--covariates", "x",
                 "--family", "normal", "--json", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["family"] == "normal"
    assert set(report["estimates"]) == {"b0", "b1", "sigma"}
    assert report["iterations"] == 0


def test_fit_curve(tmp_path, capsys):
    path = tmp_path / "v.csv"
    pd.DataFrame({"v": 2.0 + TwinT(nu=6.0).sample(300, seed=4)}).to_csv(path, index=False)
    assert main(["fit", "curve", "--data", str(path), "--column", "v", "--skew", "two-piece"]) == 0
    lines = _lines(capsys)
    assert "skew=two_piece" in lines
    assert any(line.startswith("estimate.gamma=") for line in lines)
    assert any(line.startswith("note=two-piece") for line in lines)


def test_fit_data_errors(tmp_path, capsys):
    assert main(["fit", "regress", "--data", str(tmp_path / "missing.csv"), "--response", "y",
                 "--covariates", "x"]) == 3
    assert "error[E_DATA]" in capsys.readouterr().err
    path = _regression_csv(tmp_path)
    assert main(["fit", "regress", "--data", str(path), "--response", "y", "--covariates", "w"]) == 3
    assert "column 'w' not found" in capsys.readouterr().err


def test_fit_exits_4_when_not_converged(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(settings, "OPT_MAX_SIMPLEX_ITER", 2)
    monkeypatch.setattr(settings, "OPT_MAX_QUASI_NEWTON_ITER", 0)
    path = _regression_csv(tmp_path)
    assert main(["fit", "regress", "--data", str(path), "--response", "y", "--covariates", "x"]) == 4
    captured = capsys.readouterr()
    assert "converged=false" in captured.out.splitlines()
    assert "error[E_CONVERGENCE]: twin_t fit did not converge" in captured.err


def test_fit_requires_data_flag(capsys):
    assert main(["fit", "curve", "--column", "v"]) == 2
    assert "error[E_USAGE]" in capsys.readouterr().err


def test_fit_curve_rejects_skewed_student_t(tmp_path, capsys):
    path = tmp_path / "v.csv"
    pd.DataFrame({"v": np.arange(20.0)}).to_csv(path, index=False)
    assert main(["fit", "curve", "--data", str(path), "--column", "v", "--family", "student-t",
                 "--skew", "jones"]) == 2
    assert "only defined for the twin_t family" in capsys.readouterr().err


# --- simulate ---

def test_simulate_writes_tables(tmp_path, capsys):
    out = tmp_path / "sim"
    assert main(["simulate", "--out", str(out), "--n", "15", "--df-true", "3", "--replicates", "3",
                 "--seed", "8"]) == 0
    assert _lines(capsys) == ["scenarios=1", f"output={out}"]
    estimates = pd.read_csv(out / "estimates_n15_df3.csv")
    assert len(estimates) == 3
    assert list(estimates.columns[:4]) == ["replicate", "ols_b0", "ols_b1", "ols_converged"]
    ecdf = pd.read_csv(out / "ecdf_n15_df3_twin_t_vs_ols.csv")
    assert list(ecdf.columns) == ["abs_diff", "prob"]
    assert ecdf["prob"].iloc[-1] == 1.0
    summary = pd.read_csv(out / "summary.csv")
    assert set(summary["threshold"]) == {1e-3, 1e-4, 1e-2}


def test_simulate_grid_rejects_duplicates(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path), "--grid", "--sizes", "10", "10", "--dfs", "3",
                 "--replicates", "1"]) == 2
    assert "duplicate scenarios" in capsys.readouterr().err


def test_simulate_skips_pairs_without_converged_fits(tmp_path, capsys, monkeypatch):
    def run_scenario(self, cfg):
        result = original(self, cfg)
        table = result.table.assign(student_t_converged=False)
        return ScenarioResult(config=cfg, table=table)

    original = SimulationHarness.run_scenario
    monkeypatch.setattr(SimulationHarness, "run_scenario", run_scenario)
    out = tmp_path / "sim"
    assert main(["simulate", "--out", str(out), "--n", "12", "--df-true", "5", "--replicates", "2",
                 "--seed", "3"]) == 0
    assert (out / "ecdf_n12_df5_twin_t_vs_ols.csv").exists()
    assert not (out / "ecdf_n12_df5_twin_t_vs_student_t.csv").exists()
    summary = pd.read_csv(out / "summary.csv")
    student = summary[summary["model_a"] == "student_t"]
    assert student["rate"].isna().all()
    assert (student["replicates_excluded"] == 2).all()


def test_simulate_output_is_reproducible(tmp_path, capsys):
    argv = ["simulate", "--n", "10", "--df-true", "3", "--replicates", "3", "--seed", "21"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    assert main(argv + ["--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
