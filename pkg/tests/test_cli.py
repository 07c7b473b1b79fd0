import json
import subprocess
import sys

import pytest

from robust_consensus.cli import main
from robust_consensus.io import read_csv

CONFIG = """
name = "tiny"
seed = 2
trials = 6
t_max = 200
checkpoints = [10, 50]

[graph]
kind = "ring"
n = 6

[f]
kind = "tanh"
s = 2.0

[noise]
kind = "laplacian"
b = 1.0

[sensing]
theta = 0.5
noise = { kind = "gaussian", sigma = 1.0 }
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(CONFIG)
    return path


def test_graphs_named(capsys):
    assert main(["graphs", "ring", "-n", "8"]) == 0
    out = capsys.readouterr().out
    assert "lambda_2 0.585786437627" in out
    assert "lambda_2 closed form 0.585786437627" in out


def test_graphs_random_and_write(tmp_path, capsys):
    path = tmp_path / "g.txt"
    assert main(["graphs", "erdos_renyi", "-n", "20", "-p", "0.3", "--seed", "1",
                 "--write", str(path)]) == 0
    assert "edges    54" in capsys.readouterr().out
    assert main(["graphs", "--edge-list", str(path)]) == 0
    assert "lambda_2 0.7076" in capsys.readouterr().out


def test_graphs_from_preset(capsys):
    assert main(["graphs", "--preset", "fig2"]) == 0
    assert "N        10" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["graphs"],
    ["graphs", "ring"],
    ["graphs", "ring", "-n", "2"],
    ["graphs", "--edge-list", "/nonexistent/edges.txt"],
    ["simulate", "--frobnicate"],
    ["teleport"],
    [],
    ["analyze"],
    ["analyze", "--preset", "covariance", "--set", "colour=red"],
    ["analyze", "--preset", "nonexistent"],
    ["figdata", "fig9"],
])
def test_usage_and_config_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err


def test_unstable_gain_exits_2(capsys):
    assert main(["analyze", "--preset", "fig4", "--set", "schedule.a=0.01"]) == 2
    assert "margin" in capsys.readouterr().err


def test_impossible_graph_exits_2(capsys):
    assert main(["graphs", "erdos_renyi", "-n", "60", "-p", "0.001"]) == 2


def test_version(capsys):
    assert main(["--version"]) == 0
    assert "robust-consensus" in capsys.readouterr().out


def test_analyze_json(capsys):
    assert main(["analyze", "--preset", "covariance"]) == 0
    payload = json.loads(capsys.readouterr().out)
    rep = payload["report"]
    for key in ("sigma_n_sq", "s_diag", "c_rc", "c_rc_norm", "a_star", "c_star_norm",
                "mse_bound", "varrho", "fisher_ratio", "stability_margin"):
        assert key in rep
    assert rep["stability_margin"] > 0
    prov = payload["provenance"]
    assert prov["seed"] == 0 and "erdos_renyi" in prov["graph"]
    assert prov["theta0_source"] == "mean measurement"


def test_analyze_to_file(tmp_path, config_file, capsys):
    assert main(["analyze", "--config", str(config_file), "--theta0", "0.5",
                 "--convention", "paper", "--out", str(tmp_path)]) == 0
    path = tmp_path / "tiny_analysis.json"
    assert capsys.readouterr().out.strip() == str(path)
    payload = json.loads(path.read_text())
    assert payload["report"]["convention"] == "paper"
    assert payload["report"]["theta0"] == 0.5


def test_simulate(tmp_path, config_file, capsys):
    assert main(["simulate", "--config", str(config_file), "--out", str(tmp_path),
                 "--trial", "2"]) == 0
    out = capsys.readouterr()
    assert "tiny_trajectory.csv" in out.out and "config" in out.err
    meta, rows = read_csv(tmp_path / "tiny_trajectory.csv")
    assert meta["seed"] == "2" and len(meta["config_hash"]) == 16
    assert list(rows[0]) == ["trial", "t", "node", "value"]
    assert {r["trial"] for r in rows} == {"2"}
    assert len(rows) == 6 * len({r["t"] for r in rows})
    _, summary = read_csv(tmp_path / "tiny_summary.csv")
    assert list(summary[0]) == ["trial", "theta_hat", "dispersion_final", "seed"]


def test_ensemble(tmp_path, config_file, capsys):
    assert main(["ensemble", "--config", str(config_file), "--out", str(tmp_path),
                 "--trials", "12", "--seed", "5"]) == 0
    meta, rows = read_csv(tmp_path / "tiny_ensemble.csv")
    assert meta["seed"] == "5" and meta["trials"] == "12"
    assert [r["t"] for r in rows] == ["10", "50"]
    assert list(rows[0]) == ["t", "cov_norm", "mean_dispersion", "analytic_norm", "rel_err"]
    payload = json.loads((tmp_path / "tiny_ensemble.json").read_text())
    assert payload["summary"]["trials"] == 12
    assert "non_increasing" in payload


def test_ensemble_horizon_rule_exits_1(config_file):
    assert main(["ensemble", "--config", str(config_file), "--set", "checkpoints=[100]"]) == 1


def test_figdata_fig1(tmp_path, capsys):
    assert main(["figdata", "fig1", "--out", str(tmp_path)]) == 0
    meta, rows = read_csv(tmp_path / "fig1_trajectories.csv")
    assert meta["preset"] == "fig1"
    assert {r["node"] for r in rows} == {str(i) for i in range(75)}
    assert max(int(r["t"]) for r in rows) == 500
    assert "cauchy" in capsys.readouterr().err


def test_figdata_fig7_writes_limits(tmp_path):
    assert main(["figdata", "fig7", "--out", str(tmp_path), "--trials", "4",
                 "--set", "t_max=60"]) == 0
    _, rows = read_csv(tmp_path / "fig7_trajectories.csv")
    assert {r["node"] for r in rows} == {"0"}
    limits = json.loads((tmp_path / "fig7_limits.json").read_text())
    assert limits["trials"] == 4
    assert "asymptotic_variance_node0" in limits


def test_figdata_is_byte_identical(tmp_path):
    args = ["figdata", "fig5", "--trials", "6", "--set", "t_max=120",
            "--set", "checkpoints=[10,30]"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    for name in ("fig5_series.csv", "fig5_analytic.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    _, rows = read_csv(tmp_path / "a" / "fig5_series.csv")
    assert {r["variant"] for r in rows} == {"kappa=0.5", "kappa=1", "kappa=2"}


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "robust_consensus", "graphs", "star", "-n", "5"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert "lambda_2 1" in res.stdout
