import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robust_consensus.analysis import asymptotic_covariance
from robust_consensus.ensemble import (
    EnsembleStats,
    ExperimentConfig,
    compare_empirical_analytic,
    ensemble_stats,
    load_config,
    parse_override,
    run_batch,
    run_ensemble,
)
from robust_consensus.exceptions import ConfigError, ParameterError, StabilityError
from robust_consensus.presets import PRESETS, preset_config
from oracles import linear_lyapunov_covariance

SMALL = {
    "name": "small",
    "graph": {"kind": "ring", "n": 6},
    "h": {"kind": "identity"},
    "f": {"kind": "tanh", "s": 2.0},
    "noise": {"kind": "gaussian", "sigma": 1.0},
    "sensing": {"theta": 1.0, "noise": {"kind": "gaussian", "sigma": 1.0}},
    "schedule": {"a": 1.0},
    "trials": 8,
    "t_max": 200,
    "checkpoints": [10, 50],
    "seed": 3,
}

TOML = """
name = "demo"
seed = 7
trials = 4
t_max = 400
checkpoints = [20, 100]

[graph]
kind = "erdos_renyi"
n = 12
p = 0.4
seed = 2

[h]
kind = "scaled_atan"
rho_db = 5
s = 0.01

[f]
kind = "tanh_scaled"
s = 5

[noise]
kind = "cauchy"
gamma = 0.1

[sensing]
theta = 0.0
noise = { kind = "gaussian", sigma = 10.0 }

[schedule]
a = 1.0
"""


def small(**kw):
    return ExperimentConfig.from_mapping({**SMALL, **kw})


# configuration ------------------------------------------------------------------


def test_toml_round_trip(tmp_path):
    path = tmp_path / "demo.toml"
    path.write_text(TOML)
    cfg = ExperimentConfig.from_file(path)
    assert cfg.name == "demo" and cfg.trials == 4 and cfg.checkpoints == (20, 100)
    assert cfg.graph_obj.n == 12
    assert cfg.h_obj.power == pytest.approx(10 ** 0.5)
    assert ExperimentConfig.from_mapping(cfg.to_mapping()) == cfg


@pytest.mark.parametrize("bad", [
    {"trials": 0},
    {"t_max": 0},
    {"checkpoints": [0, 10]},
    {"checkpoints": [10, 500]},
    {"schedule": {"a": -1.0}},
    {"schedule": {"a": "fast"}},
    {"colour": "red"},
    {"noise": {"kind": "cauchy", "gamma": -1.0}},
    {"sensing": {"theta": 0.0, "spread": 2}},
    {"checkpoints": "sometimes"},
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        small(**bad)


def test_missing_graph_and_file():
    data = dict(SMALL)
    data.pop("graph")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping(data)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file("/nonexistent/config.toml")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_toml("trials = [")
    with pytest.raises(ConfigError):
        load_config()


@pytest.mark.parametrize("text, key, value", [
    ("noise.gamma=0.5", "noise.gamma", 0.5),
    ("trials = 12", "trials", 12),
    ("f.kind=tanh", "f.kind", "tanh"),
    ('f.kind="rational"', "f.kind", "rational"),
    ("checkpoints=[1,2]", "checkpoints", [1, 2]),
    ("sensing.shared=false", "sensing.shared", False),
])
def test_parse_override(text, key, value):
    assert parse_override(text) == (key, value)


def test_bad_overrides():
    with pytest.raises(ConfigError):
        parse_override("trials")
    with pytest.raises(ConfigError):
        parse_override("=3")


def test_overrides_apply():
    cfg = small().with_overrides(["noise.sigma=2", "trials=3", "schedule.a=optimal"])
    assert cfg.noise_obj.scale == 2.0 and cfg.trials == 3
    assert cfg.gain == pytest.approx(
        1 / (cfg.functionals.e_f_prime * 4 * math.sin(math.pi / 6) ** 2), rel=1e-5)
    assert small().with_overrides({"seed": 9}).seed == 9


def test_config_hash():
    a, b = small(), small()
    assert a.config_hash == b.config_hash and len(a.config_hash) == 16
    assert small(seed=4).config_hash != a.config_hash
    assert small(workers=3).config_hash == a.config_hash


def test_theta0_guess_is_mean_measurement():
    cfg = small()
    batch = run_batch(cfg)
    assert cfg.theta0_guess == pytest.approx(batch.xbar[0], rel=1e-15)
    own = small(sensing={**SMALL["sensing"], "shared": False})
    assert own.theta0_guess == 1.0


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_are_valid(name):
    for label, cfg in PRESETS[name].variants:
        assert cfg.name == name
        assert cfg.graph_obj.n in (10, 20, 75)
        desc = cfg.describe()
        assert desc["config_hash"] == cfg.config_hash
        if PRESETS[name].kind == "ensemble":
            assert cfg.t_max >= 4 * max(cfg.checkpoints)
            assert cfg.analytic_report(strict=True).stable


def test_preset_lookup():
    assert preset_config("fig4:dense").graph["p"] == 0.3
    assert preset_config("fig4").graph["p"] == 0.1
    with pytest.raises(ConfigError):
        preset_config("fig4:medium")
    with pytest.raises(ConfigError):
        preset_config("fig9")


def test_figure_captions():
    fig3 = preset_config("fig3")
    assert fig3.graph_obj.n == 75
    assert fig3.noise_obj.kind == "cauchy" and fig3.noise_obj.scale == 0.1
    assert fig3.h_obj.power == pytest.approx(10 ** 0.5)
    assert fig3.f_obj.slope == 5.0
    fig1 = preset_config("fig1")
    assert fig1.f_obj.kind == fig1.h_obj.kind == "identity"
    assert fig1.noise_obj.scale == 1.0


# ensembles ---------------------------------------------------------------------


def test_single_trial_has_zero_covariance():
    stats = run_ensemble(small(trials=1))
    assert stats.trials == 1
    assert not stats.cov.any() and not stats.cov_norm.any()


def test_noise_free_limits_are_identical():
    cfg = small(trials=10, noise={"kind": "none"})
    stats = run_ensemble(cfg)
    assert np.all(stats.theta_hat == stats.theta_hat[0])
    assert stats.mse == pytest.approx(0.0, abs=1e-24)
    own = run_ensemble(small(trials=10, noise={"kind": "none"},
                             sensing={**SMALL["sensing"], "shared": False}))
    assert own.mse == pytest.approx(0.0, abs=1e-24)
    assert own.theta_var > 0


def test_horizon_rule():
    with pytest.raises(ConfigError):
        run_ensemble(small(checkpoints=[10, 60]))
    with pytest.raises(ConfigError):
        run_ensemble(small(checkpoints=None))


def test_workers_do_not_change_results():
    cfg = small(trials=7)
    one = run_batch(cfg, 1)
    two = run_batch(cfg, 2)
    assert np.array_equal(one.states, two.states)
    assert np.array_equal(one.trials, two.trials)


@settings(max_examples=10)
@given(st.integers(2, 30), st.integers(0, 10 ** 6))
def test_ensemble_covariances_are_psd(m, seed):
    stats = run_ensemble(small(trials=m, seed=seed))
    for c, norm in zip(stats.cov, stats.cov_norm):
        assert np.array_equal(c, c.T)
        ev = np.linalg.eigvalsh(c)
        assert ev[0] >= -1e-9 * max(norm, 1e-300)
        assert norm == pytest.approx(ev[-1])


def test_stats_against_direct_formula():
    cfg = small(trials=25)
    batch = run_batch(cfg)
    stats = ensemble_stats(batch, cfg.checkpoints)
    j = list(batch.times).index(50)
    e = math.sqrt(50) * (batch.states[:, j] - batch.theta_hat[:, None])
    e = e - e.mean(axis=0)
    np.testing.assert_allclose(stats.cov[1], e.T @ e / 24, rtol=1e-12, atol=1e-14)
    assert stats.bias == pytest.approx(np.mean(batch.theta_hat - batch.xbar))
    assert set(stats.summary()) >= {"theta_mean", "theta_var", "bias", "bias_se", "mse"}


def test_missing_checkpoint_is_an_error():
    batch = run_batch(small())
    with pytest.raises(ParameterError):
        ensemble_stats(batch, [11])


# comparison --------------------------------------------------------------------


def _stats_with_norms(norms, times=(10, 20, 40)):
    n = len(norms)
    return EnsembleStats(np.array(times[:n]), np.zeros((n, 2, 2)), np.array(norms),
                         np.zeros(n), np.zeros(3), np.zeros(3), 3, 0)


def test_identical_inputs_give_zero_error():
    cfg = small()
    report = cfg.analytic_report()
    cmp = compare_empirical_analytic(_stats_with_norms([report.c_rc_norm] * 3), report)
    assert all(r.rel_err == 0.0 for r in cmp.rows)
    assert cmp.non_increasing and cmp.final_rel_err == 0.0
    assert "rel_err" in cmp.as_table()


def test_trend_flag():
    report = small().analytic_report()
    ref = report.c_rc_norm
    assert compare_empirical_analytic(_stats_with_norms([ref * 1.5, ref * 1.2, ref]),
                                      report).non_increasing
    assert not compare_empirical_analytic(_stats_with_norms([ref, ref * 1.2, ref]),
                                          report).non_increasing


def test_unstable_gain_is_refused():
    cfg = small(schedule={"a": 0.05})
    report = cfg.analytic_report(strict=False)
    with pytest.raises(StabilityError) as err:
        compare_empirical_analytic(_stats_with_norms([1.0]), report)
    assert err.value.margin == pytest.approx(report.stability_margin)


@pytest.mark.slow
def test_linear_case_matches_lyapunov_asymptotics():
    cfg = ExperimentConfig.from_mapping({
        "name": "linear", "graph": {"kind": "ring", "n": 6},
        "h": {"kind": "identity"}, "f": {"kind": "identity"},
        "noise": {"kind": "gaussian", "sigma": 1.0},
        "sensing": {"theta": 0.0, "noise": {"kind": "gaussian", "sigma": 1.0}},
        "schedule": {"a": "optimal"}, "trials": 2000, "t_max": 3200,
        "checkpoints": [200, 400, 800], "seed": 0,
    })
    g = cfg.graph_obj
    # identity map: g'(0) = 1 and E[f^2] = sigma^2, so the general form reduces
    # to the linear-consensus Lyapunov covariance
    ref = linear_lyapunov_covariance(g.laplacian(), g.degrees, 1.0, 1.0, cfg.gain)
    cov = asymptotic_covariance(g, cfg.functionals, cfg.h_obj, 0.0, cfg.gain)
    np.testing.assert_allclose(cov.c_rc, ref, atol=1e-9)
    stats = run_ensemble(cfg)
    cmp = compare_empirical_analytic(stats, cfg.analytic_report(stats.theta_mean))
    assert cmp.final_rel_err <= 0.15
