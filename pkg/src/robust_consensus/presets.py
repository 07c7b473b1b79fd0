"""Bundled experiment presets for the figure data sets and the validation runs.

Trajectory presets (``fig1``, ``fig2``, ``fig3``, ``fig7``) record node states
over time. Ensemble presets (``fig4``, ``fig5``, ``fig6``) compare several
variants through the norm of the covariance of ``sqrt(t) (X(t) - theta0 1)``.
``unbiasedness`` and ``covariance`` are the N=20 validation setups.

Graph topologies and seeds are not given with the original figures.  Every
preset therefore pins a seeded random graph, recorded in its configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .analysis import asymptotic_covariance, mse_bound
from .ensemble import ExperimentConfig, ensemble_stats, run_batch
from .exceptions import ConfigError, ConsensusError, StabilityError
from .io import (ENSEMBLE_COLUMNS, SUMMARY_COLUMNS, TRAJECTORY_COLUMNS, summary_rows,
                 trajectory_rows, write_csv, write_json)

__all__ = ["Preset", "PRESETS", "preset", "preset_config", "figdata"]

_ER75 = {"kind": "erdos_renyi", "n": 75, "p": 0.3, "seed": 0}
_ER75_SPARSE = {"kind": "erdos_renyi", "n": 75, "p": 0.1, "seed": 0}
_ER10 = {"kind": "erdos_renyi", "n": 10, "p": 0.8, "seed": 0}
_ER20 = {"kind": "erdos_renyi", "n": 20, "p": 0.3, "seed": 1}
_ID = {"kind": "identity"}
_WIDE = {"theta": 0.0, "noise": {"kind": "gaussian", "sigma": 10.0}}
_NARROW = {"theta": 0.0, "noise": {"kind": "gaussian", "sigma": 1.0}}
_COV_CHECKPOINTS = list(range(10, 301, 10))


def _atan_h(rho_db):
    return {"kind": "atan", "rho_db": rho_db, "s": 0.01}


@dataclass(frozen=True)
class Preset:
    name: str
    kind: str  # "trajectory" or "ensemble"
    description: str
    variants: tuple  # of (label, ExperimentConfig)
    nodes: tuple | None = None  # nodes written by trajectory presets (None = all)

    def config(self, variant: str | None = None) -> ExperimentConfig:
        if variant is None:
            return self.variants[0][1]
        for label, cfg in self.variants:
            if label == variant:
                return cfg
        raise ConfigError(f"{self.name} has no variant {variant!r}; "
                          f"choose from {[v for v, _ in self.variants]}")


def _cfg(name, **kw) -> ExperimentConfig:
    return ExperimentConfig.from_mapping({"name": name, "output": f"out/{name}", **kw})


def _build() -> dict:
    p = {}
    p["fig1"] = Preset("fig1", "trajectory",
                       "linear consensus under Cauchy noise (gamma=1), N=75: no consensus",
                       (("linear", _cfg("fig1", graph=_ER75, h=_ID, f=_ID,
                                        noise={"kind": "cauchy", "gamma": 1.0},
                                        sensing=_WIDE, schedule={"a": 1.0},
                                        trials=1, t_max=500)),))
    p["fig2"] = Preset("fig2", "trajectory",
                       "robust consensus, small network N=10, rho=15 dB, Cauchy gamma=0.1",
                       (("rc", _cfg("fig2", graph=_ER10, h=_atan_h(15.0),
                                    f={"kind": "tanh", "s": 5.0},
                                    noise={"kind": "cauchy", "gamma": 0.1},
                                    sensing=_WIDE, schedule={"a": 1.0},
                                    trials=1, t_max=200)),))
    p["fig3"] = Preset("fig3", "trajectory",
                       "robust consensus, large network N=75, rho=5 dB, Cauchy gamma=0.1",
                       (("rc", _cfg("fig3", graph=_ER75, h=_atan_h(5.0),
                                    f={"kind": "tanh", "s": 5.0},
                                    noise={"kind": "cauchy", "gamma": 0.1},
                                    sensing=_WIDE, schedule={"a": 1.0},
                                    trials=1, t_max=200)),))
    common4 = dict(h=_ID, f={"kind": "rational", "s": 1.5},
                   noise={"kind": "cauchy", "gamma": 0.413}, sensing=_NARROW,
                   schedule={"a": 1.0}, trials=2000, t_max=1200,
                   checkpoints=_COV_CHECKPOINTS)
    p["fig4"] = Preset("fig4", "ensemble",
                       "sparse versus dense N=75 graphs, covariance norm against t",
                       (("sparse", _cfg("fig4", graph=_ER75_SPARSE, **common4)),
                        ("dense", _cfg("fig4", graph=_ER75, **common4))))
    p["fig5"] = Preset("fig5", "ensemble",
                       "receive map scaled by 0.5, 1 and 2 with the matching optimal gain",
                       tuple((f"kappa={kappa:g}",
                              _cfg("fig5", graph=_ER10, h=_ID,
                                   f={"kind": "rational", "s": 2.0, "A": kappa},
                                   noise={"kind": "cauchy", "gamma": 0.413},
                                   sensing=_NARROW, schedule={"a": "optimal"},
                                   trials=2000, t_max=1200, checkpoints=_COV_CHECKPOINTS))
                             for kappa in (0.5, 1.0, 2.0)))
    noises = (("gaussian", {"kind": "gaussian", "sigma": 1.0}),
              ("laplacian", {"kind": "laplacian", "b": 1.0 / math.sqrt(2.0)}),
              ("cauchy", {"kind": "cauchy", "gamma": 0.413}),
              ("alpha_stable", {"kind": "alpha_stable", "alpha": 1.5, "c": 0.5}))
    p["fig6"] = Preset("fig6", "ensemble",
                       "one receive map under four channel-noise laws, N=75",
                       tuple((label, _cfg("fig6", graph=_ER75, h=_ID,
                                          f={"kind": "tanh", "s": 2.0}, noise=nz,
                                          sensing=_NARROW, schedule={"a": 1.0},
                                          trials=2000, t_max=1200,
                                          checkpoints=_COV_CHECKPOINTS))
                             for label, nz in noises))
    p["fig7"] = Preset("fig7", "trajectory",
                       "node 0 over repeated runs from one initial state: spread of the "
                       "limit versus speed of convergence",
                       (("rc", _cfg("fig7", graph=_ER75, h=_ID,
                                    f={"kind": "atan", "A": 3.0, "s": 0.05},
                                    noise={"kind": "cauchy", "gamma": 0.413},
                                    sensing=_WIDE, schedule={"a": 1.0},
                                    trials=50, t_max=1000)),),
                       nodes=(0,))
    n20 = dict(graph=_ER20, h=_ID, f={"kind": "tanh", "s": 2.0},
               noise={"kind": "gaussian", "sigma": 1.0}, sensing=_NARROW, trials=2000)
    p["unbiasedness"] = Preset("unbiasedness", "ensemble",
                               "N=20, a=1: mean and MSE of the limit estimate",
                               (("a=1", _cfg("unbiasedness", schedule={"a": 1.0}, t_max=2000,
                                             checkpoints=[100, 200, 500], **n20)),))
    p["covariance"] = Preset("covariance", "ensemble",
                             "N=20 at the optimal gain: empirical versus closed-form covariance",
                             (("a=optimal", _cfg("covariance", schedule={"a": "optimal"},
                                                 t_max=3200, checkpoints=[200, 400, 800],
                                                 **n20)),))
    return p


PRESETS = _build()


def preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def preset_config(name: str) -> ExperimentConfig:
    """``"fig4"`` gives the first variant, ``"fig4:dense"`` a named one."""
    base, _, variant = name.partition(":")
    return preset(base).config(variant or None)


# ----------------------------------------------------------------------------
# figure data


def _analytic_norm(cfg: ExperimentConfig, theta0: float) -> float:
    try:
        return asymptotic_covariance(cfg.graph_obj, cfg.functionals, cfg.h_obj, theta0,
                                     cfg.gain).c_rc_norm
    except StabilityError:
        return math.nan


def figdata(name: str, out_dir, *, overrides=(), workers: int | None = None) -> list[Path]:
    """Write the data behind a preset into ``out_dir``; returns the written paths."""
    pre = preset(name)
    out_dir = Path(out_dir)
    written = []
    if pre.kind == "trajectory":
        (_, cfg), = pre.variants
        cfg = cfg.with_overrides(list(overrides)) if overrides else cfg
        batch = run_batch(cfg, workers)
        meta = {"preset": name, **cfg.describe()}
        written.append(write_csv(out_dir / f"{name}_trajectories.csv", TRAJECTORY_COLUMNS,
                                 trajectory_rows(batch, pre.nodes), meta))
        written.append(write_csv(out_dir / f"{name}_summary.csv", SUMMARY_COLUMNS,
                                 summary_rows(batch), meta))
        if cfg.trials > 1:
            written.append(write_json(out_dir / f"{name}_limits.json",
                                      _limit_report(cfg, batch, meta)))
        return written

    rows, analytic = [], {}
    for label, cfg in pre.variants:
        cfg = cfg.with_overrides(list(overrides)) if overrides else cfg
        stats = ensemble_stats(run_batch(cfg, workers), cfg.checkpoints, cfg.config_hash)
        ref = _analytic_norm(cfg, stats.theta_mean)
        analytic[label] = {"analytic_norm": ref, "a": cfg.gain, **stats.summary(),
                           "config_hash": cfg.config_hash}
        for t, c, d in zip(stats.times, stats.cov_norm, stats.mean_dispersion):
            rows.append((label, int(t), c, d, ref, abs(c - ref) / ref if ref > 0 else math.nan))
    meta = {"preset": name, "seed": pre.variants[0][1].seed,
            "variants": [label for label, _ in pre.variants],
            "config_hash": ",".join(v["config_hash"] for v in analytic.values())}
    written.append(write_csv(out_dir / f"{name}_series.csv", ("variant",) + ENSEMBLE_COLUMNS,
                             rows, meta))
    written.append(write_json(out_dir / f"{name}_analytic.json",
                              {"preset": name, "variants": analytic}))
    return written


def _limit_report(cfg: ExperimentConfig, batch, meta) -> dict:
    """Spread of the per-run limits against the limit covariance of one node."""
    theta = batch.theta_hat
    out = {**meta, "theta_hat_mean": float(theta.mean()),
           "theta_hat_var": float(theta.var(ddof=1)), "xbar": float(batch.xbar[0])}
    try:
        cov = asymptotic_covariance(cfg.graph_obj, cfg.functionals, cfg.h_obj,
                                    float(theta.mean()), cfg.gain)
        out["asymptotic_variance_node0"] = float(cov.c_rc[0, 0])
        out["mse_bound"] = mse_bound(cfg.graph_obj, cfg.functionals, cfg.gain).mse_bound
    except ConsensusError as exc:
        out["analytic_error"] = str(exc)
    return out
