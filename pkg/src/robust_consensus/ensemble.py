"""Experiment configuration, Monte Carlo ensembles and empirical-vs-analytic comparison."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .analysis import AnalyticReport, analyze, optimal_gain, validated_optimal_gain
from .engine import (SensingConfig, StepSchedule, TrialBatch,
                     initial_state, run_trials)
from .exceptions import ConfigError, ConsensusError, ParameterError, StabilityError
from .graphs import FAMILIES, Graph, build_named, build_random, read_edge_list
from .maps import ReceiveMap, TransmitMap
from .noise import NoiseModel, functionals, sensing_stream

__all__ = [
    "ExperimentConfig",
    "EnsembleStats",
    "Comparison",
    "ComparisonRow",
    "load_config",
    "parse_override",
    "run_ensemble",
    "ensemble_stats",
    "compare_empirical_analytic",
]

_TOP_KEYS = {"name", "graph", "h", "f", "noise", "sensing", "schedule", "trials",
             "t_max", "checkpoints", "seed", "output", "workers"}
COVARIANCE_HORIZON_FACTOR = 4


def _build_graph(spec: dict) -> Graph:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    try:
        if kind in ("erdos_renyi", "geometric"):
            return build_random(kind, int(spec.pop("n")), int(spec.pop("seed", 0)),
                                p=spec.pop("p", None), radius=spec.pop("radius", None))
        if kind == "edge_list":
            return read_edge_list(spec.pop("path"))
        if kind in FAMILIES:
            return build_named(kind, spec.pop("n", None), k=spec.pop("k", None),
                               p=spec.pop("p", None), q=spec.pop("q", None))
    except KeyError as exc:
        raise ConfigError(f"graph spec is missing {exc}") from exc
    raise ConfigError(f"unknown graph kind {kind!r}")


def _sensing_from_spec(spec: dict) -> tuple[SensingConfig, bool]:
    spec = dict(spec)
    shared = bool(spec.pop("shared", True))
    theta = float(spec.pop("theta", 0.0))
    initials = spec.pop("initials", None)
    noise_spec = spec.pop("noise", {"kind": "none"})
    if spec:
        raise ConfigError(f"unexpected sensing keys {sorted(spec)}")
    return SensingConfig(theta, NoiseModel.from_spec(noise_spec), initials), shared


@dataclass(frozen=True)
class ExperimentConfig:
    """A complete, hashable description of one experiment.

    Map, noise and graph sections are kept as plain mappings (the config file
    form); the ``*_obj`` accessors build the corresponding objects.
    """

    graph: dict
    h: dict = field(default_factory=lambda: {"kind": "identity"})
    f: dict = field(default_factory=lambda: {"kind": "tanh", "s": 1.0})
    noise: dict = field(default_factory=lambda: {"kind": "gaussian", "sigma": 1.0})
    sensing: dict = field(default_factory=lambda: {"theta": 0.0})
    schedule: dict = field(default_factory=lambda: {"a": 1.0})
    trials: int = 1
    t_max: int = 1000
    checkpoints: tuple | None = None
    seed: int = 0
    output: str = "out"
    workers: int = 1
    name: str = "experiment"

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if int(self.t_max) < 1:
            raise ConfigError(f"t_max must be >= 1, got {self.t_max}")
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "t_max", int(self.t_max))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "workers", max(1, int(self.workers)))
        if self.checkpoints is not None:
            ck = tuple(sorted({int(c) for c in self.checkpoints}))
            if ck and (ck[0] < 1 or ck[-1] > self.t_max):
                raise ConfigError(f"checkpoints must lie in [1, {self.t_max}]")
            object.__setattr__(self, "checkpoints", ck)
        a = self.schedule.get("a", 1.0)
        if not (a in ("optimal", "paper_optimal") or
                (isinstance(a, (int, float)) and not isinstance(a, bool) and a > 0)):
            raise ConfigError(f"schedule.a must be positive or 'optimal'/'paper_optimal', got {a!r}")
        # validate the object sections eagerly so errors surface at load time
        try:
            self.h_obj, self.f_obj, self.noise_obj, self.sensing_obj
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc

    # construction ------------------------------------------------------------

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        data = copy.deepcopy(dict(data))
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "graph" not in data:
            raise ConfigError("config needs a [graph] section")
        ck = data.get("checkpoints")
        if isinstance(ck, str):
            if ck != "default":
                raise ConfigError("checkpoints must be a list or 'default'")
            data["checkpoints"] = None
        return cls(**data)

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_mapping(tomllib.loads(text))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from exc

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_toml(path.read_text())

    def to_mapping(self) -> dict:
        out = {
            "name": self.name, "seed": self.seed, "trials": self.trials,
            "t_max": self.t_max,
            "checkpoints": "default" if self.checkpoints is None else list(self.checkpoints),
            "output": self.output, "workers": self.workers,
            "graph": self.graph, "h": self.h, "f": self.f, "noise": self.noise,
            "sensing": self.sensing, "schedule": self.schedule,
        }
        return copy.deepcopy(out)

    def with_overrides(self, overrides) -> "ExperimentConfig":
        """Apply ``key.path=value`` strings or ``{dotted_key: value}`` mappings."""
        data = self.to_mapping()
        items = overrides.items() if isinstance(overrides, dict) else map(parse_override, overrides)
        for key, value in items:
            parts = key.split(".")
            node = data
            for p in parts[:-1]:
                nxt = node.get(p)
                if not isinstance(nxt, dict):
                    nxt = {}
                    node[p] = nxt
                node = nxt
            node[parts[-1]] = value
        return ExperimentConfig.from_mapping(data)

    @property
    def config_hash(self) -> str:
        # the worker count changes nothing in the outputs, so it is not hashed
        data = self.to_mapping()
        data.pop("workers")
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # derived objects ---------------------------------------------------------

    @cached_property
    def graph_obj(self) -> Graph:
        return _build_graph(self.graph)

    @cached_property
    def h_obj(self) -> TransmitMap:
        return TransmitMap.from_spec(self.h)

    @cached_property
    def f_obj(self) -> ReceiveMap:
        return ReceiveMap.from_spec(self.f)

    @cached_property
    def noise_obj(self) -> NoiseModel:
        return NoiseModel.from_spec(self.noise)

    @cached_property
    def sensing_obj(self) -> SensingConfig:
        return _sensing_from_spec(self.sensing)[0]

    @property
    def shared_initial(self) -> bool:
        return _sensing_from_spec(self.sensing)[1]

    @cached_property
    def functionals(self):
        return functionals(self.noise_obj, self.f_obj, seed=self.seed)

    @property
    def theta0_guess(self) -> float:
        """Limit-point estimate used before simulating: the mean measurement.

        The limit is unbiased for the mean of the initial states, so the shared
        draw's average (or ``theta`` when trials draw their own) is the natural
        a-priori value of ``theta0``.
        """
        s = self.sensing_obj
        if self.shared_initial or s.initials is not None:
            return initial_state(s, self.graph_obj.n, sensing_stream(self.seed))[1]
        return s.theta

    @cached_property
    def gain(self) -> float:
        a = self.schedule.get("a", 1.0)
        if a == "optimal":
            return validated_optimal_gain(self.graph_obj, self.functionals, self.h_obj,
                                          self.theta0_guess).a_star
        if a == "paper_optimal":
            return optimal_gain(self.graph_obj, self.functionals, self.h_obj,
                                self.theta0_guess).a_star
        return float(a)

    @property
    def step_schedule(self) -> StepSchedule:
        return StepSchedule(self.gain)

    @property
    def horizon(self) -> int:
        return max(self.checkpoints) if self.checkpoints else self.t_max

    def describe(self) -> dict:
        """Resolved provenance for run logs and output headers."""
        return {
            "name": self.name,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "trials": self.trials,
            "t_max": self.t_max,
            "graph": repr(self.graph_obj),
            "h": self.h_obj.formula(),
            "f": self.f_obj.formula(),
            "noise": self.noise_obj.describe(),
            "sensing": self.sensing,
            "a": self.gain,
        }

    def analytic_report(self, theta0: float | None = None, *, strict: bool = True,
                        convention: str = "validated") -> AnalyticReport:
        th = self.theta0_guess if theta0 is None else theta0
        return analyze(self.graph_obj, self.functionals, self.h_obj, th, self.gain,
                       convention=convention, strict=strict)


def parse_override(text: str) -> tuple[str, object]:
    """``"noise.gamma=0.5"`` -> ``("noise.gamma", 0.5)``; values use TOML syntax."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key=value")
    key, raw = (s.strip() for s in text.split("=", 1))
    if not key:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def load_config(path=None, overrides=(), preset: str | None = None) -> ExperimentConfig:
    """Config from a file or named preset, with CLI-style overrides applied."""
    if path is not None:
        cfg = ExperimentConfig.from_file(path)
    elif preset is not None:
        from .presets import preset_config
        cfg = preset_config(preset)
    else:
        raise ConfigError("either a config file or a preset is required")
    return cfg.with_overrides(list(overrides)) if overrides else cfg


# ----------------------------------------------------------------------------
# ensembles


@dataclass
class EnsembleStats:
    """Ensemble statistics at the configured checkpoints.

    ``cov[k]`` is the unbiased sample covariance over trials of
    ``sqrt(t_k) (X(t_k) - theta_hat 1)`` with per-trial ``theta_hat = xbar(T_max)``.
    """

    times: np.ndarray
    cov: np.ndarray
    cov_norm: np.ndarray
    mean_dispersion: np.ndarray
    theta_hat: np.ndarray
    xbar: np.ndarray
    trials: int
    seed: int
    config_hash: str = ""

    @property
    def theta_mean(self) -> float:
        return float(self.theta_hat.mean())

    @property
    def theta_var(self) -> float:
        return float(self.theta_hat.var(ddof=1)) if self.trials > 1 else 0.0

    @property
    def theta_se(self) -> float:
        return math.sqrt(self.theta_var / self.trials)

    @property
    def bias(self) -> float:
        """Mean of ``theta_hat - xbar`` over trials."""
        return float((self.theta_hat - self.xbar).mean())

    @property
    def bias_se(self) -> float:
        d = self.theta_hat - self.xbar
        return float(d.std(ddof=1) / math.sqrt(len(d))) if len(d) > 1 else 0.0

    @property
    def mse(self) -> float:
        """Empirical mean squared error of ``theta_hat`` about ``xbar``."""
        return float(((self.theta_hat - self.xbar) ** 2).mean())

    def summary(self) -> dict:
        return {
            "trials": self.trials, "seed": self.seed, "config_hash": self.config_hash,
            "theta_mean": self.theta_mean, "theta_var": self.theta_var,
            "theta_se": self.theta_se, "bias": self.bias, "bias_se": self.bias_se,
            "mse": self.mse,
        }


def ensemble_stats(batch: TrialBatch, checkpoints=None, config_hash: str = "") -> EnsembleStats:
    """Covariance, norms and dispersion from a batch of trials."""
    times = batch.times if checkpoints is None else np.asarray(checkpoints, dtype=int)
    idx = np.searchsorted(batch.times, times)
    if np.any(idx >= len(batch.times)) or np.any(batch.times[idx] != times):
        raise ParameterError("requested checkpoints were not recorded")
    m, _, n = batch.states.shape
    theta_hat = batch.theta_hat
    covs = np.zeros((len(times), n, n))
    norms = np.zeros(len(times))
    disp = batch.dispersion[:, idx].mean(axis=0)
    for k, (t, j) in enumerate(zip(times, idx)):
        if m > 1:
            e = math.sqrt(t) * (batch.states[:, j, :] - theta_hat[:, None])
            c = np.cov(e, rowvar=False, ddof=1).reshape(n, n)
            covs[k] = 0.5 * (c + c.T)
            norms[k] = float(np.linalg.eigvalsh(covs[k])[-1])
    return EnsembleStats(np.asarray(times), covs, norms, disp, theta_hat,
                         np.asarray(batch.xbar, dtype=float), m, batch.seed, config_hash)


def _run_chunk(cfg: ExperimentConfig, trial_ids) -> TrialBatch:
    return run_trials(cfg.graph_obj, cfg.h_obj, cfg.f_obj, cfg.noise_obj, cfg.step_schedule,
                      cfg.sensing_obj, cfg.t_max, checkpoints=cfg.checkpoints,
                      seed=cfg.seed, trials=trial_ids, shared_initial=cfg.shared_initial)


def run_batch(cfg: ExperimentConfig, workers: int | None = None) -> TrialBatch:
    """All trials of ``cfg``; worker processes each take a contiguous block.

    Per-trial streams make the result independent of the worker count.
    """
    workers = cfg.workers if workers is None else max(1, int(workers))
    ids = np.arange(cfg.trials)
    if workers == 1 or cfg.trials == 1:
        return _run_chunk(cfg, ids)
    blocks = [b for b in np.array_split(ids, workers) if len(b)]
    with ProcessPoolExecutor(max_workers=len(blocks)) as pool:
        parts = list(pool.map(_run_chunk, [cfg] * len(blocks), blocks))
    return TrialBatch(parts[0].times, np.concatenate([p.states for p in parts]),
                      np.concatenate([p.xbar for p in parts]), cfg.seed,
                      np.concatenate([p.trials for p in parts]))


def run_ensemble(cfg: ExperimentConfig, workers: int | None = None) -> EnsembleStats:
    """Run ``cfg.trials`` trials and reduce them to :class:`EnsembleStats`.

    Requires ``t_max >= 4 * max(checkpoints)`` so that ``xbar(t_max)`` is a
    usable stand-in for each trial's limit point.
    """
    if cfg.checkpoints is None:
        raise ConfigError("ensembles need an explicit checkpoint list")
    if cfg.t_max < COVARIANCE_HORIZON_FACTOR * cfg.horizon:
        raise ConfigError(
            f"t_max={cfg.t_max} must be at least {COVARIANCE_HORIZON_FACTOR}x the last "
            f"checkpoint ({cfg.horizon})")
    try:
        batch = run_batch(cfg, workers)
    except ConsensusError as exc:
        raise type(exc)(f"{exc} (seed {cfg.seed})") from exc
    return ensemble_stats(batch, cfg.checkpoints, cfg.config_hash)


# ----------------------------------------------------------------------------
# comparison


@dataclass(frozen=True)
class ComparisonRow:
    t: int
    empirical: float
    analytic: float
    rel_err: float


@dataclass(frozen=True)
class Comparison:
    rows: tuple
    non_increasing: bool

    @property
    def final_rel_err(self) -> float:
        return self.rows[-1].rel_err

    def as_table(self) -> str:
        lines = [f"{'t':>8} {'empirical':>14} {'analytic':>14} {'rel_err':>10}"]
        for r in self.rows:
            lines.append(f"{r.t:>8d} {r.empirical:>14.6g} {r.analytic:>14.6g} {r.rel_err:>10.4f}")
        return "\n".join(lines)


def compare_empirical_analytic(stats: EnsembleStats, report: AnalyticReport) -> Comparison:
    """Relative error ``|emp - analytic| / analytic`` of the covariance norm per checkpoint.

    ``non_increasing`` is true when the error never grows from one checkpoint
    to the next.  Unstable reports are refused with the offending margin.
    """
    if report.c_rc_norm is None or report.stability_margin <= 0:
        raise StabilityError(report.stability_margin)
    ref = float(report.c_rc_norm)
    rows = tuple(ComparisonRow(int(t), float(e), ref, abs(float(e) - ref) / ref)
                 for t, e in zip(stats.times, stats.cov_norm))
    errs = [r.rel_err for r in rows]
    return Comparison(rows, all(b <= a for a, b in zip(errs, errs[1:])))
