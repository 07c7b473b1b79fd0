"""The robust-consensus recursion and its trial runners.

One iteration updates every node with

    x_i <- x_i - alpha(t) * sum_{j in N_i} f(h(x_i) - h(x_j) - n_ij(t))

where a fresh draw ``n_ij`` is taken for every directed reception (``n_ij`` and
``n_ji`` are independent).  States may be a single ``(N,)`` vector or a batch
``(M, N)`` of independent trials advanced together.

Random streams: trial ``m`` of master seed ``s`` draws its channel noise from
``channel_stream(s, m)`` in fixed blocks of :data:`NOISE_BLOCK` iterations, so
the noise seen at iteration ``t`` depends only on ``(s, m, t)`` and never on the
horizon, the batch size or the order in which trials are run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NumericError, ParameterError
from .graphs import Graph
from .noise import NoiseModel, channel_stream, sensing_stream

__all__ = [
    "SensingConfig",
    "StepSchedule",
    "TrialTrajectory",
    "TrialBatch",
    "MeanPreservationReport",
    "RCSystem",
    "initial_state",
    "sample_arcs",
    "rc_step",
    "run_trial",
    "run_trials",
    "default_checkpoints",
    "mean_preservation_check",
]

NOISE_BLOCK = 64
_BATCH_BYTES = 128 * 2 ** 20


@dataclass(frozen=True)
class SensingConfig:
    """Initial measurements ``x_i(0) = theta + eta_i`` or an explicit vector."""

    theta: float = 0.0
    noise: NoiseModel = field(default_factory=NoiseModel.zero)
    initials: tuple | None = None

    def __post_init__(self):
        if self.initials is not None:
            vals = tuple(float(v) for v in np.ravel(self.initials))
            if not all(math.isfinite(v) for v in vals):
                raise ParameterError("initial values must be finite")
            object.__setattr__(self, "initials", vals)


def initial_state(cfg: SensingConfig, n: int, rng: np.random.Generator | None = None):
    """Return ``(x0, xbar)`` for ``n`` nodes."""
    if cfg.initials is not None:
        if len(cfg.initials) != n:
            raise ParameterError(f"{len(cfg.initials)} initial values for {n} nodes")
        x0 = np.array(cfg.initials, dtype=float)
    else:
        if rng is None and cfg.noise.kind != "none":
            raise ParameterError("a random stream is needed for noisy sensing")
        eta = cfg.noise.sample(rng, n) if cfg.noise.kind != "none" else np.zeros(n)
        x0 = cfg.theta + np.asarray(eta, dtype=float)
    return x0, float(x0.mean())


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes ``alpha(t) = a / (t + 1)`` for ``t = 0, 1, ...``."""

    a: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ParameterError(f"gain a must be positive, got {self.a}")

    def __call__(self, t):
        return self.a / (np.asarray(t, dtype=float) + 1.0) if np.ndim(t) else self.a / (t + 1.0)

    @property
    def sum_sq(self) -> float:
        """``sum_{t >= 0} alpha(t)^2 = a^2 pi^2 / 6``."""
        return self.a ** 2 * math.pi ** 2 / 6.0


def sample_arcs(noise: NoiseModel, rng: np.random.Generator, graph: Graph, shape=()):
    """Channel noise for every directed reception, laid out as ``graph.arcs``."""
    size = tuple(np.atleast_1d(shape)) if shape != () else ()
    return np.asarray(noise.sample(rng, size + (2 * graph.edge_count,)), dtype=float)


def rc_step(x, graph: Graph, h, f, alpha_t: float, *, draws=None,
            noise: NoiseModel | None = None, rng: np.random.Generator | None = None):
    """One iteration of the recursion.

    ``draws`` holds the arc noise (shape ``(..., 2|E|)`` matching ``x``'s batch
    shape); when omitted it is sampled from ``noise`` with ``rng``, and with
    neither the step is noise-free.
    """
    if not alpha_t > 0:
        raise ParameterError(f"alpha_t must be positive, got {alpha_t}")
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != graph.n:
        raise ParameterError(f"state has {x.shape[-1]} entries for {graph.n} nodes")
    if graph.edge_count == 0:
        return x.copy()
    recv, send = graph.arcs
    hx = h(x)
    diff = hx[..., recv] - hx[..., send]
    if draws is None and noise is not None and noise.kind != "none":
        if rng is None:
            raise ParameterError("noise given without a random stream")
        draws = sample_arcs(noise, rng, graph, x.shape[:-1])
    if draws is not None:
        diff = diff - draws
    terms = f(diff)
    inc = graph.arc_incidence
    if x.ndim == 1:
        agg = inc @ terms
    else:
        flat = terms.reshape(-1, terms.shape[-1])
        agg = (inc @ flat.T).T.reshape(x.shape)
    return x - alpha_t * agg


def default_checkpoints(t_max: int) -> np.ndarray:
    """Every iteration up to 100, then about 40 log-spaced points per decade, plus ``t_max``."""
    t_max = int(t_max)
    dense = np.arange(0, min(t_max, 100) + 1)
    if t_max <= 100:
        return dense
    decades = math.log10(t_max / 100.0)
    sparse_pts = np.unique(np.round(np.logspace(2, math.log10(t_max),
                                                max(2, int(40 * decades) + 1))).astype(int))
    return np.unique(np.concatenate([dense, sparse_pts, [t_max]]))


def _normalize_checkpoints(checkpoints, t_max):
    if checkpoints is None:
        ck = default_checkpoints(t_max)
    elif isinstance(checkpoints, (int, np.integer)):
        stride = int(checkpoints)
        if stride < 1:
            raise ParameterError("checkpoint stride must be >= 1")
        ck = np.arange(0, t_max + 1, stride)
    else:
        ck = np.asarray(sorted(set(int(c) for c in checkpoints)), dtype=int)
    if len(ck) and (ck[0] < 0 or ck[-1] > t_max):
        raise ParameterError(f"checkpoints must lie in [0, {t_max}]")
    ck = np.union1d(ck, [0, t_max]).astype(int)
    return ck


@dataclass
class TrialTrajectory:
    """States of one trial at increasing checkpoint times (``times[0] == 0``)."""

    times: np.ndarray
    states: np.ndarray
    seed: int
    trial: int = 0
    xbar: float = math.nan

    @property
    def running_mean(self) -> np.ndarray:
        return self.states.mean(axis=-1)

    @property
    def dispersion(self) -> np.ndarray:
        """``||X(t) - xbar(t) 1||`` at each checkpoint."""
        dev = self.states - self.running_mean[:, None]
        return np.linalg.norm(dev, axis=-1)

    @property
    def theta_hat(self) -> float:
        """Estimate of the limit point: ``xbar(T_final)``."""
        return float(self.running_mean[-1])

    @property
    def checkpoints(self) -> list:
        return list(zip(self.times.tolist(), self.states))

    def at(self, t: int) -> np.ndarray:
        idx = np.searchsorted(self.times, t)
        if idx == len(self.times) or self.times[idx] != t:
            raise KeyError(f"t={t} is not a checkpoint")
        return self.states[idx]


@dataclass
class TrialBatch:
    """States of ``M`` trials: ``states`` has shape ``(M, K, N)``."""

    times: np.ndarray
    states: np.ndarray
    xbar: np.ndarray
    seed: int
    trials: np.ndarray

    @property
    def theta_hat(self) -> np.ndarray:
        return self.states[:, -1, :].mean(axis=-1)

    @property
    def dispersion(self) -> np.ndarray:
        dev = self.states - self.states.mean(axis=-1, keepdims=True)
        return np.linalg.norm(dev, axis=-1)

    def trajectory(self, m: int) -> TrialTrajectory:
        return TrialTrajectory(self.times, self.states[m], self.seed,
                               int(self.trials[m]), float(self.xbar[m]))


def _simulate(graph, h, f, noise, schedule, x0, streams, times, trials):
    """Advance a batch of trials; ``streams[b]`` feeds row ``b`` of ``x0``."""
    t_max = int(times[-1])
    batch, n = x0.shape
    out = np.empty((batch, len(times), n))
    x = x0.copy()
    k = 0
    if times[0] == 0:
        out[:, 0] = x
        k = 1
    n_arcs = 2 * graph.edge_count
    noisy = noise.kind != "none" and n_arcs > 0
    block = None
    for t in range(t_max):
        j = t % NOISE_BLOCK
        if noisy and j == 0:
            block = np.stack([noise.sample(rng, (NOISE_BLOCK, n_arcs)) for rng in streams])
        draws = block[:, j] if noisy else None
        with np.errstate(over="ignore", invalid="ignore"):
            x = rc_step(x, graph, h, f, schedule(t), draws=draws)
        if not np.isfinite(x).all():
            bad = int(np.flatnonzero(~np.isfinite(x).all(axis=1))[0])
            raise NumericError(
                f"non-finite state at iteration {t + 1} in trial {int(trials[bad])}")
        if k < len(times) and times[k] == t + 1:
            out[:, k] = x
            k += 1
    return out


def run_trials(graph: Graph, h, f, noise: NoiseModel, schedule: StepSchedule,
               sensing: SensingConfig, t_max: int, *, checkpoints=None, seed: int = 0,
               trials=1, shared_initial: bool = True, batch_size: int | None = None) -> TrialBatch:
    """Run independent trials and collect their checkpoint states.

    ``trials`` is a count or an explicit sequence of trial indices.  With
    ``shared_initial`` every trial starts from the same measurement draw;
    otherwise trial ``m`` draws its own measurements.
    """
    t_max = int(t_max)
    if t_max < 1:
        raise ParameterError("T_max must be >= 1")
    if isinstance(schedule, (int, float)):
        schedule = StepSchedule(float(schedule))
    idx = np.arange(trials) if np.ndim(trials) == 0 else np.asarray(trials, dtype=int)
    if len(idx) == 0:
        raise ParameterError("need at least one trial")
    times = _normalize_checkpoints(checkpoints, t_max)
    n = graph.n
    if shared_initial:
        x_shared, _ = initial_state(sensing, n, sensing_stream(seed))
        x0 = np.tile(x_shared, (len(idx), 1))
    else:
        x0 = np.stack([initial_state(sensing, n, sensing_stream(seed, m))[0] for m in idx])
    if batch_size is None:
        per_trial = 8 * (NOISE_BLOCK * 2 * graph.edge_count + len(times) * n + 4 * n)
        batch_size = max(1, _BATCH_BYTES // max(per_trial, 1))
    states = np.empty((len(idx), len(times), n))
    for lo in range(0, len(idx), batch_size):
        sl = slice(lo, lo + batch_size)
        streams = [channel_stream(seed, m) for m in idx[sl]]
        states[sl] = _simulate(graph, h, f, noise, schedule, x0[sl], streams, times, idx[sl])
    return TrialBatch(times, states, x0.mean(axis=1), int(seed), idx)


def run_trial(graph: Graph, h, f, noise: NoiseModel, schedule: StepSchedule,
              sensing: SensingConfig, t_max: int, *, checkpoints=None, seed: int = 0,
              trial: int = 0, shared_initial: bool = True) -> TrialTrajectory:
    """Run one trial; identical to row ``trial`` of :func:`run_trials`."""
    batch = run_trials(graph, h, f, noise, schedule, sensing, t_max,
                       checkpoints=checkpoints, seed=seed, trials=[trial],
                       shared_initial=shared_initial)
    return batch.trajectory(0)


@dataclass(frozen=True)
class RCSystem:
    """A graph with its maps, channel noise and step schedule."""

    graph: Graph
    h: object
    f: object
    noise: NoiseModel
    schedule: StepSchedule = field(default_factory=StepSchedule)

    def step(self, x, t: int, *, draws=None, rng=None):
        return rc_step(x, self.graph, self.h, self.f, self.schedule(t),
                       draws=draws, noise=self.noise, rng=rng)

    def run_trial(self, sensing: SensingConfig, t_max: int, **kw) -> TrialTrajectory:
        return run_trial(self.graph, self.h, self.f, self.noise, self.schedule,
                         sensing, t_max, **kw)

    def run_trials(self, sensing: SensingConfig, t_max: int, **kw) -> TrialBatch:
        return run_trials(self.graph, self.h, self.f, self.noise, self.schedule,
                          sensing, t_max, **kw)


@dataclass(frozen=True)
class MeanPreservationReport:
    """Increments ``v(t) = xbar(t) - xbar(t + 1)`` and the check applied to them."""

    increments: np.ndarray
    max_abs: float
    bound: np.ndarray | None
    passed: bool


def mean_preservation_check(traj: TrialTrajectory, schedule: StepSchedule, noise_free: bool,
                            *, d_max: int | None = None, f_bound: float | None = None,
                            tol: float = 1e-12) -> MeanPreservationReport:
    """Check how the network average moves between consecutive iterations.

    Noise-free runs must conserve the average to ``tol``.  For noisy runs the
    increments are reported, and checked against ``2 alpha(t) d_max F_max``
    when ``d_max`` and ``f_bound`` are given.
    """
    times = np.asarray(traj.times)
    if len(times) > 1 and not np.all(np.diff(times) == 1):
        raise ParameterError("mean preservation needs a checkpoint at every iteration")
    xbar = traj.running_mean
    inc = xbar[:-1] - xbar[1:]
    max_abs = float(np.abs(inc).max()) if len(inc) else 0.0
    if noise_free:
        scale = max(1.0, float(np.abs(xbar).max()))
        return MeanPreservationReport(inc, max_abs, None, max_abs <= tol * scale)
    if d_max is None or f_bound is None:
        return MeanPreservationReport(inc, max_abs, None, True)
    bound = 2.0 * schedule(times[:-1]) * d_max * f_bound
    return MeanPreservationReport(inc, max_abs, bound, bool(np.all(np.abs(inc) <= bound)))
