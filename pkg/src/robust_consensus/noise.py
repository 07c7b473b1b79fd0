"""Symmetric zero-median noise laws: sampling, densities and expectation functionals.

Supported kinds are ``gaussian`` (std ``scale``), ``laplacian`` (scale ``b``),
``cauchy`` (scale ``gamma``), symmetric ``alpha_stable`` (index ``alpha``,
scale ``c``, characteristic function ``exp(-|c t|^alpha)``) and ``none``
(identically zero, for noise-free runs).

Expectations ``E_n[phi(n)]`` are computed by adaptive quadrature against the
density when one is available in closed form, otherwise by Monte Carlo with
a reported standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .exceptions import CapabilityError, NumericError, ParameterError

__all__ = [
    "NoiseModel",
    "NoiseFunctionals",
    "Expectation",
    "expectation",
    "functionals",
    "fisher_information",
    "sup_variance",
    "channel_stream",
    "sensing_stream",
]

KINDS = ("gaussian", "laplacian", "cauchy", "alpha_stable", "none")

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-10
DEFAULT_MC_DRAWS = 1_000_000

# purpose tags for SeedSequence spawn keys
_CHANNEL, _SENSING = 0, 1


def channel_stream(seed: int, trial: int) -> np.random.Generator:
    """Channel-noise stream of one trial, independent of every other trial."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(int(seed), spawn_key=(_CHANNEL, int(trial)))))


def sensing_stream(seed: int, trial: int | None = None) -> np.random.Generator:
    """Stream for initial measurements; ``trial=None`` gives the shared stream."""
    key = (_SENSING,) if trial is None else (_SENSING, int(trial))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


@dataclass(frozen=True)
class NoiseModel:
    kind: str
    scale: float = 1.0
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown noise kind {self.kind!r}; choose from {KINDS}")
        if self.kind != "none" and not (self.scale > 0 and math.isfinite(self.scale)):
            raise ParameterError(f"noise scale must be positive, got {self.scale}")
        if self.kind == "alpha_stable":
            if self.alpha is None or not (0 < self.alpha <= 2):
                raise ParameterError(f"alpha_stable needs 0 < alpha <= 2, got {self.alpha}")
        elif self.alpha is not None:
            raise ParameterError(f"alpha is only meaningful for alpha_stable, not {self.kind}")

    # constructors -------------------------------------------------------

    @classmethod
    def gaussian(cls, sigma=1.0):
        return cls("gaussian", float(sigma))

    @classmethod
    def laplacian(cls, b=1.0):
        return cls("laplacian", float(b))

    @classmethod
    def cauchy(cls, gamma=1.0):
        return cls("cauchy", float(gamma))

    @classmethod
    def alpha_stable(cls, alpha, c=1.0):
        return cls("alpha_stable", float(c), float(alpha))

    @classmethod
    def zero(cls):
        return cls("none", 0.0)

    @classmethod
    def from_spec(cls, spec: dict) -> "NoiseModel":
        """Build from a config mapping ``{kind = ..., <params>}``.

        Accepted parameter names: ``sigma`` (gaussian), ``b`` (laplacian),
        ``gamma`` (cauchy), ``alpha`` and ``c`` (alpha_stable), or ``scale``.
        """
        spec = dict(spec)
        kind = spec.pop("kind", None)
        params = spec.pop("params", {})
        spec.update(params)
        if kind in ("none", "zero"):
            return cls.zero()
        names = {"gaussian": "sigma", "laplacian": "b", "cauchy": "gamma", "alpha_stable": "c"}
        if kind not in names:
            raise ParameterError(f"unknown noise kind {kind!r}")
        scale = spec.pop(names[kind], spec.pop("scale", 1.0))
        alpha = spec.pop("alpha", None)
        if spec:
            raise ParameterError(f"unexpected noise parameters {sorted(spec)}")
        if kind == "alpha_stable":
            return cls.alpha_stable(alpha, scale)
        return cls(kind, float(scale))

    def to_spec(self) -> dict:
        if self.kind == "none":
            return {"kind": "none"}
        if self.kind == "alpha_stable":
            return {"kind": "alpha_stable", "alpha": self.alpha, "c": self.scale}
        name = {"gaussian": "sigma", "laplacian": "b", "cauchy": "gamma"}[self.kind]
        return {"kind": self.kind, name: self.scale}

    def describe(self) -> str:
        if self.kind == "none":
            return "no noise"
        if self.kind == "alpha_stable":
            return f"alpha_stable(alpha={self.alpha:g}, c={self.scale:g})"
        name = {"gaussian": "sigma", "laplacian": "b", "cauchy": "gamma"}[self.kind]
        return f"{self.kind}({name}={self.scale:g})"

    # properties -----------------------------------------------------------

    @property
    def effective(self) -> "NoiseModel":
        """Same law with alpha-stable special cases resolved (1 -> Cauchy, 2 -> Gaussian)."""
        if self.kind == "alpha_stable":
            if self.alpha == 1.0:
                return NoiseModel.cauchy(self.scale)
            if self.alpha == 2.0:
                return NoiseModel.gaussian(math.sqrt(2.0) * self.scale)
        return self

    @property
    def has_density(self) -> bool:
        return self.effective.kind in ("gaussian", "laplacian", "cauchy")

    @property
    def finite_variance(self) -> bool:
        return self.effective.kind in ("gaussian", "laplacian", "none")

    # sampling ------------------------------------------------------------

    def sample(self, rng: np.random.Generator, size=None):
        """I.i.d. draws; returns a float when ``size`` is None."""
        k, s = self.kind, self.scale
        if k == "none":
            return 0.0 if size is None else np.zeros(size)
        if k == "gaussian":
            return rng.normal(0.0, s, size)
        if k == "laplacian":
            return rng.laplace(0.0, s, size)
        if k == "cauchy":
            return s * rng.standard_cauchy(size)
        return s * _symmetric_stable(self.alpha, rng, size)

    # density ---------------------------------------------------------------

    def density(self, x):
        """Closed-form pdf; alpha-stable laws other than alpha in {1, 2} raise."""
        m = self.effective
        x = np.asarray(x, dtype=float)
        if m.kind == "gaussian":
            out = np.exp(-0.5 * (x / m.scale) ** 2) / (m.scale * math.sqrt(2 * math.pi))
        elif m.kind == "laplacian":
            out = np.exp(-np.abs(x) / m.scale) / (2 * m.scale)
        elif m.kind == "cauchy":
            out = m.scale / (math.pi * (x * x + m.scale ** 2))
        else:
            raise CapabilityError(f"no closed-form density for {self.describe()}")
        return out[()] if out.ndim == 0 else out

    def density_derivative(self, x):
        m = self.effective
        x = np.asarray(x, dtype=float)
        p = np.asarray(self.density(x))
        if m.kind == "gaussian":
            out = -x / m.scale ** 2 * p
        elif m.kind == "laplacian":
            out = -np.sign(x) / m.scale * p
        else:
            out = -2 * x / (x * x + m.scale ** 2) * p
        return out[()] if out.ndim == 0 else out

    def fisher_closed_form(self) -> float:
        """Location Fisher information where a closed form is known."""
        m = self.effective
        if m.kind == "gaussian":
            return 1.0 / m.scale ** 2
        if m.kind == "laplacian":
            return 1.0 / m.scale ** 2
        if m.kind == "cauchy":
            return 1.0 / (2.0 * m.scale ** 2)
        if m.kind == "none":
            return math.inf
        raise CapabilityError(f"no closed-form Fisher information for {self.describe()}")


def _symmetric_stable(alpha, rng, size):
    # Chambers-Mallows-Stuck, skew 0: V uniform on (-pi/2, pi/2), W standard exponential
    v = math.pi * (rng.random(size) - 0.5)
    w = rng.standard_exponential(size)
    if alpha == 1.0:
        return np.tan(v)
    a = alpha
    return (np.sin(a * v) / np.cos(v) ** (1.0 / a)
            * (np.cos((1.0 - a) * v) / w) ** ((1.0 - a) / a))


# --------------------------------------------------------------------------
# expectations


@dataclass(frozen=True)
class Expectation:
    value: float
    stderr: float = 0.0
    method: str = "quadrature"


def _quad_line(func, model, points=()):
    """Integral of ``func`` over the real line, split near the density and ``points``."""
    m = model.effective
    width = 60.0 * m.scale
    pts = sorted({0.0, *map(float, points)})
    lo, hi = pts[0] - width, pts[-1] + width
    edges = [lo, *pts, hi]
    opts = dict(epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=400)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            total += integrate.quad(func, a, b, **opts)[0]
    total += integrate.quad(func, -np.inf, lo, **opts)[0]
    total += integrate.quad(func, hi, np.inf, **opts)[0]
    if not math.isfinite(total):
        raise NumericError("non-finite quadrature result")
    return total


def expectation(model: NoiseModel, func, *, points=(), method: str = "auto",
                mc_draws: int = DEFAULT_MC_DRAWS, seed: int = 0) -> Expectation:
    """``E_n[func(n)]`` by quadrature (``method='quadrature'``) or Monte Carlo.

    ``auto`` uses quadrature whenever the law has a closed density.  ``points``
    are abscissae where ``func`` changes quickly (passed to the quadrature split).
    """
    if model.kind == "none":
        return Expectation(float(func(0.0)), 0.0, "exact")
    if method == "auto":
        method = "quadrature" if model.has_density else "monte_carlo"
    if method == "quadrature":
        if not model.has_density:
            raise CapabilityError(f"quadrature needs a density; {model.describe()} has none")
        val = _quad_line(lambda x: func(x) * model.density(x), model, points)
        return Expectation(val, 0.0, "quadrature")
    if method == "monte_carlo":
        rng = np.random.default_rng(seed)
        draws = model.sample(rng, int(mc_draws))
        vals = np.asarray(func(draws), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise NumericError("non-finite Monte Carlo samples")
        se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
        return Expectation(float(vals.mean()), se, "monte_carlo")
    raise ParameterError(f"unknown expectation method {method!r}")


def fisher_information(model: NoiseModel, method: str = "auto") -> float:
    """Location Fisher information ``J = int p'(x)^2 / p(x) dx``.

    ``auto`` integrates numerically when a density exists and otherwise falls
    back to the closed form.
    """
    if model.kind == "none":
        return math.inf
    if method == "auto":
        method = "quadrature" if model.has_density else "closed_form"
    if method == "closed_form":
        return model.fisher_closed_form()
    if method != "quadrature":
        raise ParameterError(f"unknown method {method!r}")

    def integrand(x):
        p = model.density(x)
        if p <= 0.0:
            return 0.0
        return model.density_derivative(x) ** 2 / p

    return _quad_line(integrand, model)


def sup_variance(model: NoiseModel, f, *, half_width: float = 50.0, points: int = 2001,
                 mc_draws: int = 200_000, seed: int = 0) -> float:
    """``sup_x var[f(x + n)]`` over a symmetric grid plus the ``|x| -> inf`` limit.

    With a density the whole grid is integrated at once (vector quadrature);
    otherwise ``mc_draws`` common samples are reused across the grid.
    """
    grid = np.linspace(-half_width, half_width, points)
    if model.kind == "none":
        return 0.0
    if model.has_density:
        m = model.effective
        kinks = tuple(getattr(f, "kinks", ()))
        if kinks and m.kind != "laplacian":
            # integrate over y = x + n so the kinks of f stay at fixed abscissae
            def integrand(y):
                v = f(y)
                w = m.density(y - grid)
                return np.concatenate([v * w, v * v * w])

            centre = sorted({0.0, *kinks})
        else:
            def integrand(n):
                v = f(grid + n)
                return np.concatenate([v, v * v]) * m.density(n)

            centre = [0.0]
        width = 60.0 * m.scale + half_width
        opts = dict(epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=2000)
        acc = np.zeros(2 * points)
        edges = [-width, *centre, width]
        pieces = [(-np.inf, -width), *zip(edges[:-1], edges[1:]), (width, np.inf)]
        for a, b in pieces:
            if b > a:
                acc += integrate.quad_vec(integrand, a, b, **opts)[0]
        mean, second = acc[:points], acc[points:]
    else:
        rng = np.random.default_rng(seed)
        draws = model.sample(rng, int(mc_draws))
        mean = np.empty(points)
        second = np.empty(points)
        for k, x in enumerate(grid):
            v = f(x + draws)
            mean[k] = v.mean()
            second[k] = (v * v).mean()
    var = second - mean ** 2
    if not np.all(np.isfinite(var)):
        raise NumericError("non-finite variance on the sup grid")
    # for saturating f the variance vanishes as |x| -> inf; identity keeps var[n]
    tail = 0.0 if math.isfinite(f.bound) else float(var[-1])
    return float(max(var.max(), tail, 0.0))


@dataclass(frozen=True)
class NoiseFunctionals:
    """Moments of a receive map under a noise law.

    ``ratio`` is ``E[f^2(n)] / E[f'(n)]^2``; ``sup_var`` is ``sup_x var[f(x+n)]``.
    ``stderr`` holds Monte Carlo standard errors (zeros for quadrature).
    """

    e_f_squared: float
    e_f_prime: float
    ratio: float
    fisher_info: float
    sup_var: float
    e_f: float = 0.0
    method: str = "quadrature"
    stderr: dict = field(default_factory=dict)

    @property
    def one_over_j(self) -> float:
        return 1.0 / self.fisher_info if self.fisher_info > 0 else math.inf


def functionals(model: NoiseModel, f, *, method: str = "auto",
                mc_draws: int = DEFAULT_MC_DRAWS, seed: int = 0,
                with_sup_var: bool = True) -> NoiseFunctionals:
    """Compute ``E[f^2(n)]``, ``E[f'(n)]``, their ratio, ``J`` and ``sup_x var[f(x+n)]``.

    ``f`` is a receive map (anything with ``__call__``, ``deriv`` and ``bound``).
    """
    if not math.isfinite(f.bound) and not model.finite_variance:
        raise NumericError(f"E[f^2(n)] diverges: unbounded f under {model.describe()}")
    if method == "auto":
        method = "quadrature" if (model.has_density or model.kind == "none") else "monte_carlo"
    kinks = getattr(f, "kinks", ())
    if method == "monte_carlo" and model.kind != "none":
        rng = np.random.default_rng(seed)
        draws = model.sample(rng, int(mc_draws))
        f_vals = f(draws)
        sq, der = f_vals ** 2, f.deriv(draws)
        root_n = math.sqrt(len(draws))
        ef2 = Expectation(float(sq.mean()), float(sq.std(ddof=1) / root_n), "monte_carlo")
        efp = Expectation(float(der.mean()), float(der.std(ddof=1) / root_n), "monte_carlo")
        ef = Expectation(float(f_vals.mean()), float(f_vals.std(ddof=1) / root_n), "monte_carlo")
    else:
        ef2 = expectation(model, lambda x: f(x) ** 2, points=kinks, method=method)
        efp = expectation(model, f.deriv, points=kinks, method=method)
        ef = expectation(model, f, points=kinks, method=method)
    if efp.value <= 0:
        raise NumericError(f"E[f'(n)] = {efp.value} is not positive")
    try:
        j = fisher_information(model)
    except CapabilityError:
        j = math.nan
    sv = (sup_variance(model, f, seed=seed) if with_sup_var else math.nan)
    stderr = {}
    if ef2.method == "monte_carlo":
        stderr = {"e_f_squared": ef2.stderr, "e_f_prime": efp.stderr, "e_f": ef.stderr}
    return NoiseFunctionals(
        e_f_squared=ef2.value,
        e_f_prime=efp.value,
        ratio=ef2.value / efp.value ** 2,
        fisher_info=j,
        sup_var=sv,
        e_f=ef.value,
        method=ef2.method,
        stderr=stderr,
    )
