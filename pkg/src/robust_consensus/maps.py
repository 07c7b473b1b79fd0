"""Transmit maps ``h`` and receive maps ``f`` with closed-form derivatives.

The map kinds form a closed set so that derivatives are exact.  ``SmoothedMap``
gives the noise-averaged receive map ``g(x) = E_n[f(x + n)]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .exceptions import CapabilityError, ParameterError
from .noise import DEFAULT_MC_DRAWS, NoiseModel, expectation

__all__ = ["ReceiveMap", "TransmitMap", "SmoothedMap", "db_to_power"]


def db_to_power(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _scalar(out):
    return out[()] if isinstance(out, np.ndarray) and out.ndim == 0 else out


RECEIVE_KINDS = ("identity", "tanh", "rational", "atan")
_RECEIVE_ALIASES = {"tanh_scaled": "tanh", "scaled_atan": "atan", "linear": "identity"}


@dataclass(frozen=True)
class ReceiveMap:
    """Receive nonlinearity ``f(x) = amplitude * base(slope * x)``.

    ``base`` is ``x`` (identity), ``tanh``, ``x / (1 + |x|)`` (rational) or ``atan``.
    All non-identity kinds are odd, strictly increasing and bounded.
    """

    kind: str = "tanh"
    slope: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        kind = _RECEIVE_ALIASES.get(self.kind, self.kind)
        if kind not in RECEIVE_KINDS:
            raise ParameterError(f"unknown receive map {self.kind!r}; choose from {RECEIVE_KINDS}")
        object.__setattr__(self, "kind", kind)
        if not (self.slope > 0 and self.amplitude > 0):
            raise ParameterError("receive map slope and amplitude must be positive")

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def tanh(cls, s=1.0):
        return cls("tanh", float(s))

    @classmethod
    def rational(cls, s=1.0):
        return cls("rational", float(s))

    @classmethod
    def atan(cls, amplitude=1.0, s=1.0):
        return cls("atan", float(s), float(amplitude))

    @classmethod
    def from_spec(cls, spec: dict) -> "ReceiveMap":
        spec = dict(spec)
        spec.update(spec.pop("params", {}))
        kind = spec.pop("kind", "tanh")
        slope = spec.pop("s", spec.pop("slope", 1.0))
        amp = spec.pop("A", spec.pop("amplitude", 1.0))
        if spec:
            raise ParameterError(f"unexpected receive-map parameters {sorted(spec)}")
        return cls(kind, float(slope), float(amp))

    def to_spec(self) -> dict:
        return {"kind": self.kind, "s": self.slope, "A": self.amplitude}

    def scaled(self, kappa: float) -> "ReceiveMap":
        return ReceiveMap(self.kind, self.slope, self.amplitude * kappa)

    def __call__(self, x):
        z = self.slope * np.asarray(x, dtype=float)
        if self.kind == "identity":
            out = z
        elif self.kind == "tanh":
            out = np.tanh(z)
        elif self.kind == "rational":
            out = z / (1.0 + np.abs(z))
        else:
            out = np.arctan(z)
        return _scalar(self.amplitude * out)

    def deriv(self, x):
        z = self.slope * np.asarray(x, dtype=float)
        if self.kind == "identity":
            out = np.ones_like(z)
        elif self.kind == "tanh":
            out = 1.0 / np.cosh(np.clip(z, -350.0, 350.0)) ** 2
        elif self.kind == "rational":
            out = 1.0 / (1.0 + np.abs(z)) ** 2
        else:
            out = 1.0 / (1.0 + z * z)
        return _scalar(self.amplitude * self.slope * out)

    @property
    def bound(self) -> float:
        """``sup |f|`` (infinite for the identity)."""
        if self.kind == "identity":
            return math.inf
        return self.amplitude * (math.pi / 2 if self.kind == "atan" else 1.0)

    @property
    def kinks(self) -> tuple:
        return (0.0,) if self.kind == "rational" else ()

    def formula(self) -> str:
        a = "" if self.amplitude == 1 else f"{self.amplitude:g}*"
        s = "" if self.slope == 1 else f"{self.slope:g}*"
        if self.kind == "identity":
            return f"f(x) = {a}{s}x"
        if self.kind == "tanh":
            return f"f(x) = {a}tanh({s}x)"
        if self.kind == "rational":
            return f"f(x) = {a}{s}x/(1+|{s}x|)"
        return f"f(x) = {a}atan({s}x)"


TRANSMIT_KINDS = ("identity", "atan", "tanh", "clip")
_TRANSMIT_ALIASES = {"scaled_atan": "atan", "tanh_scaled": "tanh", "linear_clip": "clip"}


@dataclass(frozen=True)
class TransmitMap:
    """Power-constraining transmit map ``h``.

    * ``identity``: ``h(x) = x``
    * ``atan``: ``sqrt(power) * (2/pi) * atan((pi/2) * slope * x)``
    * ``tanh``: ``sqrt(power) * tanh(slope * x)``
    * ``clip``: ``x`` clipped to ``[-sqrt(power), sqrt(power)]``; flat outside that
      range, so it is *not* strictly increasing and has ``h' = 0`` there.

    ``power`` is linear (use :func:`db_to_power` for dB values).
    """

    kind: str = "identity"
    power: float = 1.0
    slope: float = 1.0

    def __post_init__(self):
        kind = _TRANSMIT_ALIASES.get(self.kind, self.kind)
        if kind not in TRANSMIT_KINDS:
            raise ParameterError(f"unknown transmit map {self.kind!r}; choose from {TRANSMIT_KINDS}")
        object.__setattr__(self, "kind", kind)
        if not (self.power > 0 and self.slope > 0):
            raise ParameterError("transmit power and slope must be positive")

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def atan(cls, power, s=1.0):
        return cls("atan", float(power), float(s))

    @classmethod
    def tanh(cls, power, s=1.0):
        return cls("tanh", float(power), float(s))

    @classmethod
    def clip(cls, power):
        return cls("clip", float(power))

    @classmethod
    def from_spec(cls, spec: dict) -> "TransmitMap":
        spec = dict(spec)
        spec.update(spec.pop("params", {}))
        kind = spec.pop("kind", "identity")
        if "rho_db" in spec:
            power = db_to_power(float(spec.pop("rho_db")))
        else:
            power = float(spec.pop("rho", spec.pop("power", 1.0)))
        slope = float(spec.pop("s", spec.pop("slope", 1.0)))
        if spec:
            raise ParameterError(f"unexpected transmit-map parameters {sorted(spec)}")
        return cls(kind, power, slope)

    def to_spec(self) -> dict:
        if self.kind == "identity":
            return {"kind": "identity"}
        return {"kind": self.kind, "rho": self.power, "s": self.slope}

    @property
    def amplitude(self) -> float:
        return math.sqrt(self.power)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            out = x
        elif self.kind == "atan":
            out = self.amplitude * (2 / math.pi) * np.arctan((math.pi / 2) * self.slope * x)
        elif self.kind == "tanh":
            out = self.amplitude * np.tanh(self.slope * x)
        else:
            out = np.clip(x, -self.amplitude, self.amplitude)
        return _scalar(out)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            out = np.ones_like(x)
        elif self.kind == "atan":
            z = (math.pi / 2) * self.slope * x
            out = self.amplitude * self.slope / (1.0 + z * z)
        elif self.kind == "tanh":
            out = self.amplitude * self.slope / np.cosh(np.clip(self.slope * x, -350, 350)) ** 2
        else:
            out = (np.abs(x) < self.amplitude).astype(float)
        return _scalar(out)

    @property
    def peak_power(self) -> float:
        """``sup_x h(x)^2``."""
        return math.inf if self.kind == "identity" else self.power

    @property
    def deriv_bound(self) -> float:
        """``c`` with ``0 < h'(x) <= c``; attained at ``x = 0`` for the bounded kinds."""
        if self.kind in ("identity", "clip"):
            return 1.0
        return self.amplitude * self.slope

    @property
    def strictly_increasing(self) -> bool:
        return self.kind != "clip"

    def formula(self) -> str:
        if self.kind == "identity":
            return "h(x) = x"
        r = f"sqrt({self.power:g})"
        if self.kind == "atan":
            return f"h(x) = {r}*(2/pi)*atan((pi/2)*{self.slope:g}*x)"
        if self.kind == "tanh":
            return f"h(x) = {r}*tanh({self.slope:g}*x)"
        return f"h(x) = clip(x, -{r}, {r})"


@dataclass(frozen=True)
class SmoothedMap:
    """``g(x) = E_n[f(x + n)]`` for a receive map and a noise law.

    Quadrature is used when the noise has a closed density, Monte Carlo with
    ``mc_draws`` common draws otherwise.
    """

    f: ReceiveMap
    noise: NoiseModel
    mc_draws: int = DEFAULT_MC_DRAWS
    seed: int = 0

    @property
    def uses_quadrature(self) -> bool:
        return self.noise.has_density or self.noise.kind == "none"

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if self.noise.kind == "none":
            out = self.f(xs)
        elif self.uses_quadrature:
            out = np.array([
                expectation(self.noise, lambda n, x0=x0: self.f(x0 + n),
                            points=(-x0,)).value
                for x0 in xs
            ])
        else:
            rng = np.random.default_rng(self.seed)
            draws = self.noise.sample(rng, self.mc_draws)
            out = np.array([self.f(x0 + draws).mean() for x0 in xs])
        return out[0] if np.ndim(x) == 0 else out

    def stderr(self, x) -> float:
        """Monte Carlo standard error of ``g(x)`` (zero under quadrature)."""
        if self.uses_quadrature:
            return 0.0
        rng = np.random.default_rng(self.seed)
        draws = self.noise.sample(rng, self.mc_draws)
        v = self.f(float(x) + draws)
        return float(v.std(ddof=1) / math.sqrt(len(v)))

    def prime_zero(self) -> float:
        """``g'(0) = E_n[f'(n)]``."""
        return expectation(self.noise, self.f.deriv, points=self.f.kinks,
                           mc_draws=self.mc_draws, seed=self.seed).value

    def integral_check(self) -> float:
        """``g(0)`` evaluated directly (zero for odd ``f`` and symmetric noise)."""
        if not self.uses_quadrature:
            raise CapabilityError("integral_check needs a density")
        return float(integrate.quad(lambda n: self.f(n) * self.noise.density(n),
                                    -np.inf, np.inf, epsabs=1e-12)[0])
