"""Closed-form performance predictions for the recursion with ``alpha(t) = a/(t+1)``.

Notation: ``k = g'(0) h'(theta0)`` is the local contraction slope, ``lambda_i``
are the Laplacian eigenvalues with eigenvector basis ``U = [1/sqrt(N), Phi]``,
``D`` is the degree matrix and ``sigma_n^2 = (sum_i d_i / N^2) E[f^2(n)]``.

Two conventions for the limit covariance of ``sqrt(t) (X(t) - theta0 1)`` are
provided.

``validated`` (default)
    ``C = a^2 sigma_n^2 11^T + Phi S Phi^T`` with
    ``S_ij = a^2 Q_ij / (a k (lambda_i + lambda_j) - 1)`` and
    ``Q = E[f^2(n)] Phi^T D Phi``.  This is the Lyapunov solution of the
    linearised recursion and is the form that Monte Carlo ensembles reproduce.
    For regular graphs ``S`` is diagonal with
    ``S_ii = a^2 N sigma_n^2 / (2 a k lambda_i - 1)``.

``paper``
    ``C = a^2 sigma_n^2 11^T + N^-1 Phi diag(s) Phi^T`` with the same diagonal
    ``s_i = a^2 N sigma_n^2 / (2 a k lambda_i - 1)``.  Its disagreement block is
    ``N`` times smaller than the validated one.

The gain ``a* = (N+1) / (2 N lambda_2 k)`` and the norm
``||C*|| = (sum d_i / N^2) ((N+1)/(2N))^2 E[f^2]/E[f']^2 / (lambda_2 h'(theta0))^2``
are the classical optimisation results; :func:`validated_optimal_gain`
minimises the validated norm directly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .exceptions import NumericError, ParameterError, StabilityError
from .graphs import Graph, spectrum
from .noise import NoiseFunctionals

__all__ = [
    "AnalyticReport",
    "CovarianceResult",
    "FisherCheck",
    "GainResult",
    "MSEBound",
    "analyze",
    "asymptotic_covariance",
    "fisher_check",
    "mse_bound",
    "optimal_gain",
    "sigma_n_sq",
    "stability_margin",
    "validated_optimal_gain",
]

CONVENTIONS = ("validated", "paper")


def sigma_n_sq(graph: Graph, fn: NoiseFunctionals) -> float:
    """``(sum_i d_i / N^2) E[f^2(n)]``."""
    return float(graph.degrees.sum()) / graph.n ** 2 * fn.e_f_squared


def _slope(fn: NoiseFunctionals, h, theta0: float) -> float:
    k = fn.e_f_prime * float(h.deriv(theta0))
    if not (k > 0 and math.isfinite(k)):
        raise ParameterError(f"g'(0) h'(theta0) = {k} must be positive and finite")
    return k


def stability_margin(graph: Graph, fn: NoiseFunctionals, h, theta0: float, a: float) -> float:
    """``2 a g'(0) h'(theta0) lambda_2 - 1``; the limit covariance exists iff positive."""
    return 2.0 * a * _slope(fn, h, theta0) * spectrum(graph).lambda2 - 1.0


@dataclass(frozen=True)
class CovarianceResult:
    s_diag: np.ndarray
    s_matrix: np.ndarray
    c_rc: np.ndarray
    c_rc_norm: float
    stability_margin: float
    convention: str


def _covariance(graph, spec, e_f2, sig2, k, a, convention):
    lam = spec.eigenvalues[1:]
    phi = spec.phi
    n = graph.n
    denom = a * k * (lam[:, None] + lam[None, :]) - 1.0
    if convention == "validated":
        q = e_f2 * (phi.T * graph.degrees) @ phi
        s = a * a * q / denom
        s = 0.5 * (s + s.T)
        c = a * a * sig2 * np.ones((n, n)) + phi @ s @ phi.T
    else:
        s = np.diag(a * a * n * sig2 / np.diag(denom))
        c = a * a * sig2 * np.ones((n, n)) + (phi @ s @ phi.T) / n
    c = 0.5 * (c + c.T)
    return s, c


def asymptotic_covariance(graph: Graph, fn: NoiseFunctionals, h, theta0: float, a: float,
                          *, convention: str = "validated") -> CovarianceResult:
    """Limit covariance of ``sqrt(t) (X(t) - theta0 1)`` and its spectral norm.

    Raises :class:`StabilityError` unless ``2 a k lambda_2 > 1``.
    """
    if convention not in CONVENTIONS:
        raise ParameterError(f"convention must be one of {CONVENTIONS}")
    if not a > 0:
        raise ParameterError(f"gain a must be positive, got {a}")
    k = _slope(fn, h, theta0)
    spec = spectrum(graph)
    margin = 2.0 * a * k * spec.lambda2 - 1.0
    if margin <= 0:
        raise StabilityError(margin)
    s, c = _covariance(graph, spec, fn.e_f_squared, sigma_n_sq(graph, fn), k, a, convention)
    norm = float(np.linalg.eigvalsh(c)[-1])
    if not math.isfinite(norm):
        raise NumericError("non-finite covariance norm")
    return CovarianceResult(np.diag(s).copy(), s, c, norm, margin, convention)


@dataclass(frozen=True)
class GainResult:
    a_star: float
    c_star_norm: float


def optimal_gain(graph: Graph, fn: NoiseFunctionals, h, theta0: float) -> GainResult:
    """``a* = (N+1)/(2 N lambda_2 k)`` with the matching closed-form norm."""
    k = _slope(fn, h, theta0)
    n = graph.n
    lam2 = spectrum(graph).lambda2
    a_star = (n + 1) / (2.0 * n * lam2 * k)
    hp = float(h.deriv(theta0))
    c_star = (graph.degrees.sum() / n ** 2 * ((n + 1) / (2.0 * n)) ** 2
              * fn.ratio / (lam2 * hp) ** 2)
    return GainResult(float(a_star), float(c_star))


def validated_optimal_gain(graph: Graph, fn: NoiseFunctionals, h, theta0: float,
                           *, upper: float = 50.0) -> GainResult:
    """Gain minimising the spectral norm of the validated covariance.

    Searches ``a`` in ``(1/(2 k lambda_2), upper/(2 k lambda_2)]``.  For regular
    graphs the minimiser is ``1/(k lambda_2)`` with norm ``N sigma_n^2/(k lambda_2)^2``.
    """
    k = _slope(fn, h, theta0)
    spec = spectrum(graph)
    sig2 = sigma_n_sq(graph, fn)
    a_min = 1.0 / (2.0 * k * spec.lambda2)

    def norm_at(log_a):
        a = math.exp(log_a)
        _, c = _covariance(graph, spec, fn.e_f_squared, sig2, k, a, "validated")
        return float(np.linalg.eigvalsh(c)[-1])

    lo = math.log(a_min) + 1e-9
    hi = math.log(a_min * upper)
    # coarse scan first so the bounded search starts in the right basin
    grid = np.linspace(lo, hi, 121)
    vals = [norm_at(v) for v in grid]
    i = int(np.argmin(vals))
    left, right = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(norm_at, bounds=(left, right), method="bounded",
                                   options={"xatol": 1e-12})
    best = min((res.fun, res.x), (vals[i], grid[i]))
    return GainResult(float(math.exp(best[1])), float(best[0]))


@dataclass(frozen=True)
class MSEBound:
    varrho: float
    mse_bound: float


def mse_bound(graph: Graph, fn: NoiseFunctionals, a: float) -> MSEBound:
    """``varrho = N d_max sigma^2`` and ``varrho N^-2 a^2 pi^2 / 6``.

    ``a`` may be a number or anything with an ``a`` attribute (a schedule).
    """
    a = float(getattr(a, "a", a))
    if not math.isfinite(fn.sup_var):
        raise NumericError("sup_x var[f(x+n)] is not available")
    n = graph.n
    varrho = n * graph.d_max * fn.sup_var
    return MSEBound(float(varrho), float(varrho / n ** 2 * a * a * math.pi ** 2 / 6.0))


@dataclass(frozen=True)
class FisherCheck:
    ratio: float
    one_over_j: float
    satisfied: bool


def fisher_check(fn: NoiseFunctionals, tol: float = 1e-6) -> FisherCheck:
    """Whether ``E[f^2]/E[f']^2 >= 1/J`` holds (up to ``tol``)."""
    if math.isnan(fn.fisher_info):
        raise ParameterError("Fisher information is not available for this noise")
    inv = fn.one_over_j
    return FisherCheck(fn.ratio, inv, bool(fn.ratio >= inv - tol))


@dataclass
class AnalyticReport:
    """Every closed-form quantity for one configuration.

    Covariance fields are ``None`` when the gain violates the stability condition
    and the report was built with ``strict=False``.
    """

    n: int
    lambda2: float
    theta0: float
    a: float
    g_prime_zero: float
    h_prime: float
    e_f_squared: float
    sigma_n_sq: float
    stability_margin: float
    s_diag: np.ndarray | None
    c_rc: np.ndarray | None
    c_rc_norm: float | None
    a_star: float
    c_star_norm: float
    a_star_validated: float
    c_star_norm_validated: float
    varrho: float
    mse_bound: float
    fisher_ratio: float
    one_over_j: float
    fisher_satisfied: bool | None
    convention: str

    @property
    def stable(self) -> bool:
        return self.stability_margin > 0

    def to_dict(self) -> dict:
        out = {}
        for key, val in asdict(self).items():
            if isinstance(val, np.ndarray):
                val = val.tolist()
            elif isinstance(val, float) and not math.isfinite(val):
                val = None if math.isnan(val) else ("inf" if val > 0 else "-inf")
            out[key] = val
        return out


def analyze(graph: Graph, fn: NoiseFunctionals, h, theta0: float, a: float, *,
            convention: str = "validated", strict: bool = True) -> AnalyticReport:
    """Assemble an :class:`AnalyticReport`; raises on instability when ``strict``."""
    spec = spectrum(graph)
    k = _slope(fn, h, theta0)
    margin = 2.0 * a * k * spec.lambda2 - 1.0
    if margin <= 0 and strict:
        raise StabilityError(margin)
    cov = (asymptotic_covariance(graph, fn, h, theta0, a, convention=convention)
           if margin > 0 else None)
    paper = optimal_gain(graph, fn, h, theta0)
    val = validated_optimal_gain(graph, fn, h, theta0)
    mse = (mse_bound(graph, fn, a) if math.isfinite(fn.sup_var)
           else MSEBound(math.nan, math.nan))
    fisher = fisher_check(fn) if not math.isnan(fn.fisher_info) else None
    return AnalyticReport(
        n=graph.n,
        lambda2=spec.lambda2,
        theta0=float(theta0),
        a=float(a),
        g_prime_zero=fn.e_f_prime,
        h_prime=float(h.deriv(theta0)),
        e_f_squared=fn.e_f_squared,
        sigma_n_sq=sigma_n_sq(graph, fn),
        stability_margin=float(margin),
        s_diag=None if cov is None else cov.s_diag,
        c_rc=None if cov is None else cov.c_rc,
        c_rc_norm=None if cov is None else cov.c_rc_norm,
        a_star=paper.a_star,
        c_star_norm=paper.c_star_norm,
        a_star_validated=val.a_star,
        c_star_norm_validated=val.c_star_norm,
        varrho=mse.varrho,
        mse_bound=mse.mse_bound,
        fisher_ratio=fn.ratio,
        one_over_j=fn.one_over_j if not math.isnan(fn.fisher_info) else math.nan,
        fisher_satisfied=None if fisher is None else fisher.satisfied,
        convention=convention,
    )
