"""Tweedie (1 < p < 2) generalised linear model with a log link, fitted by IRLS."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class EstimationError(ValueError):
    """The model cannot be estimated (bad inputs or rank-deficient design)."""

    def __init__(self, message, dependent_columns=()):
        super().__init__(message)
        self.dependent_columns = list(dependent_columns)


@dataclass(frozen=True)
class TweedieSpec:
    power: float = 1.5
    max_iterations: int = 100
    tolerance: float = 1e-8
    max_halvings: int = 20

    def __post_init__(self):
        if not 1.0 < self.power < 2.0:
            raise ValueError(f"Tweedie power must lie in (1, 2), got {self.power}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class FitResult:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    z_statistics: np.ndarray
    p_values: np.ndarray
    dispersion: float
    deviance: float
    iterations_used: int
    converged: bool
    residuals: np.ndarray
    fitted: np.ndarray
    deviance_history: list[float] = field(default_factory=list)
    column_names: list[str] | None = None
    power: float = 1.5


def tweedie_unit_deviance(y, mu, p: float = 1.5):
    """Unit deviance of the Tweedie family for ``1 < p < 2``.

    Works elementwise on arrays. The ``y**(2-p)`` term vanishes at ``y = 0``,
    leaving ``2 * mu**(2-p) / (2-p)``.
    """
    if not 1.0 < p < 2.0:
        raise ValueError(f"Tweedie power must lie in (1, 2), got {p}")
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0) or np.any(~np.isfinite(mu)):
        raise ValueError("mean must be strictly positive and finite")
    if np.any(y < 0):
        raise ValueError("response must be non-negative")
    a = 1.0 - p
    b = 2.0 - p
    ypow = np.where(y > 0, np.power(y, b, where=y > 0, out=np.zeros_like(y)), 0.0)
    d = 2.0 * (ypow / (a * b) - y * np.power(mu, a) / a + np.power(mu, b) / b)
    # rounding can leave tiny negatives near y == mu
    d = np.maximum(d, 0.0)
    return d if d.ndim else float(d)


def total_deviance(y, mu, p: float = 1.5) -> float:
    return float(math.fsum(np.atleast_1d(tweedie_unit_deviance(y, mu, p))))


def estimate_dispersion(y, mu, p: float, k: int) -> float:
    """Pearson estimate ``sum((y - mu)**2 / mu**p) / (n - k)``."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if y.shape != mu.shape:
        raise ValueError("y and mu must have the same length")
    n = y.size
    if n <= k:
        raise ValueError(f"need more observations than parameters (n={n}, k={k})")
    return float(math.fsum((y - mu) ** 2 / mu**p) / (n - k))


def dependent_columns(X: np.ndarray, rtol: float = 1e-10) -> list[int]:
    """Indices of columns that lie in the span of the columns before them."""
    X = np.asarray(X, dtype=float)
    scale = np.linalg.norm(X, axis=0)
    scale[scale == 0] = 1.0
    Xs = X / scale
    kept: list[int] = []
    dependent: list[int] = []
    for j in range(X.shape[1]):
        trial = Xs[:, kept + [j]]
        s = np.linalg.svd(trial, compute_uv=False)
        if s[-1] <= rtol * max(s[0], 1.0) * math.sqrt(X.shape[0]):
            dependent.append(j)
        else:
            kept.append(j)
    return dependent


def _weighted_solve(X, z, w):
    """Weighted least squares via QR of ``sqrt(w) * X``; returns (beta, R)."""
    sw = np.sqrt(w)
    Q, R = np.linalg.qr(X * sw[:, None])
    beta = np.linalg.solve(R, Q.T @ (z * sw))
    return beta, R


def _normal_two_sided(z: np.ndarray) -> np.ndarray:
    return np.array([math.erfc(abs(v) / math.sqrt(2.0)) for v in z])


def fit_tweedie_glm(
    X,
    y,
    spec: TweedieSpec | None = None,
    column_names: Sequence[str] | None = None,
) -> FitResult:
    """Fit ``log E[y] = X @ beta`` under Tweedie variance ``phi * mu**p``.

    Iteratively reweighted least squares with working weights
    ``mu**(2-p)`` and working response ``eta + (y - mu)/mu``, started from
    ``mu = (y + mean(y)) / 2``. A step that raises the deviance is halved
    back towards the previous iterate. Convergence is declared when the
    relative change in total deviance drops below ``spec.tolerance``.
    """
    spec = spec or TweedieSpec()
    p = spec.power
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise EstimationError(f"design {X.shape} and response {y.shape} do not conform")
    n, k = X.shape
    if n <= k:
        raise EstimationError(f"need n > k, got n={n}, k={k}")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise EstimationError("design and response must be finite")
    if np.any(y < 0):
        raise EstimationError("response must be non-negative")
    if not np.any(y > 0):
        raise EstimationError("response is identically zero")
    names = list(column_names) if column_names is not None else [f"x{j}" for j in range(k)]
    dep = dependent_columns(X)
    if dep:
        raise EstimationError(
            "design matrix is rank deficient; dependent columns: " + ", ".join(names[j] for j in dep),
            [names[j] for j in dep],
        )

    mu = (y + y.mean()) / 2.0
    eta = np.log(mu)
    w = mu ** (2.0 - p)
    beta, _ = _weighted_solve(X, eta + (y - mu) / mu, w)
    eta = X @ beta
    mu = np.exp(eta)
    dev = total_deviance(y, mu, p)
    history = [dev]
    converged = False
    it = 1
    while it < spec.max_iterations:
        it += 1
        w = mu ** (2.0 - p)
        z = eta + (y - mu) / mu
        proposal, _ = _weighted_solve(X, z, w)
        new_beta = proposal
        new_eta = X @ new_beta
        with np.errstate(over="ignore"):
            new_mu = np.exp(new_eta)
        new_dev = total_deviance(y, new_mu, p) if np.all(np.isfinite(new_mu)) and np.all(new_mu > 0) else math.inf
        halvings = 0
        while new_dev > dev and halvings < spec.max_halvings:
            halvings += 1
            new_beta = (beta + new_beta) / 2.0
            new_eta = X @ new_beta
            with np.errstate(over="ignore"):
                new_mu = np.exp(new_eta)
            new_dev = (
                total_deviance(y, new_mu, p) if np.all(np.isfinite(new_mu)) and np.all(new_mu > 0) else math.inf
            )
        if new_dev > dev:
            # no improving step along this direction: stay put
            break
        change = abs(dev - new_dev) / (abs(new_dev) + 0.1)
        beta, eta, mu, dev = new_beta, new_eta, new_mu, new_dev
        history.append(dev)
        if change < spec.tolerance:
            converged = True
            break

    w = mu ** (2.0 - p)
    _, R = _weighted_solve(X, eta, w)
    Rinv = np.linalg.solve(R, np.eye(k))
    unscaled_cov = Rinv @ Rinv.T
    phi = estimate_dispersion(y, mu, p, k)
    se = np.sqrt(np.diag(unscaled_cov) * phi)
    with np.errstate(divide="ignore", invalid="ignore"):
        zstat = beta / se
    return FitResult(
        coefficients=beta,
        standard_errors=se,
        z_statistics=zstat,
        p_values=_normal_two_sided(zstat),
        dispersion=phi,
        deviance=dev,
        iterations_used=it,
        converged=converged,
        residuals=y - mu,
        fitted=mu,
        deviance_history=history,
        column_names=names,
        power=p,
    )


# --------------------------------------------------------------------------
# inference table


def stars(p_value: float) -> str:
    if p_value < 0.001:
        return "***"
    if p_value < 0.01:
        return "**"
    if p_value < 0.05:
        return "*"
    return ""


WALD_HEADER = ["term", "estimate", "std_error", "z", "p_value", "stars"]


def wald_table(fit: FitResult, column_names: Sequence[str] | None = None) -> list[list[str]]:
    """Rows of ``term, estimate, std_error, z, p_value, stars`` as formatted strings."""
    if not fit.converged:
        raise EstimationError("Wald table requested for a fit that did not converge")
    names = list(column_names) if column_names is not None else fit.column_names
    if names is None or len(names) != len(fit.coefficients):
        raise ValueError("one column name per coefficient is required")
    rows = []
    for name, b, se, z, pv in zip(names, fit.coefficients, fit.standard_errors, fit.z_statistics, fit.p_values):
        rows.append([name, f"{b:.10g}", f"{se:.10g}", f"{z:.10g}", f"{pv:.10g}", stars(pv)])
    return rows
