"""Generalized linear model fitting and the stepwise penalty machinery.

Three families with fixed canonical links: gaussian/identity,
binomial/logit, poisson/log. Fitting is iteratively reweighted least
squares via the backend kernels; -2logLik is the objective the stepwise
layer minimizes, with AIC / BIC / Bonferroni penalties per parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import DataValidationError, RankDeficiencyError

__all__ = [
    "Family",
    "FitSummary",
    "StoppingCriterion",
    "fit_glm",
    "normal_quantile",
    "chi2_quantile_df1",
    "chi2_sf_df1",
    "penalty_per_parameter",
    "penalized_objective",
    "linear_predictor",
    "predict_mean",
    "minus2loglik_at",
]

LOG_2PI = math.log(2.0 * math.pi)


class Family(str, Enum):
    GAUSSIAN = "gaussian"
    BINOMIAL = "binomial"
    POISSON = "poisson"

    @property
    def link(self) -> str:
        return {"gaussian": "identity", "binomial": "logit", "poisson": "log"}[self.value]


@dataclass(frozen=True)
class StoppingCriterion:
    """Penalty rule: aic, bic, bonferroni (needs alpha) or fixed_steps."""

    kind: str
    alpha: float = 0.05
    max_steps: int | None = None

    def __post_init__(self):
        if self.kind not in ("aic", "bic", "bonferroni", "fixed_steps"):
            raise DataValidationError(f"unknown stopping criterion {self.kind!r}")
        if not 0.0 < self.alpha < 1.0:
            raise DataValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.kind == "fixed_steps":
            if self.max_steps is None or self.max_steps < 0:
                raise DataValidationError("fixed_steps criterion needs max_steps >= 0")


@dataclass(frozen=True)
class FitSummary:
    """One fitted GLM: coefficients with Wald inference and -2logLik."""

    coefficients: np.ndarray
    std_errors: np.ndarray
    p_values: np.ndarray
    minus2loglik: float
    n: int
    m: int
    family: Family
    converged: bool
    term_labels: tuple[str, ...]
    dispersion: float = 1.0  # gaussian ML sigma^2; 1 otherwise
    n_iter: int = 0
    warning: str | None = None

    def coefficient_for(self, label: str) -> float:
        return float(self.coefficients[self.term_labels.index(label)])


# --- special functions -----------------------------------------------------
#
# Wichura's AS 241 (PPND16) rational approximation to the standard normal
# quantile; absolute error below 1e-15 over (0, 1).

_A = (
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_B = (
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_D = (
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_F = (
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _ratpoly(r: float, num: tuple, den: tuple) -> float:
    p = num[-1]
    for c in reversed(num[:-1]):
        p = p * r + c
    q = den[-1]
    for c in reversed(den[:-1]):
        q = q * r + c
    return p / q


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF."""
    if not 0.0 < p < 1.0:
        raise DataValidationError(f"quantile argument must lie in (0, 1), got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _ratpoly(r, _A, _B)
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        val = _ratpoly(r - 1.6, _C, _D)
    else:
        val = _ratpoly(r - 5.0, _E, _F)
    return -val if q < 0.0 else val


def chi2_quantile_df1(tail: float) -> float:
    """Value exceeded with probability ``tail`` by a chi-squared(1) variable."""
    if not 0.0 < tail < 1.0:
        raise DataValidationError(f"tail area must lie in (0, 1), got {tail}")
    return normal_quantile(1.0 - tail / 2.0) ** 2


def chi2_sf_df1(q: float) -> float:
    """Upper-tail probability of a chi-squared(1) variable at q."""
    if q < 0.0:
        return 1.0
    return math.erfc(math.sqrt(q / 2.0))


# --- fitting ----------------------------------------------------------------


def _dependent_columns(x: np.ndarray) -> list[int]:
    cols = []
    rank = 0
    for i in range(x.shape[1]):
        new_rank = int(np.linalg.matrix_rank(x[:, : i + 1]))
        if new_rank == rank:
            cols.append(i)
        rank = new_rank
    return cols


def _check_response(y: np.ndarray, family: Family) -> None:
    if not np.all(np.isfinite(y)):
        raise DataValidationError("response contains non-finite values")
    if family is Family.BINOMIAL:
        if not np.all((y == 0.0) | (y == 1.0)):
            bad = y[(y != 0.0) & (y != 1.0)][0]
            raise DataValidationError(f"binomial response not in {{0,1}}: found {bad!r}")
    elif family is Family.POISSON:
        if np.any(y < 0) or np.any(y != np.floor(y)):
            bad = y[(y < 0) | (y != np.floor(y))][0]
            raise DataValidationError(f"poisson response must be a nonnegative integer: found {bad!r}")


def fit_glm(
    X: np.ndarray,
    y: np.ndarray,
    family: Family,
    term_labels: tuple[str, ...] | None = None,
    max_iter: int = 50,
    tol: float = 1e-8,
) -> FitSummary:
    """Fit a GLM by IRLS; X must already contain the intercept column.

    Standard errors come from the inverse Fisher information at the final
    iterate; p-values are two-sided Wald tests against chi-squared(1).
    Non-convergence (including binomial separation) is reported through
    ``converged`` rather than raised.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise DataValidationError(f"design matrix must be 2-D, got shape {X.shape}")
    n, m = X.shape
    if y.shape != (n,):
        raise DataValidationError(f"response length {y.shape} does not match {n} rows")
    if not np.all(np.isfinite(X)):
        raise DataValidationError("design matrix contains non-finite values")
    if n < m:
        raise DataValidationError(f"need at least as many samples ({n}) as parameters ({m})")
    _check_response(y, family)
    labels = tuple(term_labels) if term_labels is not None else tuple(
        "intercept" if i == 0 else f"x{i}" for i in range(m)
    )
    if len(labels) != m:
        raise DataValidationError(f"{len(labels)} labels for {m} columns")
    if np.linalg.matrix_rank(X) < m:
        dependent = [labels[i] for i in _dependent_columns(X)]
        raise RankDeficiencyError(dependent)

    warning = None
    if family is Family.GAUSSIAN:
        beta, xtx_inv, rss = kernels.gaussian_ls(X, y)
        sigma2_ml = max(rss / n, 1e-290)  # guard log(0) on saturated fits
        m2ll = n * math.log(2.0 * math.pi * sigma2_ml) + n
        s2 = rss / (n - m) if n > m else float("nan")
        cov = s2 * xtx_inv
        converged, n_iter, dispersion = True, 1, sigma2_ml
    else:
        irls = kernels.binomial_irls if family is Family.BINOMIAL else kernels.poisson_irls
        try:
            beta, cov, m2ll, status, n_iter = irls(X, y, max_iter, tol)
        except np.linalg.LinAlgError:
            beta = np.full(m, np.nan)
            cov = np.full((m, m), np.nan)
            m2ll, status, n_iter = float("inf"), kernels.STATUS_DIVERGED, 0
        converged = status == kernels.STATUS_CONVERGED
        dispersion = 1.0
        if status == kernels.STATUS_DIVERGED and family is Family.BINOMIAL:
            warning = "possible complete separation: linear predictor diverged"
        elif status == kernels.STATUS_DIVERGED:
            warning = "linear predictor diverged"
        elif status == kernels.STATUS_MAX_ITER:
            warning = f"IRLS did not converge in {max_iter} iterations"

    with np.errstate(invalid="ignore"):
        se = np.sqrt(np.diag(cov))
    p_values = np.array([chi2_sf_df1((b / s) ** 2) if s > 0 and np.isfinite(s) else float("nan") for b, s in zip(beta, se)])
    return FitSummary(
        coefficients=beta,
        std_errors=se,
        p_values=p_values,
        minus2loglik=float(m2ll),
        n=n,
        m=m,
        family=family,
        converged=converged,
        term_labels=labels,
        dispersion=float(dispersion),
        n_iter=int(n_iter),
        warning=warning,
    )


# --- prediction and out-of-sample likelihood --------------------------------


def linear_predictor(X: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    return np.asarray(X, dtype=np.float64) @ np.asarray(coefficients, dtype=np.float64)


def predict_mean(X: np.ndarray, coefficients: np.ndarray, family: Family) -> np.ndarray:
    eta = linear_predictor(X, coefficients)
    if family is Family.GAUSSIAN:
        return eta
    if family is Family.BINOMIAL:
        return 1.0 / (1.0 + np.exp(-eta))
    return np.exp(eta)


def minus2loglik_at(
    X: np.ndarray,
    y: np.ndarray,
    coefficients: np.ndarray,
    family: Family,
    dispersion: float = 1.0,
) -> float:
    """-2 log likelihood of (X, y) under fixed coefficients.

    For the gaussian family the variance is taken as given (use the
    training fit's ML dispersion when scoring a holdout set).
    """
    y = np.asarray(y, dtype=np.float64)
    eta = linear_predictor(X, coefficients)
    n = len(y)
    if family is Family.GAUSSIAN:
        rss = float(np.sum((y - eta) ** 2))
        return n * math.log(2.0 * math.pi * dispersion) + rss / dispersion
    if family is Family.BINOMIAL:
        softplus = np.where(eta > 0.0, eta + np.log1p(np.exp(-np.abs(eta))), np.log1p(np.exp(eta)))
        return 2.0 * float(np.sum(softplus - y * eta))
    const = sum(math.lgamma(v + 1.0) for v in y)
    return 2.0 * (float(np.sum(np.exp(eta) - y * eta)) + const)


# --- penalties ---------------------------------------------------------------


def penalty_per_parameter(criterion: StoppingCriterion, n: int, n_tests: int) -> float:
    """Penalty added to -2logLik per estimated parameter."""
    if n < 1:
        raise DataValidationError(f"sample count must be >= 1, got {n}")
    if n_tests < 1:
        raise DataValidationError(f"number of simultaneous tests must be >= 1, got {n_tests}")
    if criterion.kind == "aic":
        return 2.0
    if criterion.kind == "bic":
        return math.log(n)
    if criterion.kind == "bonferroni":
        return chi2_quantile_df1(criterion.alpha / n_tests)
    return 0.0


def penalized_objective(fit: FitSummary, criterion: StoppingCriterion, n_tests: int) -> float:
    return fit.minus2loglik + penalty_per_parameter(criterion, fit.n, n_tests) * fit.m
