"""Pure-numpy reference implementations of the fitting kernels.

Must stay semantically identical to ``_kernels_numba``: same initialization,
same update order, same guards, so both backends agree to float precision.

Status codes: 0 converged, 1 max iterations, 2 diverged (linear predictor
ran past ETA_LIMIT, e.g. binomial separation).
"""

from __future__ import annotations

import math

import numpy as np

ETA_LIMIT = 30.0


def _binomial_m2ll(eta: np.ndarray, y: np.ndarray) -> float:
    # 2 * sum(log(1 + exp(eta)) - y * eta), stable for large |eta|
    softplus = np.where(eta > 0.0, eta + np.log1p(np.exp(-np.abs(eta))), np.log1p(np.exp(eta)))
    return 2.0 * float(np.sum(softplus - y * eta))


def _log_y_factorial(y: np.ndarray) -> float:
    return sum(math.lgamma(v + 1.0) for v in y)


def binomial_irls(X: np.ndarray, y: np.ndarray, max_iter: int, tol: float):
    n, m = X.shape
    mu = (y + 0.5) / 2.0
    eta = np.log(mu / (1.0 - mu))
    beta = np.zeros(m)
    dev = np.inf
    status = 1
    iters = 0
    for _ in range(max_iter):
        iters += 1
        p = 1.0 / (1.0 + np.exp(-eta))
        w = p * (1.0 - p)
        wz = w * eta + (y - p)
        xw = X * w[:, None]
        beta = np.linalg.solve(X.T @ xw, X.T @ wz)
        eta = X @ beta
        if np.max(np.abs(eta)) > ETA_LIMIT:
            status = 2
            dev = _binomial_m2ll(np.clip(eta, -ETA_LIMIT, ETA_LIMIT), y)
            break
        dev_new = _binomial_m2ll(eta, y)
        if abs(dev_new - dev) <= tol * (abs(dev_new) + 1.0):
            dev = dev_new
            status = 0
            break
        dev = dev_new
    p = 1.0 / (1.0 + np.exp(-np.clip(eta, -ETA_LIMIT, ETA_LIMIT)))
    w = p * (1.0 - p)
    cov = np.linalg.inv(X.T @ (X * w[:, None]))
    return beta, cov, dev, status, iters


def poisson_irls(X: np.ndarray, y: np.ndarray, max_iter: int, tol: float):
    n, m = X.shape
    const = _log_y_factorial(y)  # fixed across iterations
    eta = np.log(y + 0.5)
    beta = np.zeros(m)
    dev = np.inf
    status = 1
    iters = 0
    for _ in range(max_iter):
        iters += 1
        mu = np.exp(eta)
        wz = mu * eta + (y - mu)
        xw = X * mu[:, None]
        beta = np.linalg.solve(X.T @ xw, X.T @ wz)
        eta = X @ beta
        if np.max(np.abs(eta)) > ETA_LIMIT:
            status = 2
            eta_c = np.clip(eta, -ETA_LIMIT, ETA_LIMIT)
            dev = 2.0 * (float(np.sum(np.exp(eta_c) - y * eta_c)) + const)
            break
        dev_new = 2.0 * (float(np.sum(np.exp(eta) - y * eta)) + const)
        if abs(dev_new - dev) <= tol * (abs(dev_new) + 1.0):
            dev = dev_new
            status = 0
            break
        dev = dev_new
    mu = np.exp(np.clip(eta, -ETA_LIMIT, ETA_LIMIT))
    cov = np.linalg.inv(X.T @ (X * mu[:, None]))
    return beta, cov, dev, status, iters


def gaussian_ls(X: np.ndarray, y: np.ndarray):
    xtx = X.T @ X
    beta = np.linalg.solve(xtx, X.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    return beta, np.linalg.inv(xtx), rss
