"""Numba-jitted fitting kernels: the hot path of every candidate scan.

Loop-heavy twins of ``_kernels_numpy`` — same initialization, update order
and guards, so the two backends agree to float precision. Compiled lazily
on first call; ``cache=True`` persists the machine code across processes.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

ETA_LIMIT = 30.0


@njit(cache=True)
def _binomial_m2ll(eta, y):
    total = 0.0
    for i in range(eta.shape[0]):
        e = eta[i]
        if e > 0.0:
            softplus = e + math.log1p(math.exp(-e))
        else:
            softplus = math.log1p(math.exp(e))
        total += softplus - y[i] * e
    return 2.0 * total


@njit(cache=True)
def binomial_irls(X, y, max_iter, tol):
    n, m = X.shape
    eta = np.empty(n)
    for i in range(n):
        mu = (y[i] + 0.5) / 2.0
        eta[i] = math.log(mu / (1.0 - mu))
    beta = np.zeros(m)
    w = np.empty(n)
    wz = np.empty(n)
    dev = np.inf
    status = 1
    iters = 0
    for _ in range(max_iter):
        iters += 1
        for i in range(n):
            p = 1.0 / (1.0 + math.exp(-eta[i]))
            wi = p * (1.0 - p)
            w[i] = wi
            wz[i] = wi * eta[i] + (y[i] - p)
        xw = X * w.reshape(n, 1)
        beta = np.linalg.solve(X.T @ xw, X.T @ wz)
        eta = X @ beta
        big = False
        for i in range(n):
            if abs(eta[i]) > ETA_LIMIT:
                big = True
                eta[i] = ETA_LIMIT if eta[i] > 0.0 else -ETA_LIMIT
        if big:
            status = 2
            dev = _binomial_m2ll(eta, y)
            break
        dev_new = _binomial_m2ll(eta, y)
        if abs(dev_new - dev) <= tol * (abs(dev_new) + 1.0):
            dev = dev_new
            status = 0
            break
        dev = dev_new
    for i in range(n):
        p = 1.0 / (1.0 + math.exp(-eta[i]))
        w[i] = p * (1.0 - p)
    cov = np.linalg.inv(X.T @ (X * w.reshape(n, 1)))
    return beta, cov, dev, status, iters


@njit(cache=True)
def poisson_irls(X, y, max_iter, tol):
    n, m = X.shape
    const = 0.0
    for i in range(n):
        const += math.lgamma(y[i] + 1.0)
    eta = np.empty(n)
    for i in range(n):
        eta[i] = math.log(y[i] + 0.5)
    beta = np.zeros(m)
    w = np.empty(n)
    wz = np.empty(n)
    dev = np.inf
    status = 1
    iters = 0
    for _ in range(max_iter):
        iters += 1
        for i in range(n):
            mu = math.exp(eta[i])
            w[i] = mu
            wz[i] = mu * eta[i] + (y[i] - mu)
        xw = X * w.reshape(n, 1)
        beta = np.linalg.solve(X.T @ xw, X.T @ wz)
        eta = X @ beta
        big = False
        for i in range(n):
            if abs(eta[i]) > ETA_LIMIT:
                big = True
                eta[i] = ETA_LIMIT if eta[i] > 0.0 else -ETA_LIMIT
        if big:
            status = 2
        total = 0.0
        for i in range(n):
            total += math.exp(eta[i]) - y[i] * eta[i]
        dev_new = 2.0 * (total + const)
        if big:
            dev = dev_new
            break
        if abs(dev_new - dev) <= tol * (abs(dev_new) + 1.0):
            dev = dev_new
            status = 0
            break
        dev = dev_new
    for i in range(n):
        w[i] = math.exp(eta[i])
    cov = np.linalg.inv(X.T @ (X * w.reshape(n, 1)))
    return beta, cov, dev, status, iters


@njit(cache=True)
def gaussian_ls(X, y):
    xtx = X.T @ X
    beta = np.linalg.solve(xtx, X.T @ y)
    resid = y - X @ beta
    rss = 0.0
    for i in range(resid.shape[0]):
        rss += resid[i] * resid[i]
    return beta, np.linalg.inv(xtx), rss
