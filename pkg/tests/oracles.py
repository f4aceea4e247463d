"""Independent oracles the tests check the implementation against.

Nothing here may call into lrselect's fitting or eligibility code: fits go
through explicit likelihood maximization (Newton / least squares), rank
questions through hand-rolled Gaussian elimination, and eligibility through
linear-algebra definitions on the stacked log-contrast vectors.
"""

from __future__ import annotations

import numpy as np


def newton_binomial(X, y, iters=200, tol=1e-12):
    """Newton-Raphson on the explicit Bernoulli log-likelihood."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.zeros(X.shape[1])
    for _ in range(iters):
        eta = X @ beta
        p = 1.0 / (1.0 + np.exp(-eta))
        grad = X.T @ (y - p)
        hess = (X * (p * (1.0 - p))[:, None]).T @ X
        delta = np.linalg.solve(hess, grad)
        beta = beta + delta
        if np.max(np.abs(delta)) < tol:
            break
    eta = X @ beta
    m2ll = 2.0 * float(np.sum(np.logaddexp(0.0, eta) - y * eta))
    return beta, m2ll


def newton_poisson(X, y, iters=200, tol=1e-12):
    """Newton-Raphson on the explicit Poisson log-likelihood (with log y! term)."""
    import math

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.zeros(X.shape[1])
    beta[0] = np.log(np.mean(y) + 0.5)
    for _ in range(iters):
        eta = X @ beta
        mu = np.exp(eta)
        grad = X.T @ (y - mu)
        hess = (X * mu[:, None]).T @ X
        delta = np.linalg.solve(hess, grad)
        beta = beta + delta
        if np.max(np.abs(delta)) < tol:
            break
    eta = X @ beta
    const = sum(math.lgamma(v + 1.0) for v in y)
    m2ll = 2.0 * (float(np.sum(np.exp(eta) - y * eta)) + const)
    return beta, m2ll


def least_squares_m2ll(X, y):
    """OLS fit and the gaussian ML -2logLik."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    rss = float(np.sum((y - X @ beta) ** 2))
    n = len(y)
    return beta, n * np.log(2.0 * np.pi * rss / n) + n


def gaussian_elimination_rank(mat, tol=1e-9):
    """Row-echelon rank, written out by hand."""
    a = [list(map(float, row)) for row in mat]
    if not a:
        return 0
    rows, cols = len(a), len(a[0])
    rank = 0
    for c in range(cols):
        pivot = None
        for r in range(rank, rows):
            if abs(a[r][c]) > tol:
                pivot = r
                break
        if pivot is None:
            continue
        a[rank], a[pivot] = a[pivot], a[rank]
        pv = a[rank][c]
        for r in range(rows):
            if r != rank and abs(a[r][c]) > tol:
                f = a[r][c] / pv
                for cc in range(cols):
                    a[r][cc] -= f * a[rank][cc]
        rank += 1
    return rank


def contrast_vector(term, j):
    v = [0.0] * j
    v[term.num] = 1.0
    v[term.den] = -1.0
    return v


def is_dependent(selected, candidate, j):
    """Candidate contrast linearly dependent on the selected contrasts?"""
    base = [contrast_vector(t, j) for t in selected]
    with_candidate = base + [contrast_vector(candidate, j)]
    return gaussian_elimination_rank(with_candidate) == gaussian_elimination_rank(base)


def oracle_eligible(method, j, current, alr_den):
    """Eligibility from first principles, independent of union-find.

    method 1: contrast vector must be independent of the current ones.
    method 2: no shared part. method 3: any pair before the denominator is
    fixed, afterwards (new part, denominator).
    """
    from lrselect.composition import LogratioTerm

    pairs = [LogratioTerm(a, b) for a in range(j) for b in range(a + 1, j)]
    used = {p for t in current for p in (t.num, t.den)}
    if method == 1:
        return [t for t in pairs if not is_dependent(current, t, j)]
    if method == 2:
        return [t for t in pairs if not ({t.num, t.den} & used)]
    if alr_den is None and not current:
        return pairs
    return [
        LogratioTerm(p, alr_den)
        for p in range(j)
        if p != alr_den and p not in used
    ]


def oracle_best_step(bundle, method, current, alr_den):
    """Exhaustively refit every eligible candidate; return (term, best -2logLik)."""
    from lrselect.glm import Family

    logx = np.log(bundle.composition.samples)
    n = bundle.n
    best = None
    for t in oracle_eligible(method, bundle.j, current, alr_den):
        cols = [np.ones(n)]
        cols += [logx[:, u.num] - logx[:, u.den] for u in list(current) + [t]]
        X = np.column_stack(cols)
        if bundle.family is Family.BINOMIAL:
            _, m2ll = newton_binomial(X, bundle.response)
        elif bundle.family is Family.GAUSSIAN:
            _, m2ll = least_squares_m2ll(X, bundle.response)
        else:
            _, m2ll = newton_poisson(X, bundle.response)
        if best is None or m2ll < best[1]:
            best = (t, m2ll)
    return best
