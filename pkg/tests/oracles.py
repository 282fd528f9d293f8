"""Independent reference implementations used only by the tests.

These stay deliberately naive (direct formulas, exhaustive search) so
they cannot share a bug with the library paths they check.
"""

import math

import numpy as np


def naive_bernoulli_loglik(marks, logits):
    """Direct per-point Bernoulli log pmf; safe for |logit| <= 20."""
    total = 0.0
    for m, t in zip(marks, logits):
        theta = 1.0 / (1.0 + math.exp(-t))
        total += m * math.log(theta) + (1 - m) * math.log(1.0 - theta)
    return total


def irls_logistic(x, y, max_iter=100, tol=1e-10):
    """Maximum-likelihood logistic regression by iteratively reweighted
    least squares. Returns (coef, covariance)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.zeros(x.shape[1])
    for _ in range(max_iter):
        eta = x @ beta
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = mu * (1.0 - mu)
        wx = x * w[:, None]
        hess = x.T @ wx
        grad = x.T @ (y - mu)
        step = np.linalg.solve(hess, grad)
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            break
    eta = x @ beta
    mu = 1.0 / (1.0 + np.exp(-eta))
    cov = np.linalg.inv(x.T @ (x * (mu * (1 - mu))[:, None]))
    return beta, cov


def brute_force_ward(x):
    """Agglomerate by directly minimizing the increase in total
    within-cluster sum of squares; heights are reported on the
    Lance-Williams scale (twice the increase) to match ward_cluster.

    Ties break on the lexicographically lowest (id_a, id_b) pair.
    Cluster ids: leaves 0..n-1, merges n, n+1, ...
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    clusters = {i: [i] for i in range(n)}
    merges = []

    def ess(members):
        pts = x[members]
        mu = pts.mean(axis=0)
        return float(((pts - mu) ** 2).sum())

    next_id = n
    for _ in range(n - 1):
        best = None
        for a in sorted(clusters):
            for b in sorted(clusters):
                if b <= a:
                    continue
                delta = ess(clusters[a] + clusters[b]) - ess(clusters[a]) - ess(clusters[b])
                key = (delta, a, b)
                if best is None or key < best:
                    best = key
        delta, a, b = best
        merges.append((a, b, 2.0 * delta))
        clusters[next_id] = clusters.pop(a) + clusters.pop(b)
        next_id += 1
    return merges


def golden_section_max(fn, lo, hi, tol=1e-6, max_iter=200):
    """Golden-section search for the maximizer of a unimodal function."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def midpoint_integral_exp(beta1, beta2, n):
    """Midpoint-rule integral of exp(b1 x + b2 y) on [-1, 1]^2 computed
    by direct summation."""
    h = 2.0 / n
    c = -1.0 + h * (np.arange(n) + 0.5)
    return float(h * h * (np.exp(beta1 * c)[:, None] * np.exp(beta2 * c)[None, :]).sum())
