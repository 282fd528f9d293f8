"""Numeric hot-path kernels: numba-jitted with pure-numpy fallbacks.

The jitted path is compiled when numba imports successfully and the
environment variable ``MARKEDPP_DISABLE_NUMBA`` is unset (or falsy).
Both paths implement the same contracts and are cross-checked in the
test suite; ``benchmarks/bench_backends.py`` times them side by side.

Kernels here are deliberately low level (plain float64 arrays in, plain
scalars/arrays out). Everything with domain meaning lives in the
public modules.
"""

from __future__ import annotations

import math
import os

import numpy as np

# Integer codes for the intensity link entering the mark model.
LINK_RAW = 0
LINK_MAX = 1
LINK_ZSCORE = 2


def _numba_disabled() -> bool:
    flag = os.environ.get("MARKEDPP_DISABLE_NUMBA", "")
    return flag.strip().lower() in {"1", "true", "yes", "on"}


try:  # pragma: no cover - import guard
    import numba as _numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _numba = None
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and not _numba_disabled()


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _mark_loglik_np(v_base, vscale, z, link_mask, xi, alpha, marks):
    if marks.shape[0] == 0:
        return 0.0
    t = xi * vscale * v_base
    if alpha.shape[0] > 0:
        static = z @ (alpha * (1.0 - link_mask))
        dyn = z @ (alpha * link_mask)
        t = t + static + dyn * (vscale * v_base)
    # log sigmoid(t) and log sigmoid(-t), stable for |t| up to ~1e308
    ls_pos = -np.logaddexp(0.0, -t)
    ls_neg = -np.logaddexp(0.0, t)
    return float(np.sum(marks * ls_pos + (1.0 - marks) * ls_neg))


def _joint_parts_np(u, beta, xi, alpha, x_pts, x_cells, z, link_mask,
                    marks, cell_area, log_scale, link_mode):
    n = x_pts.shape[0]
    n_cells = x_cells.shape[0]
    if beta.shape[0] > 0:
        eta_c = x_cells @ beta
        eta_p = x_pts @ beta
    else:
        eta_c = np.zeros(n_cells)
        eta_p = np.zeros(n)
    exp_c = np.exp(eta_c)
    exp_sum = float(exp_c.sum())
    eta_max = float(eta_c.max())
    sum_eta = float(eta_p.sum())
    integral = cell_area * math.exp(log_scale + u) * exp_sum
    ll_int = n * (log_scale + u) + sum_eta - integral

    if link_mode == LINK_RAW:
        vscale = math.exp(log_scale + u)
        v_base = np.exp(eta_p)
    elif link_mode == LINK_MAX:
        vscale = 1.0
        v_base = np.exp(eta_p - eta_max)
    else:
        vscale = 1.0
        mean = exp_c.mean()
        sd = exp_c.std()
        if sd > 0.0:
            v_base = (np.exp(eta_p) - mean) / sd
        else:
            v_base = np.zeros(n)
    ll_mark = _mark_loglik_np(v_base, vscale, z, link_mask, xi, alpha, marks)
    return ll_int, ll_mark, v_base, vscale, exp_sum, sum_eta


def _kde_grid_np(xs, ys, x_centers, y_centers, bandwidth):
    norm = 1.0 / (2.0 * np.pi * bandwidth * bandwidth)
    inv = 1.0 / (2.0 * bandwidth * bandwidth)
    gx = np.exp(-((x_centers[None, :] - xs[:, None]) ** 2) * inv)
    gy = np.exp(-((y_centers[None, :] - ys[:, None]) ** 2) * inv)
    return norm * (gx.T @ gy)


# ---------------------------------------------------------------------------
# loop implementations (compiled by numba when enabled)
# ---------------------------------------------------------------------------

def _mark_loglik_loops(v_base, vscale, z, link_mask, xi, alpha, marks):
    n = marks.shape[0]
    q = alpha.shape[0]
    ll = 0.0
    for i in range(n):
        v = vscale * v_base[i]
        t = xi * v
        for j in range(q):
            if link_mask[j] > 0.0:
                t += z[i, j] * alpha[j] * v
            else:
                t += z[i, j] * alpha[j]
        if t >= 0.0:
            ls_pos = -math.log1p(math.exp(-t))
            ls_neg = -t + ls_pos
        else:
            ls_neg = -math.log1p(math.exp(t))
            ls_pos = t + ls_neg
        ll += marks[i] * ls_pos + (1.0 - marks[i]) * ls_neg
    return ll


def _joint_parts_loops(u, beta, xi, alpha, x_pts, x_cells, z, link_mask,
                       marks, cell_area, log_scale, link_mode):
    n = x_pts.shape[0]
    n_cells = x_cells.shape[0]
    p = beta.shape[0]

    exp_c = np.empty(n_cells)
    exp_sum = 0.0
    eta_max = -np.inf
    for c in range(n_cells):
        e = 0.0
        for j in range(p):
            e += x_cells[c, j] * beta[j]
        if e > eta_max:
            eta_max = e
        ee = math.exp(e)
        exp_c[c] = ee
        exp_sum += ee

    eta_p = np.empty(n)
    sum_eta = 0.0
    for i in range(n):
        e = 0.0
        for j in range(p):
            e += x_pts[i, j] * beta[j]
        eta_p[i] = e
        sum_eta += e

    integral = cell_area * math.exp(log_scale + u) * exp_sum
    ll_int = n * (log_scale + u) + sum_eta - integral

    v_base = np.empty(n)
    vscale = 1.0
    if link_mode == LINK_RAW:
        vscale = math.exp(log_scale + u)
        for i in range(n):
            v_base[i] = math.exp(eta_p[i])
    elif link_mode == LINK_MAX:
        for i in range(n):
            v_base[i] = math.exp(eta_p[i] - eta_max)
    else:
        mean = exp_sum / n_cells
        ss = 0.0
        for c in range(n_cells):
            d = exp_c[c] - mean
            ss += d * d
        sd = math.sqrt(ss / n_cells)
        if sd > 0.0:
            for i in range(n):
                v_base[i] = (math.exp(eta_p[i]) - mean) / sd
        else:
            for i in range(n):
                v_base[i] = 0.0

    ll_mark = _mark_loglik_loops(v_base, vscale, z, link_mask, xi, alpha, marks)
    return ll_int, ll_mark, v_base, vscale, exp_sum, sum_eta


def _kde_grid_loops(xs, ys, x_centers, y_centers, bandwidth):
    n = xs.shape[0]
    n_x = x_centers.shape[0]
    n_y = y_centers.shape[0]
    out = np.zeros((n_x, n_y))
    inv = 1.0 / (2.0 * bandwidth * bandwidth)
    norm = 1.0 / (2.0 * np.pi * bandwidth * bandwidth)
    gx = np.empty(n_x)
    gy = np.empty(n_y)
    for k in range(n):
        for a in range(n_x):
            d = x_centers[a] - xs[k]
            gx[a] = math.exp(-d * d * inv)
        for b in range(n_y):
            d = y_centers[b] - ys[k]
            gy[b] = math.exp(-d * d * inv)
        for a in range(n_x):
            g = gx[a]
            for b in range(n_y):
                out[a, b] += g * gy[b]
    for a in range(n_x):
        for b in range(n_y):
            out[a, b] *= norm
    return out


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

if USE_NUMBA:  # pragma: no cover - exercised via the public names
    _njit = _numba.njit(cache=True)
    mark_loglik = _njit(_mark_loglik_loops)
    # the joint kernel resolves this global when it compiles, so it must
    # already be a dispatcher
    _mark_loglik_loops = mark_loglik
    joint_parts = _njit(_joint_parts_loops)
    kde_grid = _njit(_kde_grid_loops)
    BACKEND = "numba"
else:
    mark_loglik = _mark_loglik_np
    joint_parts = _joint_parts_np
    kde_grid = _kde_grid_np
    BACKEND = "numpy"
