"""Vectorized numpy implementations of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable or disabled.
Signatures and results match the compiled module.
"""

from __future__ import annotations

import numpy as np

from .special import NonConvergenceError

BACKEND = "numpy"

LINK_FIELDS = ("n_visible", "n_detected", "nearest_k_ok", "cov_nearest", "cov_random")


def sr_cdf_series(x, weights):
    """``sum_z weights[z] * P(z + 1, x)`` with ``P`` the regularized lower incomplete gamma."""
    x = np.asarray(x, dtype=np.float64)
    p = -np.expm1(-x)
    t = np.exp(-x) * x
    out = weights[0] * p
    for z in range(1, len(weights)):
        p = np.maximum(p - t, 0.0)
        out = out + weights[z] * p
        t = t * x / (z + 1.0)
    return out


def log_hyp1f1(a, b, x, tol, max_terms):
    x = np.asarray(x, dtype=np.float64)
    total = np.ones_like(x)
    term = np.ones_like(x)
    log_scale = np.zeros_like(x)
    active = x > 0.0
    n = 0
    while active.any():
        n += 1
        if n > max_terms:
            raise NonConvergenceError(f"1F1({a}; {b}; x) did not converge in {max_terms} terms")
        ratio = (a + n - 1.0) * x / ((b + n - 1.0) * n)
        term = np.where(active, term * ratio, term)
        total = np.where(active, total + term, total)
        big = total > 1e280
        if big.any():
            log_scale = np.where(big, log_scale + np.log(np.where(big, total, 1.0)), log_scale)
            term = np.where(big, term / total, term)
            total = np.where(big, 1.0, total)
        done = (ratio < 1.0) & (term <= tol * total * (1.0 - ratio))
        active = active & ~done
    return log_scale + np.log(total)


def _norms(xyz):
    return np.sqrt(xyz[:, 0] * xyz[:, 0] + xyz[:, 1] * xyz[:, 1] + xyz[:, 2] * xyz[:, 2])


def _dot(xyz, v):
    # explicit component order so results match the compiled loop bit for bit
    return xyz[:, 0] * v[0] + xyz[:, 1] * v[1] + xyz[:, 2] * v[2]


def _trial_index(offsets):
    counts = np.diff(offsets)
    return np.repeat(np.arange(len(counts)), counts), counts


def nearest_cos(xyz, offsets, ref):
    """Per trial, the largest cosine of the central angle to unit vector ``ref`` (NaN if empty)."""
    tid, counts = _trial_index(offsets)
    cos = _dot(xyz, ref) / _norms(xyz)
    out = np.full(len(counts), -np.inf)
    np.maximum.at(out, tid, cos)
    out[counts == 0] = np.nan
    return out


def count_in_cap(xyz, offsets, ref, cos_max):
    tid, counts = _trial_index(offsets)
    cos = _dot(xyz, ref) / _norms(xyz)
    return np.bincount(tid, weights=(cos > cos_max), minlength=len(counts)).astype(np.int64)


def link_trials(xyz, offsets, user, w, coef, alpha, noise, threshold, sin_mask, k, interference, assoc_u):
    """Per-trial link statistics for a ground user at ``user``.

    A point is visible when its elevation exceeds ``asin(sin_mask)``. Its
    signal is ``coef * w * d**-alpha``; SINR divides by ``noise`` plus, if
    ``interference`` is set, the other visible signals. Returns a dict of
    int64 arrays keyed by ``LINK_FIELDS``.
    """
    tid, counts = _trial_index(offsets)
    n_trials = len(counts)
    v = xyz - user
    d2 = v[:, 0] * v[:, 0] + v[:, 1] * v[:, 1] + v[:, 2] * v[:, 2]
    d = np.sqrt(d2)
    un = np.sqrt(user[0] * user[0] + user[1] * user[1] + user[2] * user[2])
    visible = _dot(v, user) / un > d * sin_mask
    s = np.where(visible, coef * w * d2 ** (-0.5 * alpha), 0.0)
    if interference:
        tot = np.bincount(tid, weights=s, minlength=n_trials)
        denom = noise + (tot[tid] - s)
    else:
        denom = noise
    detected = visible & (s / denom > threshold)

    n_vis = np.bincount(tid, weights=visible, minlength=n_trials).astype(np.int64)
    n_det = np.bincount(tid, weights=detected, minlength=n_trials).astype(np.int64)

    key = np.where(visible, d2, np.inf)
    order = np.lexsort((key, tid))
    rank = np.empty(len(tid), dtype=np.int64)
    rank[order] = np.arange(len(tid)) - offsets[tid[order]]
    in_k = visible & (rank < k)
    bad = np.bincount(tid, weights=in_k & ~detected, minlength=n_trials)
    nearest_k_ok = ((n_vis >= k) & (bad == 0)).astype(np.int64)
    cov_nearest = np.bincount(tid, weights=(rank == 0) & detected, minlength=n_trials).astype(np.int64)

    # random association: the j-th visible point in storage order, j = floor(u * n_visible)
    vis_rank = np.cumsum(visible) - 1
    first = np.concatenate([[0], np.cumsum(visible)])[offsets[:-1]]
    vis_rank = vis_rank - first[tid]
    pick = np.minimum((assoc_u * n_vis).astype(np.int64), np.maximum(n_vis - 1, 0))
    chosen = visible & (vis_rank == pick[tid])
    cov_random = np.bincount(tid, weights=chosen & detected, minlength=n_trials).astype(np.int64)
    return {
        "n_visible": n_vis,
        "n_detected": n_det,
        "nearest_k_ok": nearest_k_ok,
        "cov_nearest": cov_nearest,
        "cov_random": cov_random,
    }
