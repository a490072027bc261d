# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same contract as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, log, sqrt, pow, INFINITY, NAN

from .special import NonConvergenceError

cnp.import_array()

BACKEND = "cython"

LINK_FIELDS = ("n_visible", "n_detected", "nearest_k_ok", "cov_nearest", "cov_random")


def sr_cdf_series(const double[::1] x, const double[::1] weights):
    cdef Py_ssize_t n = x.shape[0], nz = weights.shape[0], i, z
    cdef double p, t, acc, xi
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            xi = x[i]
            p = -expm1(-xi)
            t = exp(-xi) * xi
            acc = weights[0] * p
            for z in range(1, nz):
                p = p - t
                if p < 0.0:
                    p = 0.0
                acc = acc + weights[z] * p
                t = t * xi / (z + 1.0)
            o[i] = acc
    return out


def log_hyp1f1(double a, double b, const double[::1] x, double tol, long max_terms):
    cdef Py_ssize_t n = x.shape[0], i
    cdef long k
    cdef double xi, total, term, ratio, log_scale
    cdef int failed = 0
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            xi = x[i]
            if xi <= 0.0:
                o[i] = 0.0
                continue
            total = 1.0
            term = 1.0
            log_scale = 0.0
            k = 0
            while True:
                k += 1
                if k > max_terms:
                    failed = 1
                    break
                ratio = (a + k - 1.0) * xi / ((b + k - 1.0) * k)
                term = term * ratio
                total = total + term
                if total > 1e280:
                    log_scale = log_scale + log(total)
                    term = term / total
                    total = 1.0
                if ratio < 1.0 and term <= tol * total * (1.0 - ratio):
                    break
            if failed:
                break
            o[i] = log_scale + log(total)
    if failed:
        raise NonConvergenceError(f"1F1({a}; {b}; x) did not converge in {max_terms} terms")
    return out


def nearest_cos(const double[:, ::1] xyz, const cnp.int64_t[::1] offsets, const double[::1] ref):
    cdef Py_ssize_t nt = offsets.shape[0] - 1, t, i
    cdef double best, c, nrm
    out = np.empty(nt, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for t in range(nt):
            if offsets[t + 1] == offsets[t]:
                o[t] = NAN
                continue
            best = -INFINITY
            for i in range(offsets[t], offsets[t + 1]):
                nrm = sqrt(xyz[i, 0] * xyz[i, 0] + xyz[i, 1] * xyz[i, 1] + xyz[i, 2] * xyz[i, 2])
                c = (xyz[i, 0] * ref[0] + xyz[i, 1] * ref[1] + xyz[i, 2] * ref[2]) / nrm
                if c > best:
                    best = c
            o[t] = best
    return out


def count_in_cap(const double[:, ::1] xyz, const cnp.int64_t[::1] offsets, const double[::1] ref, double cos_max):
    cdef Py_ssize_t nt = offsets.shape[0] - 1, t, i
    cdef cnp.int64_t cnt
    cdef double c, nrm
    out = np.empty(nt, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    with nogil:
        for t in range(nt):
            cnt = 0
            for i in range(offsets[t], offsets[t + 1]):
                nrm = sqrt(xyz[i, 0] * xyz[i, 0] + xyz[i, 1] * xyz[i, 1] + xyz[i, 2] * xyz[i, 2])
                c = (xyz[i, 0] * ref[0] + xyz[i, 1] * ref[1] + xyz[i, 2] * ref[2]) / nrm
                if c > cos_max:
                    cnt += 1
            o[t] = cnt
    return out


def link_trials(const double[:, ::1] xyz, const cnp.int64_t[::1] offsets, const double[::1] user,
                const double[::1] w, double coef, double alpha, double noise, double threshold,
                double sin_mask, long k, bint interference, const double[::1] assoc_u):
    cdef Py_ssize_t nt = offsets.shape[0] - 1, t, i, j, lo, hi, m, best
    cdef double ux, uy, uz, un, vx, vy, vz, d2, d, tot, den
    cdef cnp.int64_t nvis, ndet, pick, seen
    cdef Py_ssize_t npts = xyz.shape[0]
    sig_arr = np.zeros(npts, dtype=np.float64)
    d2_arr = np.empty(npts, dtype=np.float64)
    vis_arr = np.zeros(npts, dtype=np.int8)
    det_arr = np.zeros(npts, dtype=np.int8)
    cdef double[::1] s = sig_arr
    cdef double[::1] dd = d2_arr
    cdef cnp.int8_t[::1] vis = vis_arr
    cdef cnp.int8_t[::1] det = det_arr
    buf_d = np.empty(max(k, 1), dtype=np.float64)
    buf_i = np.empty(max(k, 1), dtype=np.intp)
    cdef double[::1] bd = buf_d
    cdef Py_ssize_t[::1] bi = buf_i
    res = {f: np.zeros(nt, dtype=np.int64) for f in LINK_FIELDS}
    cdef cnp.int64_t[::1] o_vis = res["n_visible"]
    cdef cnp.int64_t[::1] o_det = res["n_detected"]
    cdef cnp.int64_t[::1] o_kok = res["nearest_k_ok"]
    cdef cnp.int64_t[::1] o_cn = res["cov_nearest"]
    cdef cnp.int64_t[::1] o_cr = res["cov_random"]
    ux, uy, uz = user[0], user[1], user[2]
    un = sqrt(ux * ux + uy * uy + uz * uz)
    with nogil:
        for t in range(nt):
            lo = offsets[t]
            hi = offsets[t + 1]
            tot = 0.0
            nvis = 0
            for i in range(lo, hi):
                vx = xyz[i, 0] - ux
                vy = xyz[i, 1] - uy
                vz = xyz[i, 2] - uz
                d2 = vx * vx + vy * vy + vz * vz
                d = sqrt(d2)
                dd[i] = d2
                if (vx * ux + vy * uy + vz * uz) / un > d * sin_mask:
                    vis[i] = 1
                    s[i] = coef * w[i] * pow(d2, -0.5 * alpha)
                    tot = tot + s[i]
                    nvis += 1
            ndet = 0
            best = -1
            for i in range(lo, hi):
                if vis[i]:
                    den = noise + (tot - s[i]) if interference else noise
                    if s[i] / den > threshold:
                        det[i] = 1
                        ndet += 1
                    if best < 0 or dd[i] < dd[best]:
                        best = i
            o_vis[t] = nvis
            o_det[t] = ndet
            o_cn[t] = 1 if (best >= 0 and det[best]) else 0
            # k nearest visible all detected; ties ordered by storage index like a stable sort
            if nvis >= k:
                o_kok[t] = 1
                m = 0
                for i in range(lo, hi):
                    if not vis[i]:
                        continue
                    if m < k:
                        j = m
                        m += 1
                    elif dd[i] < bd[k - 1]:
                        j = k - 1
                    else:
                        continue
                    while j > 0 and bd[j - 1] > dd[i]:
                        bd[j] = bd[j - 1]
                        bi[j] = bi[j - 1]
                        j -= 1
                    bd[j] = dd[i]
                    bi[j] = i
                for j in range(m):
                    if not det[bi[j]]:
                        o_kok[t] = 0
                        break
            if nvis > 0:
                pick = <cnp.int64_t>(assoc_u[t] * nvis)
                if pick > nvis - 1:
                    pick = nvis - 1
                seen = 0
                for i in range(lo, hi):
                    if vis[i]:
                        if seen == pick:
                            o_cr[t] = det[i]
                            break
                        seen += 1
    return res
