"""Backend selection for the hot kernels.

The compiled extension is used when it imports; set ``NTNSG_PURE_PYTHON=1``
to force the numpy fallback. :data:`BACKEND` names the active one.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

if os.environ.get("NTNSG_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
LINK_FIELDS = _kernels_py.LINK_FIELDS


def backends():
    """All importable backends, keyed by name (for tests and benchmarks)."""
    found = {"numpy": _kernels_py}
    try:
        from . import _kernels

        found["cython"] = _kernels
    except ImportError:
        pass
    return found


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def sr_cdf_series(x, weights, impl=None):
    return (impl or _impl).sr_cdf_series(_f64(x), _f64(weights))


def log_hyp1f1(a, b, x, tol, max_terms, impl=None):
    return (impl or _impl).log_hyp1f1(float(a), float(b), _f64(x), float(tol), int(max_terms))


def nearest_cos(xyz, offsets, ref, impl=None):
    ref = _f64(ref)
    return (impl or _impl).nearest_cos(_f64(xyz).reshape(-1, 3), _i64(offsets), ref / np.linalg.norm(ref))


def count_in_cap(xyz, offsets, ref, cos_max, impl=None):
    ref = _f64(ref)
    return (impl or _impl).count_in_cap(_f64(xyz).reshape(-1, 3), _i64(offsets), ref / np.linalg.norm(ref),
                                        float(cos_max))


def link_trials(xyz, offsets, user, w, *, coef, alpha, noise, threshold, sin_mask=0.0, k=1,
                interference=False, assoc_u=None, impl=None):
    offsets = _i64(offsets)
    if assoc_u is None:
        assoc_u = np.zeros(len(offsets) - 1)
    return (impl or _impl).link_trials(
        _f64(xyz).reshape(-1, 3), offsets, _f64(user), _f64(w), float(coef), float(alpha), float(noise),
        float(threshold), float(sin_mask), int(k), bool(interference), _f64(assoc_u),
    )
