"""Special-function kernels used by the fading models.

The incomplete gamma functions and I0 are thin, overflow-safe wrappers over
``scipy.special``. The confluent hypergeometric series is evaluated here in
log space with an explicit tolerance and term cap, because the shadowed-Rician
density needs both and must report non-convergence instead of returning a
silently wrong value.
"""

from __future__ import annotations

import numpy as np
from scipy import special as sp


class NonConvergenceError(ArithmeticError):
    """A series did not reach its tolerance within the term cap."""


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def gamma_lower(s, x):
    """Lower incomplete gamma ``int_0^x t^(s-1) e^-t dt`` (not regularized)."""
    s, x = np.asarray(s, float), np.asarray(x, float)
    with np.errstate(over="ignore", divide="ignore"):
        return _out(np.exp(np.log(sp.gammainc(s, x)) + sp.gammaln(s)))


def gamma_upper(s, x):
    """Upper incomplete gamma ``int_x^inf t^(s-1) e^-t dt`` (not regularized)."""
    s, x = np.asarray(s, float), np.asarray(x, float)
    with np.errstate(over="ignore", divide="ignore"):
        return _out(np.exp(np.log(sp.gammaincc(s, x)) + sp.gammaln(s)))


def gamma_lower_regularized(s, x):
    return _out(sp.gammainc(np.asarray(s, float), np.asarray(x, float)))


def gamma_upper_regularized(s, x):
    return _out(sp.gammaincc(np.asarray(s, float), np.asarray(x, float)))


def bessel_i0(x):
    return _out(sp.i0(np.asarray(x, float)))


def log_bessel_i0(x):
    """``log I0(|x|)``, finite for arguments where I0 itself overflows."""
    x = np.abs(np.asarray(x, float))
    return _out(np.log(sp.i0e(x)) + x)


def log_hyp1f1(a, b, x, tol=1e-15, max_terms=100_000):
    """Log of the Kummer function ``1F1(a; b; x)`` for ``a, b > 0`` and ``x >= 0``.

    Sums the power series term by term in scaled form (all terms are
    positive in this domain). Stops once the next term is below ``tol``
    times the partial sum and the term ratio has turned below one, which
    bounds the neglected tail by a geometric series.
    """
    if a <= 0 or b <= 0:
        raise ValueError("log_hyp1f1 needs a > 0 and b > 0")
    xs = np.atleast_1d(np.asarray(x, float))
    if np.any(xs < 0):
        raise ValueError("log_hyp1f1 needs x >= 0")
    out = np.empty_like(xs)
    for i, xv in enumerate(xs):
        out[i] = _log_hyp1f1_scalar(a, b, xv, tol, max_terms)
    return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))


def _log_hyp1f1_scalar(a, b, x, tol, max_terms):
    if x == 0.0:
        return 0.0
    # t_n / t_{n-1} = (a + n - 1) x / ((b + n - 1) n); large partial sums are folded into log_scale
    log_scale = 0.0
    total = 1.0
    term = 1.0
    for n in range(1, max_terms + 1):
        ratio = (a + n - 1.0) * x / ((b + n - 1.0) * n)
        term *= ratio
        total += term
        if total > 1e280:
            log_scale += np.log(total)
            term /= total
            total = 1.0
        if ratio < 1.0 and term <= tol * total * (1.0 - ratio):
            return log_scale + np.log(total)
    raise NonConvergenceError(f"1F1({a}; {b}; {x}) did not converge in {max_terms} terms")


def hyp1f1(a, b, x, tol=1e-15, max_terms=100_000):
    """Kummer confluent hypergeometric function ``1F1(a; b; x)``.

    Positive ``x`` (with ``a, b > 0``) uses the direct series; negative ``x``
    goes through Kummer's transformation ``e^x 1F1(b - a; b; -x)`` when that
    series is positive-term, otherwise through the plain alternating series.
    """
    xs = np.atleast_1d(np.asarray(x, float))
    out = np.empty_like(xs)
    for i, xv in enumerate(xs):
        if xv >= 0 and a > 0 and b > 0:
            out[i] = np.exp(_log_hyp1f1_scalar(a, b, xv, tol, max_terms))
        elif xv < 0 and b - a > 0 and b > 0:
            out[i] = np.exp(xv + _log_hyp1f1_scalar(b - a, b, -xv, tol, max_terms))
        else:
            out[i] = _hyp1f1_plain(a, b, xv, tol, max_terms)
    return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))


def _hyp1f1_plain(a, b, x, tol, max_terms):
    total = term = 1.0
    for n in range(1, max_terms + 1):
        term *= (a + n - 1.0) * x / ((b + n - 1.0) * n)
        total += term
        if term == 0.0 or (abs(term) <= tol * abs(total) and n > abs(x)):
            return total
    raise NonConvergenceError(f"1F1({a}; {b}; {x}) did not converge in {max_terms} terms")
