"""Small-scale fading laws: densities, distribution functions and samplers.

``W`` is the power gain of the fading (the squared envelope) unless a
function says otherwise. Every sampler takes an explicit
``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy import integrate, special as sp

from . import kernels
from .geometry import R_EARTH_KM, GeometryError
from .special import NonConvergenceError, log_bessel_i0, log_hyp1f1

SR_TOL = 1e-10
SR_MAX_TERMS = 10_000


class FadingError(ValueError):
    pass


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def _nonneg_w(w):
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise FadingError("fading power must be >= 0")
    return w


def db_to_linear(x_db):
    return _ret(10.0 ** (np.asarray(x_db, float) / 10.0))


def linear_to_db(x):
    with np.errstate(divide="ignore"):
        return _ret(10.0 * np.log10(np.asarray(x, float)))


# -- Nakagami-m -------------------------------------------------------------


@dataclass(frozen=True)
class Nakagami:
    """Nakagami-m fading; the power ``W`` is Gamma(m, 1/m) with unit mean."""

    m: float
    name: ClassVar[str] = "nakagami"

    def __post_init__(self):
        if self.m < 0.5:
            raise FadingError(f"Nakagami m must be >= 0.5, got {self.m}")

    def pdf(self, w):
        w = _nonneg_w(w)
        m = self.m
        with np.errstate(divide="ignore"):
            logf = m * math.log(m) + sp.xlogy(m - 1.0, w) - m * w - sp.gammaln(m)
        return _ret(np.exp(logf))

    def cdf(self, w):
        # 1 - Gamma_u(m, m w) / Gamma(m)
        return _ret(sp.gammainc(self.m, self.m * _nonneg_w(w)))

    def sample(self, rng, size=None):
        return rng.gamma(self.m, 1.0 / self.m, size)

    def mean(self):
        return 1.0


def nakagami_pdf(w, p: Nakagami):
    return p.pdf(w)


def nakagami_cdf(w, p: Nakagami):
    return p.cdf(w)


def nakagami_sample(p: Nakagami, rng, size=None):
    return p.sample(rng, size)


# -- shadowed Rician --------------------------------------------------------


@dataclass(frozen=True)
class SRGammaApprox:
    m1: float
    m2: float

    def pdf(self, w):
        w = _nonneg_w(w)
        with np.errstate(divide="ignore"):
            logf = sp.xlogy(self.m1 - 1.0, w) - w / self.m2 - self.m1 * math.log(self.m2) - sp.gammaln(self.m1)
        return _ret(np.exp(logf))

    def cdf(self, w):
        return _ret(sp.gammainc(self.m1, _nonneg_w(w) / self.m2))

    def sample(self, rng, size=None):
        return rng.gamma(self.m1, self.m2, size)

    def mean(self):
        return self.m1 * self.m2


@dataclass(frozen=True)
class ShadowedRician:
    """Shadowed-Rician fading.

    ``omega`` is the average LoS power, ``2 * b0`` the average scattered power
    and ``m`` the Nakagami parameter of the LoS shadowing. With
    ``approx=True`` sampling and evaluation go through the moment-matched
    Gamma law of :func:`sr_gamma_approx`.
    """

    omega: float
    b0: float
    m: float
    approx: bool = False
    tol: float = SR_TOL
    name: ClassVar[str] = "sr"

    def __post_init__(self):
        if self.omega < 0 or self.b0 <= 0 or self.m <= 0:
            raise FadingError(f"invalid shadowed-Rician parameters {self}")

    @property
    def los_ratio(self) -> float:
        """``Omega / (2 b0 m + Omega)``, the success ratio of the negative-binomial mixing law."""
        return self.omega / (2.0 * self.b0 * self.m + self.omega)

    def pdf(self, w):
        if self.approx:
            return sr_gamma_approx(self).pdf(w)
        return sr_pdf(w, self, self.tol)

    def cdf(self, w):
        if self.approx:
            return sr_gamma_approx(self).cdf(w)
        return sr_cdf(w, self, self.tol)

    def sample(self, rng, size=None):
        if self.approx:
            return sr_gamma_approx(self).sample(rng, size)
        return sr_sample(self, rng, size)

    def mean(self):
        return 2.0 * self.b0 + self.omega


# kept as an alias so configs can say "SRParams"
SRParams = ShadowedRician


def sr_mixing_weights(p: ShadowedRician, tol=SR_TOL, max_terms=SR_MAX_TERMS) -> np.ndarray:
    """Weights ``(2b0m/(2b0m+Omega))^m (m)_z / z! (Omega/(2b0m+Omega))^z`` for ``z = 0..Z``.

    They are the probabilities of a negative binomial law, so the mass not yet
    summed is a rigorous bound on the truncation error of any series whose
    other factor lies in [0, 1]. Truncates once that tail mass is <= ``tol``.
    """
    r = p.los_ratio
    if r == 0.0:
        return np.ones(1)
    log_w0 = p.m * math.log1p(-r)
    weights = [math.exp(log_w0)]
    term = weights[0]
    z = 0
    while True:
        # P(Z > z) = I_r(z + 1, m)
        if sp.betainc(z + 1.0, p.m, r) <= tol:
            return np.asarray(weights)
        z += 1
        if z > max_terms:
            raise NonConvergenceError(f"shadowed-Rician series needs more than {max_terms} terms")
        term *= (p.m + z - 1.0) / z * r
        weights.append(term)


def sr_cdf(w, p: ShadowedRician, tol=SR_TOL, max_terms=SR_MAX_TERMS):
    """Shadowed-Rician CDF by the Pochhammer series with lower incomplete gamma terms."""
    w = _nonneg_w(w)
    weights = sr_mixing_weights(p, tol, max_terms)
    x = np.ravel(w) / (2.0 * p.b0)
    out = kernels.sr_cdf_series(np.ascontiguousarray(x), weights)
    return _ret(np.clip(out, 0.0, 1.0).reshape(w.shape))


def sr_pdf(w, p: ShadowedRician, tol=SR_TOL, max_terms=SR_MAX_TERMS):
    """Shadowed-Rician density through the confluent hypergeometric function."""
    w = _nonneg_w(w)
    r = p.los_ratio
    x = np.ravel(w) / (2.0 * p.b0)
    log_f = p.m * math.log1p(-r) - x - math.log(2.0 * p.b0)
    if r > 0.0:
        log_f = log_f + kernels.log_hyp1f1(p.m, 1.0, np.ascontiguousarray(r * x), tol, max_terms)
    return _ret(np.exp(log_f).reshape(w.shape))


def sr_sample(p: ShadowedRician, rng, size=None):
    """Constructive draw: Nakagami-shadowed LoS phasor plus complex Gaussian scatter."""
    n = 1 if size is None else int(np.prod(size))
    los_power = rng.gamma(p.m, p.omega / p.m, n) if p.omega > 0 else np.zeros(n)
    phase = 2.0 * np.pi * rng.random(n)
    scatter = rng.normal(0.0, math.sqrt(p.b0), (n, 2))
    amp = np.sqrt(los_power)
    re = amp * np.cos(phase) + scatter[:, 0]
    im = amp * np.sin(phase) + scatter[:, 1]
    out = re * re + im * im
    return float(out[0]) if size is None else out.reshape(size)


def sr_gamma_approx(p: ShadowedRician) -> SRGammaApprox:
    b0, om, m = p.b0, p.omega, p.m
    q = 4.0 * m * b0 * b0 + 4.0 * m * b0 * om + om * om
    m1 = m * (2.0 * b0 + om) ** 2 / q
    m2 = q / (m * (2.0 * b0 + om))
    return SRGammaApprox(m1, m2)


# -- Rician -----------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True)
class Rician:
    """Rician fading with unit mean-square envelope; ``W`` here is the envelope."""

    k: float
    name: ClassVar[str] = "rician"

    def __post_init__(self):
        if self.k < 0:
            raise FadingError(f"Rician K must be >= 0, got {self.k}")

    def pdf(self, w):
        return rician_pdf(w, self)

    def cdf(self, w):
        return rician_cdf(w, self)

    def sample(self, rng, size=None):
        return rician_sample(self, rng, size)


def rician_pdf(w, p: Rician):
    """``(2K+2) w I0(2 w sqrt(K(K+1))) exp(-(K+1) w^2 - K)``."""
    w = _nonneg_w(w)
    k = p.k
    with np.errstate(divide="ignore"):
        logf = (
            math.log(2.0 * k + 2.0)
            + np.log(w)
            + log_bessel_i0(2.0 * w * math.sqrt(k * (k + 1.0)))
            - (k + 1.0) * w * w
            - k
        )
    return _ret(np.exp(logf))


def _rician_support_cap(k):
    # pdf < exp(-800) beyond this envelope value
    return math.sqrt(k / (k + 1.0)) + 40.0 / math.sqrt(2.0 * (k + 1.0))


def rician_cdf(w, p: Rician):
    """Integral of :func:`rician_pdf` from 0 to ``w``.

    Composite 12-point Gauss-Legendre on panels of width ``0.05 / sqrt(K+1)``
    (about a twentieth of the envelope spread), exact to rounding for this
    entire, smooth integrand.
    """
    w = _nonneg_w(w)
    flat = np.minimum(np.ravel(w), _rician_support_cap(p.k))
    if flat.size == 0:
        return _ret(np.zeros_like(w))
    h = 0.05 / math.sqrt(p.k + 1.0)
    n_panels = int(math.ceil(flat.max() / h)) + 1
    edges = h * np.arange(n_panels + 1)
    panel = _gl_integrate(p, edges[:-1], edges[1:])
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    idx = np.minimum((flat / h).astype(np.int64), n_panels)
    out = cum[idx] + _gl_integrate(p, edges[idx], flat)
    return _ret(np.clip(out, 0.0, 1.0).reshape(w.shape))


def _gl_integrate(p, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return half * (rician_pdf(nodes, p) @ _GL_WEIGHTS)


def rician_cdf_adaptive(w, p: Rician) -> float:
    """Scalar CDF by adaptive quadrature; slower reference path."""
    val, _ = integrate.quad(lambda t: rician_pdf(t, p), 0.0, min(float(w), _rician_support_cap(p.k)),
                            epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def rician_sample(p: Rician, rng, size=None):
    """Envelope of LoS ``sqrt(K/(K+1))`` plus complex Gaussian of variance ``1/(2(K+1))`` per axis."""
    n = 1 if size is None else int(np.prod(size))
    los = math.sqrt(p.k / (p.k + 1.0))
    s = math.sqrt(0.5 / (p.k + 1.0))
    g = rng.normal(0.0, s, (n, 2))
    out = np.hypot(los + g[:, 0], g[:, 1])
    return float(out[0]) if size is None else out.reshape(size)


# -- pointing error ---------------------------------------------------------


@dataclass(frozen=True)
class PointingError:
    """Beam-misalignment loss with Rayleigh-distributed deviation angle.

    The conditional density given the deviation angle integrates to
    ``cos(theta_d)``. ``normalized=True`` (default) rescales it to a proper
    density, which makes ``W`` independent of the deviation. With
    ``normalized=False`` the missing ``1 - cos(theta_d)`` mass is an outage
    (``W = 0``).
    """

    a0: float
    eta_s: float
    sigma_jitter: float
    normalized: bool = True
    name: ClassVar[str] = "pointing"

    def __post_init__(self):
        if not (0.0 < self.a0 <= 1.0) or self.eta_s <= 0 or self.sigma_jitter <= 0:
            raise FadingError(f"invalid pointing-error parameters {self}")

    def conditional_pdf(self, w, theta_d, normalized=False):
        return pointing_error_conditional_pdf(w, theta_d, self, normalized)

    def mean_cos(self) -> float:
        """``E[max(cos theta_d, 0)]`` under the Rayleigh deviation law."""
        s = self.sigma_jitter
        val, _ = integrate.quad(
            lambda t: math.cos(t) * t / s**2 * math.exp(-t * t / (2 * s * s)),
            0.0, math.pi / 2, epsabs=1e-14, epsrel=1e-12, limit=200,
        )
        return val

    def cdf(self, w):
        w = _nonneg_w(w)
        if np.any(w > self.a0):
            w = np.minimum(w, self.a0)
        base = (w / self.a0) ** (self.eta_s**2)
        if self.normalized:
            return _ret(base)
        c = self.mean_cos()
        return _ret(1.0 - c + c * base)

    def sample(self, rng, size=None):
        return pointing_error_sample(self, rng, size)


def pointing_error_conditional_pdf(w, theta_d, p: PointingError, normalized=False):
    w = _nonneg_w(w)
    if np.any(w > p.a0):
        raise FadingError(f"pointing-error gain must lie in [0, a0={p.a0}]")
    e2 = p.eta_s**2
    with np.errstate(divide="ignore"):
        f = e2 * w ** (e2 - 1.0) / p.a0**e2
    if not normalized:
        f = f * np.cos(theta_d)
    return _ret(f)


def pointing_error_sample(p: PointingError, rng, size=None):
    n = 1 if size is None else int(np.prod(size))
    theta_d = rng.rayleigh(p.sigma_jitter, n)
    u = rng.random((n, 2))
    w = p.a0 * u[:, 0] ** (1.0 / p.eta_s**2)
    if not p.normalized:
        keep = u[:, 1] < np.clip(np.cos(theta_d), 0.0, 1.0)
        w = np.where(keep, w, 0.0)
    return float(w[0]) if size is None else w.reshape(size)


# -- LoS probability and mixed lognormal-Gaussian --------------------------


def p_los(theta_c, beta, r_ntp, r_earth=R_EARTH_KM):
    """Probability of a line-of-sight link at central angle ``theta_c``; above the horizon only."""
    theta_c = np.asarray(theta_c, float)
    denom = r_ntp * np.cos(theta_c) - r_earth
    if np.any(denom <= 0) or np.any(theta_c < 0):
        raise GeometryError("p_los is defined only for platforms above the horizon")
    return _ret(np.exp(-r_ntp * beta * np.sin(theta_c) / denom))


def _p_los_clipped(cos_c, beta, r_ntp, r_earth):
    # zero at and below the horizon; used where such points are discarded anyway
    sin_c = np.sqrt(np.clip(1.0 - cos_c * cos_c, 0.0, None))
    denom = r_ntp * cos_c - r_earth
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = np.exp(-r_ntp * beta * sin_c / denom)
    return np.where(denom > 0, val, 0.0)


@dataclass(frozen=True)
class MixedLognormal:
    """Mixture of Gaussians in dB for the combined attenuation-and-fading ``zeta * W``.

    Environment constants have no defaults and must be supplied.
    """

    mu_los: float
    sigma_los: float
    mu_nlos: float
    sigma_nlos: float
    beta: float
    name: ClassVar[str] = "mixed-lognormal"
    includes_attenuation: ClassVar[bool] = True

    def __post_init__(self):
        if self.sigma_los < 0 or self.sigma_nlos < 0 or self.beta <= 0:
            raise FadingError(f"invalid mixed lognormal parameters {self}")

    def cdf_db(self, x_db, theta_c, r_ntp, r_earth=R_EARTH_KM):
        p = p_los(theta_c, self.beta, r_ntp, r_earth)
        x = np.asarray(x_db, float)
        return _ret(p * _norm_cdf(x, -self.mu_los, self.sigma_los)
                    + (1 - p) * _norm_cdf(x, -self.mu_nlos, self.sigma_nlos))

    def sample_db(self, rng, theta_c, r_ntp, r_earth=R_EARTH_KM, size=None):
        p_los(theta_c, self.beta, r_ntp, r_earth)
        cos_c = np.cos(np.broadcast_to(np.asarray(theta_c, float), () if size is None else size))
        return self._draw_db(rng, cos_c, r_ntp, r_earth)

    def _draw_db(self, rng, cos_c, r_ntp, r_earth):
        cos_c = np.asarray(cos_c, float)
        prob = _p_los_clipped(cos_c, self.beta, r_ntp, r_earth)
        u = rng.random(cos_c.shape)
        z = rng.standard_normal(cos_c.shape)
        los = u < prob
        out = np.where(los, -self.mu_los + self.sigma_los * z, -self.mu_nlos + self.sigma_nlos * z)
        return _ret(out)

    def sample_linear_at(self, rng, cos_c, r_ntp, r_earth):
        return 10.0 ** (np.asarray(self._draw_db(rng, cos_c, r_ntp, r_earth)) / 10.0)


def _norm_cdf(x, mean, sd):
    if sd == 0:
        return (x >= mean).astype(float)
    return sp.ndtr((x - mean) / sd)


def mixed_lognormal_sample_db(theta_c, p: MixedLognormal, r_ntp, r_earth, rng, size=None):
    return p.sample_db(rng, theta_c, r_ntp, r_earth, size)


@dataclass(frozen=True)
class NoFading:
    """Deterministic unit gain."""

    name: ClassVar[str] = "none"

    def cdf(self, w):
        return _ret((np.asarray(w, float) >= 1.0).astype(float))

    def sample(self, rng, size=None):
        return 1.0 if size is None else np.ones(size)

    def mean(self):
        return 1.0


FADING_TYPES = {
    cls.name: cls for cls in (Nakagami, ShadowedRician, Rician, PointingError, MixedLognormal, NoFading)
}
