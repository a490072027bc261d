"""Closed-form topology statistics for the homogeneous spherical BPP,
with Monte Carlo counterparts for validation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from . import kernels
from .geometry import (
    R_EARTH_KM,
    GeometryError,
    SpacePoint,
    distance_to_central_angle,
    horizon_central_angle,
    max_distance_central_angle,
)
from .processes import HomBPP, ConstellationSample, PointBatch


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class TopologyParams:
    n_ntp: int
    r_ntp: float
    r_earth: float = R_EARTH_KM

    def __post_init__(self):
        if self.n_ntp < 1:
            raise TopologyError(f"n_ntp must be >= 1, got {self.n_ntp}")
        if self.r_ntp < self.r_earth:
            raise TopologyError("r_ntp must be >= r_earth")

    @classmethod
    def for_spec(cls, spec, r_ntp, r_earth=R_EARTH_KM):
        """Only the homogeneous BPP has these closed forms."""
        if not isinstance(spec, HomBPP):
            raise TopologyError(
                f"closed-form topology statistics need a homogeneous BPP, got {type(spec).__name__}; "
                "use the empirical estimators instead"
            )
        return cls(spec.count, r_ntp, r_earth)

    def theta_max(self, association="visibility", d_max=None) -> float:
        """Largest associable central angle: the horizon, or a maximum link distance."""
        if association == "visibility":
            return horizon_central_angle(self.r_ntp, self.r_earth)
        if association == "distance":
            if d_max is None:
                raise TopologyError("association='distance' needs d_max")
            return max_distance_central_angle(d_max, self.r_ntp, self.r_earth)
        raise TopologyError(f"unknown association bound {association!r}")


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_angle(theta):
    theta = np.asarray(theta, float)
    if np.any((theta < 0) | (theta > np.pi)):
        raise TopologyError("angle must lie in [0, pi]")
    return theta


def _empty_cap_prob(theta, n):
    # ((1 + cos theta) / 2)^n == cos^2n(theta / 2), evaluated in log space
    with np.errstate(divide="ignore"):
        return np.exp(2.0 * n * np.log(np.cos(0.5 * theta)))


def contact_angle_cdf(theta, p: TopologyParams):
    """P[nearest platform lies within central angle ``theta``]."""
    theta = _check_angle(theta)
    return _ret(1.0 - _empty_cap_prob(theta, p.n_ntp))


def contact_angle_pdf(theta, p: TopologyParams):
    theta = _check_angle(theta)
    n = p.n_ntp
    return _ret(0.5 * n * np.sin(theta) * _empty_cap_prob(theta, n - 1))


def contact_distance_cdf(d, p: TopologyParams):
    d = np.asarray(d, float)
    lo, hi = p.r_ntp - p.r_earth, p.r_ntp + p.r_earth
    if np.any(d < lo * (1 - 1e-12)) or np.any(d > hi * (1 + 1e-12)):
        raise GeometryError(f"contact distance outside [{lo}, {hi}]")
    base = 0.5 + (p.r_ntp**2 + p.r_earth**2 - d * d) / (4.0 * p.r_ntp * p.r_earth)
    return _ret(1.0 - np.clip(base, 0.0, 1.0) ** p.n_ntp)


def availability(theta_max, p: TopologyParams):
    """Probability that at least one platform lies within ``theta_max`` of the user."""
    return contact_angle_cdf(theta_max, p)


def k_availability(k, theta_max, p: TopologyParams):
    """Probability that at least ``k`` platforms lie within ``theta_max``.

    Binomial survival function, evaluated as the regularized incomplete beta
    ``I_q(k, N - k + 1)`` so it stays accurate for mega-constellations.
    """
    k = int(k)
    if k < 0 or k > p.n_ntp:
        raise TopologyError(f"k must lie in [0, {p.n_ntp}], got {k}")
    theta_max = _check_angle(theta_max)
    if k == 0:
        return _ret(np.ones_like(theta_max))
    if k == 1:
        return availability(theta_max, p)
    q = np.sin(0.5 * theta_max) ** 2
    return _ret(sp.betainc(k, p.n_ntp - k + 1, q))


# -- empirical counterparts -------------------------------------------------


@dataclass
class EmpiricalCDF:
    values: np.ndarray  # sorted

    def __call__(self, x):
        return _ret(np.searchsorted(self.values, np.asarray(x, float), side="right") / len(self.values))

    def __len__(self):
        return len(self.values)

    def ks_statistic(self, cdf) -> float:
        """Two-sided Kolmogorov-Smirnov distance to a continuous ``cdf``."""
        n = len(self.values)
        f = np.asarray(cdf(self.values), float)
        i = np.arange(1, n + 1)
        return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def _ref_unit(reference):
    ref = reference.to_cartesian() if isinstance(reference, SpacePoint) else np.asarray(reference, float)
    return ref / np.linalg.norm(ref)


def contact_angles(samples, reference) -> np.ndarray:
    """Per realization, the central angle from ``reference`` to the nearest point."""
    ref = _ref_unit(reference)
    if isinstance(samples, PointBatch):
        batch = samples
        cos = kernels.nearest_cos(batch.xyz, batch.offsets, ref)
    else:
        samples = list(samples)
        counts = [len(s.xyz) for s in samples]
        offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        xyz = np.concatenate([np.asarray(s.xyz, float).reshape(-1, 3) for s in samples]) if samples else np.zeros((0, 3))
        cos = kernels.nearest_cos(xyz, offsets, ref)
    if np.any(np.isnan(cos)):
        raise TopologyError("contact angle undefined for an empty realization")
    return np.arccos(np.clip(cos, -1.0, 1.0))


def empirical_contact_angle(samples, reference) -> EmpiricalCDF:
    return EmpiricalCDF(np.sort(contact_angles(samples, reference)))


def cap_counts(batch: PointBatch, reference, theta_max) -> np.ndarray:
    """Per realization, the number of points within central angle ``theta_max``."""
    return kernels.count_in_cap(batch.xyz, batch.offsets, _ref_unit(reference), np.cos(theta_max))


def empirical_k_availability(batch: PointBatch, reference, k, theta_max):
    """Fraction of realizations with at least ``k`` points inside the cap, and its standard error."""
    hits = cap_counts(batch, reference, theta_max) >= k
    p = hits.mean()
    return float(p), float(np.sqrt(p * (1 - p) / len(hits)))


__all__ = [
    "TopologyParams", "TopologyError", "contact_angle_cdf", "contact_angle_pdf", "contact_distance_cdf",
    "availability", "k_availability", "EmpiricalCDF", "contact_angles", "empirical_contact_angle",
    "cap_counts", "empirical_k_availability", "ConstellationSample", "distance_to_central_angle",
]
