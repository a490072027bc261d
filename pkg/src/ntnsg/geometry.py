"""Exact geometry on and above a spherical Earth.

Angles are radians, lengths are in whatever unit the caller uses for the
radii (the library uses km for positions and converts to metres only inside
the link budget).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

R_EARTH_KM = 6371.0


class GeometryError(ValueError):
    """Raised when an input lies outside the domain of a geometric relation."""


@dataclass(frozen=True)
class SpacePoint:
    """Position in spherical coordinates about the Earth centre."""

    radius: float
    polar: float
    azimuth: float

    def to_cartesian(self) -> np.ndarray:
        return spherical_to_cartesian(self.radius, self.polar, self.azimuth)

    @classmethod
    def from_cartesian(cls, xyz) -> "SpacePoint":
        r, pol, az = cartesian_to_spherical(np.asarray(xyz, dtype=float))
        return cls(float(r), float(pol), float(az))


def spherical_to_cartesian(radius, polar, azimuth) -> np.ndarray:
    radius, polar, azimuth = np.broadcast_arrays(
        np.asarray(radius, float), np.asarray(polar, float), np.asarray(azimuth, float)
    )
    s = np.sin(polar)
    return np.stack(
        [radius * s * np.cos(azimuth), radius * s * np.sin(azimuth), radius * np.cos(polar)],
        axis=-1,
    )


def cartesian_to_spherical(xyz):
    """Inverse of :func:`spherical_to_cartesian`; azimuth is 0 on the z axis."""
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    rho = np.hypot(x, y)
    r = np.hypot(rho, z)
    polar = np.arctan2(rho, z)
    azimuth = np.where(rho > 0.0, np.mod(np.arctan2(y, x), 2.0 * np.pi), 0.0)
    # mod can return exactly 2*pi for tiny negative angles
    azimuth = np.where(azimuth >= 2.0 * np.pi, 0.0, azimuth)
    return r, polar, azimuth


def _check_radii(r_ntp, r_earth):
    if not (r_earth > 0 and r_ntp > 0):
        raise GeometryError(f"radii must be positive (r_ntp={r_ntp}, r_earth={r_earth})")
    if r_ntp < r_earth:
        raise GeometryError(f"r_ntp={r_ntp} lies below r_earth={r_earth}")


def central_angle_to_distance(theta_c, r_ntp, r_earth=R_EARTH_KM):
    """Euclidean user-to-platform distance for a given central angle (cosine rule)."""
    _check_radii(r_ntp, r_earth)
    theta_c = np.asarray(theta_c, dtype=float)
    # (r - R)^2 + 4 r R sin^2(theta/2) is the cancellation-free cosine rule
    d2 = (r_ntp - r_earth) ** 2 + 4.0 * r_ntp * r_earth * np.sin(0.5 * theta_c) ** 2
    out = np.sqrt(d2)
    return float(out) if out.ndim == 0 else out


def distance_to_central_angle(d, r_ntp, r_earth=R_EARTH_KM):
    """Inverse cosine rule. Raises :class:`GeometryError` for unreachable distances."""
    _check_radii(r_ntp, r_earth)
    d = np.asarray(d, dtype=float)
    lo, hi = r_ntp - r_earth, r_ntp + r_earth
    slack = 1e-12 * hi
    if np.any(d < lo - slack) or np.any(d > hi + slack):
        raise GeometryError(f"distance outside feasible interval [{lo}, {hi}]")
    s2 = (d * d - lo * lo) / (4.0 * r_ntp * r_earth)
    out = 2.0 * np.arcsin(np.sqrt(np.clip(s2, 0.0, 1.0)))
    return float(out) if out.ndim == 0 else out


def central_to_zenith(theta_c, r_ntp, r_earth=R_EARTH_KM):
    """Zenith angle seen by the user for a platform at central angle ``theta_c``.

    Evaluates ``arccot(cot(theta_c) - (r_earth / r_ntp) * sqrt(1 + cot^2(theta_c)))``
    with the arccot branch taken on (0, pi), which makes the result continuous
    and increasing in ``theta_c``. Below the horizon the zenith angle exceeds
    pi/2. Returns 0 at ``theta_c == 0``.
    """
    _check_radii(r_ntp, r_earth)
    theta_c = np.asarray(theta_c, dtype=float)
    if np.any((theta_c < 0) | (theta_c > np.pi)):
        raise GeometryError("central angle must lie in [0, pi]")
    # cot(tc) - k*csc(tc) = (cos tc - k) / sin tc, so arccot on (0, pi) is atan2(sin, cos - k)
    k = r_earth / r_ntp
    out = np.arctan2(np.sin(theta_c), np.cos(theta_c) - k)
    out = np.where(theta_c == 0.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def beam_apex_angle(theta_c, r_ntp, r_earth=R_EARTH_KM):
    """Full opening angle of a zenith-pointing receive beam whose edge meets the
    shell at central angle ``theta_c`` (twice the zenith angle)."""
    return 2.0 * central_to_zenith(theta_c, r_ntp, r_earth)


def cap_fraction(theta):
    """Fraction of the sphere inside a cap of half-angle ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0) | (theta > np.pi)):
        raise GeometryError("cap angle must lie in [0, pi]")
    out = np.sin(0.5 * theta) ** 2
    return float(out) if out.ndim == 0 else out


def horizon_central_angle(r_ntp, r_earth=R_EARTH_KM) -> float:
    """Largest central angle at which the user-platform segment clears the Earth."""
    _check_radii(r_ntp, r_earth)
    return math.acos(r_earth / r_ntp)


def max_distance_central_angle(d_max, r_ntp, r_earth=R_EARTH_KM) -> float:
    """Central-angle bound equivalent to a maximum reliable link distance."""
    d_max = min(max(d_max, r_ntp - r_earth), r_ntp + r_earth)
    return distance_to_central_angle(d_max, r_ntp, r_earth)


def rotation_to_pole(reference) -> np.ndarray:
    """Rotation matrix taking the direction of ``reference`` onto +z."""
    ref = reference.to_cartesian() if isinstance(reference, SpacePoint) else np.asarray(reference, float)
    norm = np.linalg.norm(ref)
    if norm == 0:
        raise GeometryError("reference point must be nonzero")
    a = ref / norm
    z = np.array([0.0, 0.0, 1.0])
    c = float(a @ z)
    v = np.cross(a, z)
    s = np.linalg.norm(v)
    if s < 1e-15:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    # Rodrigues with (1 - c) / s^2 = 1 / (1 + c) for accuracy near c = 1
    return np.eye(3) + vx + vx @ vx * (1.0 / (1.0 + c))


def rotate_to_pole(points, reference):
    """Rigidly rotate ``points`` so that ``reference`` lies on the +z axis.

    ``points`` may be a list of :class:`SpacePoint` (a list is returned) or an
    ``(n, 3)`` Cartesian array (an array is returned).
    """
    rot = rotation_to_pole(reference)
    if isinstance(points, np.ndarray):
        return points @ rot.T
    pts = list(points)
    if not pts:
        return []
    xyz = np.array([p.to_cartesian() for p in pts]) @ rot.T
    r, pol, az = cartesian_to_spherical(xyz)
    return [SpacePoint(float(a), float(b), float(c)) for a, b, c in zip(r, pol, az)]


def central_angles(xyz, reference) -> np.ndarray:
    """Central angle between each row of ``xyz`` and ``reference``."""
    xyz = np.atleast_2d(np.asarray(xyz, float))
    ref = np.asarray(reference, float)
    ref = ref / np.linalg.norm(ref)
    n = np.linalg.norm(xyz, axis=1)
    cross = np.linalg.norm(np.cross(xyz, ref), axis=1)
    return np.arctan2(cross, xyz @ ref) * (n > 0)
