"""Spherical point processes for constellation modelling.

Each process is a small frozen dataclass. ``sample(spec, radius, seed)``
draws one realization; ``sample_batch(spec, radius, rng, trials)`` draws many
at once into a ragged :class:`PointBatch` that the Monte Carlo kernels
consume. A batch of one trial uses exactly the same draws as ``sample``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .geometry import SpacePoint, cartesian_to_spherical
from .rng import as_generator, stream

TWO_PI = 2.0 * np.pi


class ProcessError(ValueError):
    pass


def _nonneg(name, value):
    if value < 0:
        raise ProcessError(f"{name} must be >= 0, got {value}")


def _angle(name, value):
    if not 0.0 <= value <= np.pi:
        raise ProcessError(f"{name} must lie in [0, pi], got {value}")


@dataclass(frozen=True)
class HomBPP:
    count: int
    name: ClassVar[str] = "hom-bpp"

    def __post_init__(self):
        _nonneg("count", self.count)


@dataclass(frozen=True)
class HomPPP:
    """Homogeneous PPP; ``mean_count`` = density * 4 pi R^2."""

    mean_count: float
    name: ClassVar[str] = "hom-ppp"

    def __post_init__(self):
        _nonneg("mean_count", self.mean_count)

    @classmethod
    def from_density(cls, density, radius):
        return cls(density * 4.0 * np.pi * radius**2)


@dataclass(frozen=True)
class NonHomBPP:
    """BPP with polar angle uniform on [0, pi): clusters near the poles."""

    count: int
    name: ClassVar[str] = "nonhom-bpp"

    def __post_init__(self):
        _nonneg("count", self.count)


@dataclass(frozen=True)
class CPP:
    mean_orbits: float
    mean_sats_per_orbit: float
    name: ClassVar[str] = "cpp"

    def __post_init__(self):
        _nonneg("mean_orbits", self.mean_orbits)
        _nonneg("mean_sats_per_orbit", self.mean_sats_per_orbit)


@dataclass(frozen=True)
class DSBPP:
    """Fixed orbit count with random orientation, random in-plane phases.

    ``total`` (optional) caps the satellite count: all orbits carry
    ``sats_per_orbit`` except the last, which carries the remainder.
    """

    orbits: int
    sats_per_orbit: int
    total: int | None = None
    name: ClassVar[str] = "dsbpp"

    def __post_init__(self):
        _nonneg("orbits", self.orbits)
        _nonneg("sats_per_orbit", self.sats_per_orbit)
        if self.total is not None and not (
            self.orbits * self.sats_per_orbit - self.sats_per_orbit < self.total <= self.orbits * self.sats_per_orbit
            or self.total == 0 == self.orbits
        ):
            raise ProcessError(
                f"total={self.total} inconsistent with {self.orbits} orbits x {self.sats_per_orbit}"
            )

    @classmethod
    def from_total(cls, total: int, sats_per_orbit: int = 4) -> "DSBPP":
        orbits = -(-total // sats_per_orbit)
        return cls(orbits, sats_per_orbit, total)

    def orbit_counts(self) -> np.ndarray:
        counts = np.full(self.orbits, self.sats_per_orbit, dtype=np.int64)
        if self.total is not None and self.orbits:
            counts[-1] = self.total - self.sats_per_orbit * (self.orbits - 1)
        return counts


@dataclass(frozen=True)
class OGM:
    """Equally spaced orbit azimuths at a common inclination.

    ``equal_spacing`` places satellites evenly around each orbit with a
    random per-orbit phase; otherwise phases are i.i.d. uniform.
    """

    orbits: int
    inclination: float
    sats_per_orbit: int
    equal_spacing: bool = False
    name: ClassVar[str] = "ogm"

    def __post_init__(self):
        _nonneg("orbits", self.orbits)
        _nonneg("sats_per_orbit", self.sats_per_orbit)
        _angle("inclination", self.inclination)


@dataclass(frozen=True)
class PLP:
    inclination: float
    sats: int
    name: ClassVar[str] = "plp"

    def __post_init__(self):
        _nonneg("sats", self.sats)
        _angle("inclination", self.inclination)


PROCESS_TYPES = {cls.name: cls for cls in (HomBPP, HomPPP, NonHomBPP, CPP, DSBPP, OGM, PLP)}


@dataclass(frozen=True)
class OrbitSpec:
    inclination: float
    azimuth: float
    radius: float

    def normal(self) -> np.ndarray:
        return orbit_normals(np.array([self.inclination]), np.array([self.azimuth]))[0]


@dataclass
class PointBatch:
    """Ragged collection of realizations: trial ``t`` owns ``xyz[offsets[t]:offsets[t+1]]``."""

    xyz: np.ndarray
    offsets: np.ndarray
    radius: float
    orbit_normals: np.ndarray | None = None  # per point, when the process has orbits

    @property
    def trials(self) -> int:
        return len(self.offsets) - 1

    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def trial(self, t: int) -> np.ndarray:
        return self.xyz[self.offsets[t] : self.offsets[t + 1]]


@dataclass
class ConstellationSample:
    shell_radius: float
    xyz: np.ndarray
    spec: object = None
    seed: int | None = None
    normals: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.xyz)

    @property
    def polar(self) -> np.ndarray:
        return cartesian_to_spherical(self.xyz)[1]

    @property
    def azimuth(self) -> np.ndarray:
        return cartesian_to_spherical(self.xyz)[2]

    @property
    def points(self) -> list[SpacePoint]:
        r, pol, az = cartesian_to_spherical(self.xyz)
        return [SpacePoint(float(a), float(b), float(c)) for a, b, c in zip(r, pol, az)]


# -- orbit geometry ---------------------------------------------------------


def orbit_normals(inclination, azimuth) -> np.ndarray:
    """Unit normal of the plane obtained by tilting the equator by ``inclination``
    about x, then rotating by ``azimuth`` about z."""
    si = np.sin(inclination)
    return np.stack([si * np.sin(azimuth), -si * np.cos(azimuth), np.cos(inclination)], axis=-1)


def orbit_positions(radius, inclination, azimuth, phase) -> np.ndarray:
    """Apply Rz(azimuth) @ Rx(inclination) to the in-plane point at ``phase``."""
    x = radius * np.cos(phase)
    y = radius * np.sin(phase)
    ci, si = np.cos(inclination), np.sin(inclination)
    y1, z1 = y * ci, y * si
    ca, sa = np.cos(azimuth), np.sin(azimuth)
    return np.stack([x * ca - y1 * sa, x * sa + y1 * ca, z1], axis=-1)


def _polar_points(radius, polar, azimuth):
    s = np.sin(polar)
    return np.stack(
        [radius * s * np.cos(azimuth), radius * s * np.sin(azimuth), radius * np.cos(polar)], axis=-1
    )


def _offsets(counts) -> np.ndarray:
    off = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=off[1:])
    return off


# -- batch samplers ---------------------------------------------------------


def _batch_hom_bpp(spec: HomBPP, radius, rng, trials):
    uv = rng.random((trials * spec.count, 2))
    az = TWO_PI * uv[:, 0]
    pol = np.arccos(1.0 - 2.0 * uv[:, 1])
    return PointBatch(_polar_points(radius, pol, az), _offsets(np.full(trials, spec.count)), radius)


def _batch_hom_ppp(spec: HomPPP, radius, rng, trials):
    counts = rng.poisson(spec.mean_count, trials)
    uv = rng.random((int(counts.sum()), 2))
    az = TWO_PI * uv[:, 0]
    pol = np.arccos(1.0 - 2.0 * uv[:, 1])
    return PointBatch(_polar_points(radius, pol, az), _offsets(counts), radius)


def _batch_nonhom_bpp(spec: NonHomBPP, radius, rng, trials):
    uv = rng.random((trials * spec.count, 2))
    az = TWO_PI * uv[:, 0]
    pol = np.pi * uv[:, 1]
    return PointBatch(_polar_points(radius, pol, az), _offsets(np.full(trials, spec.count)), radius)


def _batch_cpp(spec: CPP, radius, rng, trials):
    n_orb = rng.poisson(spec.mean_orbits, trials)
    n_total = int(n_orb.sum())
    lon = np.pi * rng.random(n_total)
    inc = np.arccos(1.0 - 2.0 * rng.random(n_total))
    per_orbit = rng.poisson(spec.mean_sats_per_orbit, n_total)
    phase = TWO_PI * rng.random(int(per_orbit.sum()))
    idx = np.repeat(np.arange(n_total), per_orbit)
    xyz = orbit_positions(radius, inc[idx], lon[idx], phase)
    orbit_off = _offsets(n_orb)
    sat_off = _offsets(per_orbit)
    return PointBatch(xyz, sat_off[orbit_off], radius, orbit_normals(inc, lon)[idx])


def _batch_dsbpp(spec: DSBPP, radius, rng, trials):
    counts = spec.orbit_counts()
    n_sat = int(counts.sum())
    inc = np.arccos(1.0 - 2.0 * rng.random((trials, spec.orbits)))
    azim = TWO_PI * rng.random((trials, spec.orbits))
    phase = TWO_PI * rng.random((trials, n_sat))
    idx = np.repeat(np.arange(spec.orbits), counts)
    inc_p, az_p = inc[:, idx].ravel(), azim[:, idx].ravel()
    xyz = orbit_positions(radius, inc_p, az_p, phase.ravel())
    return PointBatch(xyz, _offsets(np.full(trials, n_sat)), radius, orbit_normals(inc_p, az_p))


def _batch_ogm(spec: OGM, radius, rng, trials):
    n_sat = spec.orbits * spec.sats_per_orbit
    azim = TWO_PI * np.arange(spec.orbits) / max(spec.orbits, 1)
    if spec.equal_spacing:
        offset = TWO_PI * rng.random((trials, spec.orbits))
        slots = TWO_PI * np.arange(spec.sats_per_orbit) / max(spec.sats_per_orbit, 1)
        phase = (offset[:, :, None] + slots[None, None, :]).reshape(trials, n_sat)
    else:
        phase = TWO_PI * rng.random((trials, n_sat))
    az_p = np.tile(np.repeat(azim, spec.sats_per_orbit), trials)
    inc_p = np.full(trials * n_sat, spec.inclination)
    xyz = orbit_positions(radius, inc_p, az_p, phase.ravel())
    return PointBatch(xyz, _offsets(np.full(trials, n_sat)), radius, orbit_normals(inc_p, az_p))


def _batch_plp(spec: PLP, radius, rng, trials):
    azim = TWO_PI * rng.random(trials)
    phase = TWO_PI * rng.random((trials, spec.sats))
    az_p = np.repeat(azim, spec.sats)
    inc_p = np.full(trials * spec.sats, spec.inclination)
    xyz = orbit_positions(radius, inc_p, az_p, phase.ravel())
    return PointBatch(xyz, _offsets(np.full(trials, spec.sats)), radius, orbit_normals(inc_p, az_p))


_BATCHERS = {
    HomBPP: _batch_hom_bpp,
    HomPPP: _batch_hom_ppp,
    NonHomBPP: _batch_nonhom_bpp,
    CPP: _batch_cpp,
    DSBPP: _batch_dsbpp,
    OGM: _batch_ogm,
    PLP: _batch_plp,
}


def sample_batch(spec, radius: float, rng, trials: int) -> PointBatch:
    """Draw ``trials`` independent realizations of ``spec`` on a shell of ``radius``."""
    try:
        fn = _BATCHERS[type(spec)]
    except KeyError:
        raise ProcessError(f"unknown process spec {spec!r}") from None
    if trials < 0:
        raise ProcessError("trials must be >= 0")
    return fn(spec, float(radius), as_generator(rng), int(trials))


def sample(spec, radius: float, seed: int) -> ConstellationSample:
    batch = sample_batch(spec, radius, stream(seed), 1)
    return ConstellationSample(float(radius), batch.xyz, spec, int(seed), batch.orbit_normals)


# -- per-model entry points -------------------------------------------------


def sample_hom_bpp(count, radius, seed):
    return sample(HomBPP(count), radius, seed)


def sample_hom_ppp(mean_count, radius, seed):
    return sample(HomPPP(mean_count), radius, seed)


def sample_nonhom_bpp(count, radius, seed):
    return sample(NonHomBPP(count), radius, seed)


def sample_cpp(mean_orbits, mean_sats, radius, seed):
    return sample(CPP(mean_orbits, mean_sats), radius, seed)


def sample_dsbpp(orbits, sats_per_orbit, radius, seed):
    return sample(DSBPP(orbits, sats_per_orbit), radius, seed)


def sample_ogm(orbits, inclination, sats_per_orbit, radius, seed, equal_spacing=False):
    return sample(OGM(orbits, inclination, sats_per_orbit, equal_spacing), radius, seed)


def sample_plp(inclination, sats, radius, seed):
    return sample(PLP(inclination, sats), radius, seed)


def sample_cap_bpp(count, cap_half_angle, radius, seed):
    """Homogeneous BPP restricted to the cap of half-angle ``cap_half_angle`` about +z.

    Returns the sample and the polar-mapping uniforms, one per point, so a
    planar twin can be built from the same draws.
    """
    if not 0.0 < cap_half_angle <= np.pi:
        raise ProcessError("cap_half_angle must lie in (0, pi]")
    u, az = cap_draws(count, seed)
    pol = cap_polar_angle(u, cap_half_angle)
    sample_ = ConstellationSample(float(radius), _polar_points(radius, pol, az), ("cap-bpp", count, cap_half_angle), seed)
    return sample_, u


def cap_draws(count, seed):
    """Polar-mapping uniforms and azimuths behind :func:`sample_cap_bpp`."""
    _nonneg("count", count)
    draws = stream(seed).random((count, 2))
    return draws[:, 0], TWO_PI * draws[:, 1]


def cap_polar_angle(u, cap_half_angle):
    # 1 - cos(theta) == 2 sin^2(theta / 2); keeps small caps accurate
    one_minus_cos = 2.0 * math.sin(0.5 * cap_half_angle) ** 2
    return 2.0 * np.arcsin(np.sqrt(np.clip(0.5 * u * one_minus_cos, 0.0, 1.0)))
