"""Case-study drivers: planar-approximation error and MEO K-localizability."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .engine import MetricConfig, k_localizability_multi, point_seed
from .fading import ShadowedRician
from .geometry import R_EARTH_KM, central_angle_to_distance
from .link import LinkParams
from .processes import DSBPP, cap_polar_angle, sample_cap_bpp
from .rng import derive_seed


class StudyError(ValueError):
    pass


# -- planar approximation ---------------------------------------------------


def planar_twin(cap_sample, uniforms, cap_half_angle, h_planar, azimuth=None):
    """Map a cap sample onto a disc at height ``h_planar`` (from the Earth center).

    Point ``n`` lands at cylindrical radius ``sqrt(u_n) * r * sin(theta_c)``
    with its spherical twin's azimuth, so the disc is area-uniform whenever
    the cap is. Pass the drawn ``azimuth`` values (see ``cap_draws``) to reuse
    them bit for bit; otherwise they are recovered from the sample.
    """
    r = cap_sample.shell_radius
    lo, hi = r * math.cos(cap_half_angle), r
    if not lo < h_planar < hi:
        raise StudyError(f"h_planar must lie in ({lo}, {hi}), got {h_planar}")
    u = np.asarray(uniforms, float)
    rho = np.sqrt(u) * r * math.sin(cap_half_angle)
    az = np.arctan2(cap_sample.xyz[:, 1], cap_sample.xyz[:, 0]) if azimuth is None else np.asarray(azimuth, float)
    return np.stack([rho * np.cos(az), rho * np.sin(az), np.full_like(rho, h_planar)], axis=-1)


def relative_error(cap_sample, planar_points, r_earth=R_EARTH_KM) -> float:
    """Mean relative distance error in percent, user on the surface below the cap apex."""
    user = np.array([0.0, 0.0, r_earth])
    d_sph = np.linalg.norm(cap_sample.xyz - user, axis=1)
    d_pla = np.linalg.norm(np.asarray(planar_points) - user, axis=1)
    return float(np.mean(np.abs(d_sph - d_pla) / d_sph) * 100.0)


class _ErrorSurface:
    """Trial-averaged relative error as a function of plane height, from shared uniforms."""

    def __init__(self, u, r, cap_half_angle, r_earth):
        self.u = np.asarray(u, float)
        theta = cap_polar_angle(self.u, cap_half_angle)
        self.d_sph = central_angle_to_distance(theta, r, r_earth)
        self.rho2 = self.u * (r * math.sin(cap_half_angle)) ** 2
        self.r_earth = r_earth

    def per_trial(self, h):
        d_pla = np.sqrt(self.rho2 + (h - self.r_earth) ** 2)
        return np.mean(np.abs(self.d_sph - d_pla) / self.d_sph, axis=-1) * 100.0

    def __call__(self, h):
        return float(np.mean(self.per_trial(h)))


def optimal_plane_height(u, cap_half_angle, radius, r_earth=R_EARTH_KM, rel_tol=1e-4, grid=64):
    """Minimize the trial-averaged error over ``h`` in ``(r cos theta_c, r)``.

    A coarse grid brackets the minimum; a bounded golden-section/parabolic
    search refines it. If the refined value is worse than the best grid
    point (a non-unimodal surface), the grid point wins.

    Returns ``(h, error_pct, per_trial_errors)``.
    """
    f = _ErrorSurface(u, radius, cap_half_angle, r_earth)
    lo, hi = radius * math.cos(cap_half_angle), float(radius)
    span = hi - lo
    if span <= 0:
        return hi, 0.0, np.zeros(np.atleast_2d(u).shape[0])
    hs = lo + span * (np.arange(1, grid + 1) - 0.5) / grid
    vals = np.array([f(h) for h in hs])
    i = int(np.argmin(vals))
    a = lo if i == 0 else hs[i - 1]
    b = hi if i == grid - 1 else hs[i + 1]
    res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 0.5 * rel_tol * span})
    h, e = (float(res.x), float(res.fun)) if res.fun <= vals[i] else (float(hs[i]), float(vals[i]))
    return h, e, f.per_trial(h)


def coupling_uniforms(n_ntp, trials, seed, cap_half_angle=math.pi / 2, radius=R_EARTH_KM + 500.0):
    """Polar-mapping uniforms of ``trials`` cap samples, shape ``(trials, n_ntp)``.

    Coupling ``t`` comes from seed ``derive_seed(seed, t)`` and is reused
    across the whole cap-angle grid.
    """
    return np.stack([sample_cap_bpp(n_ntp, cap_half_angle, radius, derive_seed(seed, t))[1]
                     for t in range(trials)]) if trials else np.zeros((0, n_ntp))


@dataclass
class PlanarStudyConfig:
    """Grid values are the figure's x axis in degrees.

    ``cap_angle_mode="half"`` uses each grid value as the cap half-angle
    itself, ``"full"`` halves it first.
    """

    n_ntp: int = 100
    altitudes: tuple = (20.0, 500.0, 20000.0)
    cap_angle_grid: tuple = tuple(float(x) for x in np.round(np.arange(0.25, 14.001, 0.25), 10))
    trials: int = 200
    seed: int = 0
    cap_angle_mode: str = "half"
    threshold_pct: float = 0.5
    r_earth: float = R_EARTH_KM

    def __post_init__(self):
        if self.n_ntp < 1:
            raise StudyError("n_ntp must be >= 1")
        if self.trials < 1:
            raise StudyError("trials must be >= 1")
        if self.cap_angle_mode not in ("half", "full"):
            raise StudyError("cap_angle_mode must be 'half' or 'full'")
        if not self.cap_angle_grid or any(not 0.0 < g <= 180.0 for g in self.cap_angle_grid):
            raise StudyError("cap_angle_grid values must lie in (0, 180] degrees")
        if any(a <= 0 for a in self.altitudes):
            raise StudyError("altitudes must be positive")

    def half_angle(self, grid_deg) -> float:
        x = math.radians(grid_deg)
        return x if self.cap_angle_mode == "half" else 0.5 * x


PLANAR_COLUMNS = ("altitude_km", "parameter", "estimate", "std_error", "h_opt_km", "theta_c_rad")


@dataclass
class PlanarStudyResult:
    config: PlanarStudyConfig
    rows: list = field(default_factory=list)

    def curve(self, altitude):
        rows = [r for r in self.rows if r["altitude_km"] == altitude]
        return np.array([r["parameter"] for r in rows]), np.array([r["estimate"] for r in rows])

    def crossing(self, altitude, level=None):
        """First grid value where the error reaches ``level``, linearly interpolated; NaN if never."""
        level = self.config.threshold_pct if level is None else level
        x, y = self.curve(altitude)
        return crossing(x, y, level)


def crossing(x, y, level) -> float:
    above = np.nonzero(np.asarray(y) >= level)[0]
    if len(above) == 0:
        return float("nan")
    j = int(above[0])
    if j == 0:
        return float(x[0])
    x0, x1, y0, y1 = x[j - 1], x[j], y[j - 1], y[j]
    return float(x0 + (level - y0) * (x1 - x0) / (y1 - y0))


def run_planar_study(cfg: PlanarStudyConfig) -> PlanarStudyResult:
    u = coupling_uniforms(cfg.n_ntp, cfg.trials, cfg.seed)
    out = PlanarStudyResult(cfg)
    for alt in cfg.altitudes:
        r = cfg.r_earth + alt
        for g in cfg.cap_angle_grid:
            tc = cfg.half_angle(g)
            h, e, per = optimal_plane_height(u, tc, r, cfg.r_earth)
            out.rows.append({
                "altitude_km": float(alt),
                "parameter": float(g),
                "estimate": e,
                "std_error": float(np.std(per, ddof=1) / math.sqrt(len(per))) if len(per) > 1 else 0.0,
                "h_opt_km": h,
                "theta_c_rad": tc,
            })
    return out


# -- K-localizability -------------------------------------------------------

LOCALIZABILITY_COLUMNS = ("altitude_km", "k", "parameter", "estimate", "std_error", "trials")


@dataclass
class LocalizabilityStudyConfig:
    sat_counts: tuple = tuple(range(24, 32))
    altitudes: tuple = (10000.0, 20000.0)
    k_values: tuple = (4, 6)
    link: LinkParams = field(default_factory=LinkParams.meo_downlink)
    sr: ShadowedRician = field(default_factory=lambda: ShadowedRician(1.29, 0.158, 19.4))
    sats_per_orbit: int = 4
    trials: int = 100_000
    seed: int = 0
    subset: str = "any"
    elevation_mask: float = 0.0
    interference: str = "none"
    r_earth: float = R_EARTH_KM
    threads: int | None = None
    chunk_size: int = 2048

    def __post_init__(self):
        if not self.sat_counts or min(self.sat_counts) < 1:
            raise StudyError("sat_counts must be >= 1")
        if self.sats_per_orbit < 1:
            raise StudyError("sats_per_orbit must be >= 1")
        if any(a <= 0 for a in self.altitudes):
            raise StudyError("altitudes must be positive")
        if any(k < 0 for k in self.k_values):
            raise StudyError("k_values must be >= 0")

    def metric_config(self) -> MetricConfig:
        return MetricConfig(trials=self.trials, seed=self.seed, subset=self.subset,
                            elevation_mask=self.elevation_mask, interference=self.interference,
                            threads=self.threads, chunk_size=self.chunk_size)


@dataclass
class LocalizabilityStudyResult:
    config: LocalizabilityStudyConfig
    rows: list = field(default_factory=list)

    def value(self, altitude, k, n):
        for r in self.rows:
            if r["altitude_km"] == altitude and r["k"] == k and r["parameter"] == n:
                return r["estimate"], r["std_error"]
        raise KeyError((altitude, k, n))

    def curve(self, altitude, k):
        rows = [r for r in self.rows if r["altitude_km"] == altitude and r["k"] == k]
        return np.array([r["parameter"] for r in rows]), np.array([r["estimate"] for r in rows])


def run_localizability_study(cfg: LocalizabilityStudyConfig) -> LocalizabilityStudyResult:
    base = cfg.metric_config()
    out = LocalizabilityStudyResult(cfg)
    for alt in cfg.altitudes:
        for n in cfg.sat_counts:
            spec = DSBPP.from_total(int(n), cfg.sats_per_orbit)
            mcfg = replace(base, seed=point_seed(cfg.seed, (float(alt), int(n))))
            res = k_localizability_multi(spec, cfg.link, cfg.sr, mcfg, cfg.k_values,
                                         radius=cfg.r_earth + alt, r_earth=cfg.r_earth)
            for k in cfg.k_values:
                out.rows.append({
                    "altitude_km": float(alt),
                    "k": int(k),
                    "parameter": int(n),
                    "estimate": res[k].estimate,
                    "std_error": res[k].std_error,
                    "trials": res[k].trials,
                })
    out.rows.sort(key=lambda r: (r["altitude_km"], r["k"], r["parameter"]))
    return out
