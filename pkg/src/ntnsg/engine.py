"""Seeded Monte Carlo evaluation of coverage probability and K-localizability.

Trials are cut into fixed-size chunks; chunk ``i`` draws everything from
substream ``(seed, i)``. Chunks are reduced by integer sums, so results are
bit-identical for any number of worker threads.
"""

from __future__ import annotations

import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np

from . import kernels
from .fading import MixedLognormal, NoFading, Rician
from .geometry import R_EARTH_KM
from .link import LinkParams, off_boresight_nadir, power_coefficient
from .processes import CPP, DSBPP, OGM, PLP, HomBPP, HomPPP, NonHomBPP, sample_batch
from .rng import derive_seed, stream

THREADS_ENV = "NTNSG_THREADS"
ASSOCIATIONS = ("nearest", "random")
INTERFERENCE = ("none", "all_visible_others")
SUBSETS = ("any", "nearest")
ALIGNMENTS = ("user", "nadir")


class EngineConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MetricConfig:
    """Monte Carlo settings.

    ``subset`` selects the K-localizability rule: ``"any"`` succeeds when at
    least ``k`` visible platforms clear the threshold, ``"nearest"`` when the
    ``k`` nearest visible ones all do. ``elevation_mask`` is in radians.
    ``threads=None`` reads ``NTNSG_THREADS`` and falls back to the CPU count.
    """

    trials: int = 10_000
    seed: int = 0
    association: str = "nearest"
    visibility: bool = True
    k: int = 1
    interference: str = "none"
    subset: str = "any"
    elevation_mask: float = 0.0
    user_polar: float = 0.0
    user_azimuth: float = 0.0
    alignment: str = "user"
    tx_pattern: Any = None
    threads: int | None = None
    chunk_size: int = 2048

    def __post_init__(self):
        if self.trials < 1:
            raise EngineConfigError("trials must be >= 1")
        if self.k < 0:
            raise EngineConfigError("k must be >= 0")
        if self.chunk_size < 1:
            raise EngineConfigError("chunk_size must be >= 1")
        for name, allowed in (("association", ASSOCIATIONS), ("interference", INTERFERENCE),
                              ("subset", SUBSETS), ("alignment", ALIGNMENTS)):
            if getattr(self, name) not in allowed:
                raise EngineConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if not 0.0 <= self.elevation_mask < math.pi / 2:
            raise EngineConfigError("elevation_mask must lie in [0, pi/2)")
        if self.threads is not None and self.threads < 1:
            raise EngineConfigError("threads must be >= 1")

    def echo(self) -> dict:
        """Settings that determine the result (thread count excluded)."""
        d = asdict(self)
        d.pop("threads")
        pat = self.tx_pattern
        d["tx_pattern"] = None if pat is None else {"type": pat.name, **asdict(pat)}
        return d


@dataclass
class MetricResult:
    estimate: float
    std_error: float
    trials: int
    config: dict = field(default_factory=dict)

    @classmethod
    def from_count(cls, successes: int, trials: int, config: dict):
        p = successes / trials
        return cls(p, math.sqrt(p * (1.0 - p) / trials), trials, config)


def resolve_threads(threads=None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise EngineConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def expected_count(spec) -> float:
    if isinstance(spec, (HomBPP, NonHomBPP)):
        return spec.count
    if isinstance(spec, HomPPP):
        return spec.mean_count
    if isinstance(spec, CPP):
        return spec.mean_orbits * spec.mean_sats_per_orbit
    if isinstance(spec, DSBPP):
        return float(spec.orbit_counts().sum())
    if isinstance(spec, OGM):
        return spec.orbits * spec.sats_per_orbit
    if isinstance(spec, PLP):
        return spec.sats
    raise EngineConfigError(f"unknown process spec {spec!r}")


# -- per-point fading -------------------------------------------------------


def fading_power(fading, rng, cos_c, radius, r_earth):
    """Power gain per point. ``cos_c`` is each point's central-angle cosine to the user."""
    n = len(cos_c)
    if fading is None or isinstance(fading, NoFading):
        return np.ones(n)
    if isinstance(fading, MixedLognormal):
        return np.asarray(fading.sample_linear_at(rng, cos_c, radius, r_earth), float).reshape(n)
    w = np.asarray(fading.sample(rng, n), float)
    if isinstance(fading, Rician):
        w = w * w  # envelope -> power
    return w


# -- core loop --------------------------------------------------------------


@dataclass
class _Job:
    spec: Any
    link: LinkParams
    fading: Any
    cfg: MetricConfig
    radius: float
    r_earth: float
    ks: tuple

    def user(self):
        c = self.cfg
        return self.r_earth * np.array([
            math.sin(c.user_polar) * math.cos(c.user_azimuth),
            math.sin(c.user_polar) * math.sin(c.user_azimuth),
            math.cos(c.user_polar),
        ])

    def run_chunk(self, index, n):
        cfg = self.cfg
        rng = stream(cfg.seed, index)
        batch = sample_batch(self.spec, self.radius, rng, n)
        user = self.user()
        u_hat = user / self.r_earth
        cos_c = (batch.xyz @ u_hat) / self.radius if len(batch.xyz) else np.zeros(0)
        w = fading_power(self.fading, rng, cos_c, self.radius, self.r_earth)
        if cfg.tx_pattern is not None and cfg.alignment == "nadir":
            w = w * cfg.tx_pattern.gain(off_boresight_nadir(batch.xyz, user)) / cfg.tx_pattern.g_max
        assoc_u = rng.random(n)

        coef = power_coefficient(self.link)
        if isinstance(self.fading, MixedLognormal):
            coef /= self.link.extra_atten  # the mixture already carries zeta
        alpha = self.link.pathloss_exp
        coef_km = coef * 1000.0 ** (-alpha)  # positions are in km
        sin_mask = math.sin(cfg.elevation_mask) if cfg.visibility else -2.0
        common = dict(coef=coef_km, alpha=alpha, noise=self.link.noise_power,
                      threshold=self.link.sinr_threshold, sin_mask=sin_mask,
                      interference=cfg.interference != "none", assoc_u=assoc_u)

        out = {}
        base = None
        ks = [k for k in self.ks if k > 0]
        for k in ks or [1]:
            res = kernels.link_trials(batch.xyz, batch.offsets, user, w, k=k, **common)
            if base is None:
                base = res
                out["cov_nearest"] = int(res["cov_nearest"].sum())
                out["cov_random"] = int(res["cov_random"].sum())
                out["n_visible"] = int(res["n_visible"].sum())
                out["no_visible"] = int((res["n_visible"] == 0).sum())
            out[("nearest", k)] = int(res["nearest_k_ok"].sum())
            out[("any", k)] = int((base["n_detected"] >= k).sum())
            out[("visible", k)] = int((base["n_visible"] >= k).sum())
        return out


def _chunks(trials, size):
    return [(i, min(size, trials - i * size)) for i in range((trials + size - 1) // size)]


def simulate(spec, link, fading, cfg: MetricConfig, *, radius, r_earth=R_EARTH_KM, ks=(1,)) -> dict:
    """Run all chunks and return summed integer tallies."""
    if radius < r_earth:
        raise EngineConfigError("shell radius must be >= r_earth")
    job = _Job(spec, link, fading, cfg, float(radius), float(r_earth), tuple(int(k) for k in ks))
    chunks = _chunks(cfg.trials, cfg.chunk_size)
    threads = min(resolve_threads(cfg.threads), len(chunks))
    if threads <= 1:
        parts = [job.run_chunk(i, n) for i, n in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: job.run_chunk(*c), chunks))
    total = {}
    for part in parts:
        for key, val in part.items():
            total[key] = total.get(key, 0) + val
    return total


def _echo(cfg, spec, link, fading, radius, r_earth, metric):
    return {
        "metric": metric,
        "spec": {"type": type(spec).name, **asdict(spec)},
        "link": asdict(link),
        "fading": None if fading is None else {"type": fading.name, **asdict(fading)},
        "radius_km": radius,
        "r_earth_km": r_earth,
        "backend": kernels.BACKEND,
        **cfg.echo(),
    }


def coverage_probability(spec, link: LinkParams, fading, cfg: MetricConfig, *, radius,
                         r_earth=R_EARTH_KM) -> MetricResult:
    """Fraction of trials where the associated visible platform's SINR exceeds the threshold.

    Trials with nothing visible count as failures.
    """
    if cfg.association == "random" and expected_count(spec) == 0:
        raise EngineConfigError("random association needs a process with a nonzero expected point count")
    tally = simulate(spec, link, fading, cfg, radius=radius, r_earth=r_earth, ks=(1,))
    hits = tally["cov_nearest"] if cfg.association == "nearest" else tally["cov_random"]
    return MetricResult.from_count(hits, cfg.trials, _echo(cfg, spec, link, fading, radius, r_earth, "coverage"))


def k_localizability(spec, link: LinkParams, fading, cfg: MetricConfig, *, radius,
                     r_earth=R_EARTH_KM) -> MetricResult:
    """Probability that ``cfg.k`` platforms are detected at once (see ``MetricConfig.subset``)."""
    echo = _echo(cfg, spec, link, fading, radius, r_earth, "localizability")
    if cfg.k == 0:
        return MetricResult(1.0, 0.0, cfg.trials, echo)
    tally = simulate(spec, link, fading, cfg, radius=radius, r_earth=r_earth, ks=(cfg.k,))
    return MetricResult.from_count(tally[(cfg.subset, cfg.k)], cfg.trials, echo)


def k_localizability_multi(spec, link, fading, cfg: MetricConfig, ks: Sequence[int], *, radius,
                           r_earth=R_EARTH_KM) -> dict:
    """Several ``k`` from one set of draws; returns ``{k: MetricResult}``."""
    tally = simulate(spec, link, fading, cfg, radius=radius, r_earth=r_earth, ks=tuple(ks))
    out = {}
    for k in ks:
        echo = _echo(replace(cfg, k=k), spec, link, fading, radius, r_earth, "localizability")
        if k == 0:
            out[k] = MetricResult(1.0, 0.0, cfg.trials, echo)
        else:
            out[k] = MetricResult.from_count(tally[(cfg.subset, k)], cfg.trials, echo)
    return out


# -- sweeps -----------------------------------------------------------------


@dataclass
class SweepPoint:
    """One grid point. ``key`` identifies it and fixes its seed, independent of grid order."""

    key: tuple
    spec: Any
    link: LinkParams
    fading: Any
    radius: float
    r_earth: float = R_EARTH_KM


class SweepError(RuntimeError):
    def __init__(self, key, cause):
        super().__init__(f"sweep point {key!r} failed: {cause}")
        self.key = key
        self.cause = cause


def point_seed(base_seed: int, key) -> int:
    return derive_seed(base_seed, zlib.crc32(repr(tuple(key)).encode()))


def run_sweep(points: Sequence[SweepPoint], base: MetricConfig, metric: str | Callable = "localizability"):
    """Evaluate ``metric`` at every point; returns ``[(key, MetricResult), ...]`` in input order."""
    if not points:
        raise EngineConfigError("sweep grid is empty")
    fn = {"coverage": coverage_probability, "localizability": k_localizability}.get(metric, metric)
    if not callable(fn):
        raise EngineConfigError(f"unknown metric {metric!r}")
    rows = []
    for pt in points:
        cfg = replace(base, seed=point_seed(base.seed, pt.key))
        try:
            res = fn(pt.spec, pt.link, pt.fading, cfg, radius=pt.radius, r_earth=pt.r_earth)
        except Exception as exc:  # keep the grid context
            raise SweepError(pt.key, exc) from exc
        rows.append((pt.key, res))
    return rows


__all__ = [
    "MetricConfig", "MetricResult", "EngineConfigError", "coverage_probability", "k_localizability",
    "k_localizability_multi", "simulate", "run_sweep", "SweepPoint", "SweepError", "point_seed",
    "resolve_threads", "fading_power",
]
