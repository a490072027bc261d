"""Link-budget arithmetic in SI units (metres, watts, hertz, radians)."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import ClassVar

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


class LinkError(ValueError):
    pass


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, float))


def dbw_to_watts(x_dbw):
    return float(db_to_linear(x_dbw))


def dbm_to_watts(x_dbm):
    return float(db_to_linear(x_dbm - 30.0))


def watts_to_dbm(x):
    return float(linear_to_db(x) + 30.0)


@dataclass(frozen=True)
class LinkParams:
    """Linear-domain link parameters.

    Attributes
    ----------
    tx_power : float
        Transmit power in W.
    g_tx, g_rx : float
        Antenna gains (linear).
    carrier_freq : float
        Carrier frequency in Hz.
    extra_atten : float
        Additional attenuation ``zeta`` in (0, 1].
    pathloss_exp : float
        Path-loss exponent ``alpha`` in [2, 4].
    noise_power : float
        Noise power in W.
    sinr_threshold : float
        Detection threshold ``gamma`` (linear).
    """

    tx_power: float
    g_tx: float
    g_rx: float
    carrier_freq: float
    extra_atten: float = 1.0
    pathloss_exp: float = 2.0
    noise_power: float = 1e-13
    sinr_threshold: float = 1.0

    def __post_init__(self):
        if self.tx_power <= 0 or self.noise_power <= 0:
            raise LinkError("powers must be positive")
        if self.g_tx <= 0 or self.g_rx <= 0 or self.carrier_freq <= 0:
            raise LinkError("gains and carrier frequency must be positive")
        if not 0.0 < self.extra_atten <= 1.0:
            raise LinkError(f"extra_atten must lie in (0, 1], got {self.extra_atten}")
        if not 2.0 <= self.pathloss_exp <= 4.0:
            raise LinkError(f"pathloss_exp must lie in [2, 4], got {self.pathloss_exp}")
        if self.sinr_threshold < 0:
            raise LinkError("sinr_threshold must be >= 0")

    @classmethod
    def from_db(cls, tx_power_dbw, g_tx_dbi, g_rx_dbi, carrier_freq_hz, extra_atten_db=0.0,
                pathloss_exp=2.0, noise_power_dbm=-98.0, sinr_threshold_db=0.0):
        return cls(
            tx_power=dbw_to_watts(tx_power_dbw),
            g_tx=float(db_to_linear(g_tx_dbi)),
            g_rx=float(db_to_linear(g_rx_dbi)),
            carrier_freq=float(carrier_freq_hz),
            extra_atten=float(db_to_linear(extra_atten_db)),
            pathloss_exp=float(pathloss_exp),
            noise_power=dbm_to_watts(noise_power_dbm),
            sinr_threshold=float(db_to_linear(sinr_threshold_db)),
        )

    @classmethod
    def meo_downlink(cls, **overrides):
        """MEO GNSS-style downlink: 18 dBW, 20.9 dBi each side, 1.575 GHz, -2 dB, -98 dBm, 0 dB."""
        base = cls.from_db(18.0, 20.9, 20.9, 1.575e9, -2.0, 2.0, -98.0, 0.0)
        return replace(base, **overrides) if overrides else base

    def with_threshold(self, sinr_threshold):
        return replace(self, sinr_threshold=float(sinr_threshold))


def effective_gain(p: LinkParams) -> float:
    """``G = g_tx * g_rx * (c / (4 pi f_c))**2``."""
    lam = SPEED_OF_LIGHT / (4.0 * np.pi * p.carrier_freq)
    return p.g_tx * p.g_rx * lam * lam


def power_coefficient(p: LinkParams) -> float:
    """Everything in the received power except ``d**-alpha * w``."""
    return p.tx_power * effective_gain(p) * p.extra_atten


def _check_d(d):
    d = np.asarray(d, float)
    if np.any(d <= 0):
        raise LinkError("distance must be positive")
    return d


def received_power(p: LinkParams, d, w=1.0):
    """Received power in W for distance ``d`` in metres and fading gain ``w``."""
    d = _check_d(d)
    w = np.asarray(w, float)
    if np.any(w < 0):
        raise LinkError("fading gain must be >= 0")
    out = power_coefficient(p) * d ** (-p.pathloss_exp) * w
    return float(out) if np.ndim(out) == 0 else out


def snr(p: LinkParams, d, w=1.0):
    return received_power(p, d, w) / p.noise_power


def sinr(p: LinkParams, d, w=1.0, interference=0.0):
    interference = np.asarray(interference, float)
    if np.any(interference < 0):
        raise LinkError("interference must be >= 0")
    out = received_power(p, d, w) / (p.noise_power + interference)
    return float(out) if np.ndim(out) == 0 else out


def free_space_path_loss_db(d, carrier_freq):
    """FSPL in dB for ``d`` in metres."""
    return 20.0 * np.log10(4.0 * np.pi * np.asarray(d, float) * carrier_freq / SPEED_OF_LIGHT)


# -- antenna patterns -------------------------------------------------------


@dataclass(frozen=True)
class FlatTop:
    g_max: float
    half_power_bw: float
    name: ClassVar[str] = "flat-top"

    def __post_init__(self):
        _check_pattern(self)

    def gain(self, phi):
        phi = np.abs(np.asarray(phi, float))
        out = np.where(phi <= self.half_power_bw, self.g_max, 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GaussianPattern:
    g_max: float
    half_power_bw: float
    name: ClassVar[str] = "gaussian"

    def __post_init__(self):
        _check_pattern(self)

    def gain(self, phi):
        phi = np.asarray(phi, float)
        out = self.g_max * np.exp2(-(phi / self.half_power_bw) ** 2)
        return float(out) if out.ndim == 0 else out


def _check_pattern(pat):
    if pat.g_max <= 0 or not 0.0 < pat.half_power_bw < np.pi:
        raise LinkError(f"invalid antenna pattern {pat}")


PATTERN_TYPES = {cls.name: cls for cls in (FlatTop, GaussianPattern)}


def pattern_gain(pattern, phi):
    return pattern.gain(phi)


def off_boresight_nadir(xyz, user):
    """Angle at each platform between its nadir direction and the direction to ``user``."""
    xyz = np.asarray(xyz, float).reshape(-1, 3)
    to_user = np.asarray(user, float) - xyz
    nadir = -xyz
    c = np.einsum("ij,ij->i", to_user, nadir) / (np.linalg.norm(to_user, axis=1) * np.linalg.norm(nadir, axis=1))
    return np.arccos(np.clip(c, -1.0, 1.0))
