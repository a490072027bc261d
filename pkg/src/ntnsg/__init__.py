"""Spherical stochastic geometry for non-terrestrial networks."""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    R_EARTH_KM,
    GeometryError,
    SpacePoint,
    beam_apex_angle,
    cap_fraction,
    central_angle_to_distance,
    central_to_zenith,
    distance_to_central_angle,
    horizon_central_angle,
    rotate_to_pole,
)
from .processes import (  # noqa: E402
    CPP,
    DSBPP,
    OGM,
    PLP,
    ConstellationSample,
    HomBPP,
    HomPPP,
    NonHomBPP,
    sample,
    sample_batch,
    cap_draws,
    sample_cap_bpp,
)
from .topology import (  # noqa: E402
    TopologyParams,
    availability,
    contact_angle_cdf,
    contact_angle_pdf,
    contact_distance_cdf,
    empirical_contact_angle,
    k_availability,
)
from .fading import (  # noqa: E402
    MixedLognormal,
    Nakagami,
    NoFading,
    PointingError,
    Rician,
    ShadowedRician,
    SRGammaApprox,
    sr_gamma_approx,
)
from .link import FlatTop, GaussianPattern, LinkParams, effective_gain, received_power, sinr, snr  # noqa: E402
from .engine import MetricConfig, MetricResult, coverage_probability, k_localizability, run_sweep  # noqa: E402
from .kernels import BACKEND  # noqa: E402
