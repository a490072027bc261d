"""Compiled vs numpy kernels on the engine's hot paths.

    python benchmarks/bench_kernels.py [--trials N] [--repeat R]

Also times one closed-form k-availability evaluation against the Monte Carlo
estimate it replaces.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ntnsg import kernels
from ntnsg.fading import ShadowedRician, sr_mixing_weights
from ntnsg.geometry import R_EARTH_KM, horizon_central_angle
from ntnsg.link import LinkParams, power_coefficient
from ntnsg.processes import DSBPP, HomBPP, sample_batch
from ntnsg.rng import stream
from ntnsg.topology import TopologyParams, empirical_k_availability, k_availability


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    impls = kernels.backends()
    radius = R_EARTH_KM + 20000.0
    rng = stream(0)
    batch = sample_batch(DSBPP(8, 4), radius, rng, args.trials)
    sr = ShadowedRician(1.29, 0.158, 19.4)
    w = sr.sample(rng, len(batch.xyz))
    user = np.array([0.0, 0.0, R_EARTH_KM])
    link = LinkParams.meo_downlink()
    coef = power_coefficient(link) * 1000.0 ** (-link.pathloss_exp)
    x = np.linspace(0.0, 40.0, 200_000)
    weights = sr_mixing_weights(sr)

    cases = {
        "link_trials (no interference)": lambda m: kernels.link_trials(
            batch.xyz, batch.offsets, user, w, coef=coef, alpha=2.0, noise=link.noise_power, threshold=1.0, k=6,
            impl=m),
        "link_trials (interference)": lambda m: kernels.link_trials(
            batch.xyz, batch.offsets, user, w, coef=coef, alpha=2.0, noise=link.noise_power, threshold=1.0, k=6,
            interference=True, impl=m),
        "nearest_cos": lambda m: kernels.nearest_cos(batch.xyz, batch.offsets, user, impl=m),
        "sr_cdf_series (2e5 points)": lambda m: kernels.sr_cdf_series(x, weights, impl=m),
        "log_hyp1f1 (2e5 points)": lambda m: kernels.log_hyp1f1(19.4, 1.0, x, 1e-12, 10_000, impl=m),
    }
    print(f"backends: {', '.join(impls)}; {args.trials} trials of {len(batch.xyz) // args.trials} points; "
          f"best of {args.repeat}")
    print(f"{'kernel':34s}" + "".join(f"{n:>12s}" for n in impls) + ("     speedup" if len(impls) > 1 else ""))
    for name, fn in cases.items():
        t = {n: best_of(lambda: fn(m), args.repeat) for n, m in impls.items()}
        line = f"{name:34s}" + "".join(f"{v * 1e3:10.2f}ms" for v in t.values())
        if "cython" in t and "numpy" in t:
            line += f"{t['numpy'] / t['cython']:11.1f}x"
        print(line)

    p = TopologyParams(100, R_EARTH_KM + 500.0)
    th = horizon_central_angle(p.r_ntp)
    t_cf = best_of(lambda: k_availability(4, th, p), args.repeat)
    mc = sample_batch(HomBPP(100), p.r_ntp, stream(1), 100_000)
    t_mc = best_of(lambda: empirical_k_availability(mc, [0, 0, 1.0], 4, th), 1)
    est, se = empirical_k_availability(mc, [0, 0, 1.0], 4, th)
    print(f"\nk-availability (N=100, 500 km, k=4): closed form {k_availability(4, th, p):.5f} in "
          f"{t_cf * 1e6:.0f} us; Monte Carlo 1e5 samples {est:.5f} +/- {se:.5f} in {t_mc * 1e3:.0f} ms "
          f"(sampling excluded); ratio {t_mc / t_cf:,.0f}x")


if __name__ == "__main__":
    main()
