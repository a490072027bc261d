import math

import numpy as np
import pytest
from scipy.integrate import quad

from ntnsg.engine import (
    EngineConfigError,
    MetricConfig,
    SweepError,
    SweepPoint,
    coverage_probability,
    k_localizability,
    k_localizability_multi,
    point_seed,
    resolve_threads,
    run_sweep,
    simulate,
)
from ntnsg.fading import MixedLognormal, Nakagami, NoFading, ShadowedRician
from ntnsg.geometry import R_EARTH_KM, central_angle_to_distance, horizon_central_angle
from ntnsg.link import LinkParams, power_coefficient
from ntnsg.processes import DSBPP, HomBPP, HomPPP
from ntnsg.topology import TopologyParams, k_availability

R_LEO = R_EARTH_KM + 550.0
R_MEO = R_EARTH_KM + 20000.0
LEO_LINK = LinkParams.from_db(10.0, 30.0, 0.0, 2e9, 0.0, 2.0, -100.0, 0.0)


def within(res, exact, n_se=3.0, floor=1e-4):
    return abs(res.estimate - exact) <= n_se * max(res.std_error, floor)


def test_threshold_zero_is_availability():
    cfg = MetricConfig(trials=20_000, seed=1)
    link = LEO_LINK.with_threshold(0.0)
    res = coverage_probability(HomBPP(20), link, Nakagami(1.0), cfg, radius=R_LEO)
    exact = k_availability(1, horizon_central_angle(R_LEO), TopologyParams(20, R_LEO))
    assert within(res, exact)


@pytest.mark.parametrize("k", [1, 4, 6])
def test_threshold_zero_localizability_is_k_availability(k):
    cfg = MetricConfig(trials=20_000, seed=2, k=k)
    link = LinkParams.meo_downlink(sinr_threshold=0.0)
    res = k_localizability(HomBPP(24), link, ShadowedRician(1.29, 0.158, 19.4), cfg, radius=R_MEO)
    exact = k_availability(k, horizon_central_angle(R_MEO), TopologyParams(24, R_MEO))
    assert within(res, exact)


def test_threshold_infinite_gives_zero():
    cfg = MetricConfig(trials=3000, seed=3, k=2)
    link = LEO_LINK.with_threshold(1e300)
    assert coverage_probability(HomBPP(50), link, Nakagami(2.0), cfg, radius=R_LEO).estimate == 0.0
    assert k_localizability(HomBPP(50), link, Nakagami(2.0), cfg, radius=R_LEO).estimate == 0.0


def test_single_platform_nakagami_quadrature():
    # one uniform platform; success if visible and W > gamma N d^alpha / coef
    m = 2.0
    link = LinkParams.from_db(3.0, 30.0, 0.0, 2e9, 0.0, 2.0, -100.0, 0.0)
    coef = power_coefficient(link)
    th_h = horizon_central_angle(R_LEO)

    def integrand(t):
        d = central_angle_to_distance(t, R_LEO, R_EARTH_KM) * 1e3
        x = link.sinr_threshold * link.noise_power * d**2 / coef
        return (1.0 - Nakagami(m).cdf(x)) * 0.5 * math.sin(t)

    exact, _ = quad(integrand, 0.0, th_h, epsabs=1e-13, limit=200)
    # about half the visible cap fraction, so the fading law matters
    assert 0.01 < exact < 0.03
    cfg = MetricConfig(trials=400_000, seed=4)
    res = coverage_probability(HomBPP(1), link, Nakagami(m), cfg, radius=R_LEO)
    assert within(res, exact)


def test_k_zero_is_vacuous():
    cfg = MetricConfig(trials=100, seed=5, k=0)
    assert k_localizability(HomBPP(3), LEO_LINK, None, cfg, radius=R_LEO).estimate == 1.0
    multi = k_localizability_multi(HomBPP(3), LEO_LINK, None, cfg, (0, 1), radius=R_LEO)
    assert multi[0].estimate == 1.0 and multi[0].std_error == 0.0


def test_thread_invariance():
    spec, fad = DSBPP.from_total(27, 4), ShadowedRician(1.29, 0.158, 19.4)
    cfgs = [MetricConfig(trials=9000, seed=6, threads=t, interference="all_visible_others") for t in (1, 2, 4, 7)]
    tallies = [simulate(spec, LinkParams.meo_downlink(), fad, c, radius=R_MEO, ks=(1, 4, 6)) for c in cfgs]
    assert all(t == tallies[0] for t in tallies)


def test_env_threads(monkeypatch):
    monkeypatch.setenv("NTNSG_THREADS", "3")
    assert resolve_threads() == 3
    assert resolve_threads(2) == 2
    monkeypatch.setenv("NTNSG_THREADS", "x")
    with pytest.raises(EngineConfigError):
        resolve_threads()


def test_monotone_in_threshold():
    fad = Nakagami(1.5)
    prev = 1.0
    for thr_db in (-10, -3, 0, 3, 10):
        cfg = MetricConfig(trials=5000, seed=7)
        est = coverage_probability(HomBPP(30), LEO_LINK.with_threshold(10 ** (thr_db / 10)), fad, cfg,
                                   radius=R_LEO).estimate
        assert est <= prev
        prev = est


def test_monotone_in_k_same_draws():
    cfg = MetricConfig(trials=5000, seed=8)
    res = k_localizability_multi(DSBPP.from_total(28, 4), LinkParams.meo_downlink(), ShadowedRician(1.29, 0.158, 19.4),
                                 cfg, range(0, 10), radius=R_MEO)
    est = [res[k].estimate for k in range(10)]
    assert all(a >= b for a, b in zip(est, est[1:]))


def test_nearest_k_subset_is_stricter():
    base = dict(trials=5000, seed=9, k=4)
    fad = ShadowedRician(1.29, 0.158, 19.4)
    a = k_localizability(DSBPP(6, 4), LinkParams.meo_downlink(), fad, MetricConfig(subset="any", **base), radius=R_MEO)
    n = k_localizability(DSBPP(6, 4), LinkParams.meo_downlink(), fad, MetricConfig(subset="nearest", **base), radius=R_MEO)
    assert n.estimate <= a.estimate


def test_interference_and_mask_reduce_coverage():
    fad = Nakagami(1.0)
    base = coverage_probability(HomBPP(60), LEO_LINK, fad, MetricConfig(trials=5000, seed=10), radius=R_LEO)
    intf = coverage_probability(HomBPP(60), LEO_LINK, fad,
                                MetricConfig(trials=5000, seed=10, interference="all_visible_others"), radius=R_LEO)
    mask = coverage_probability(HomBPP(60), LEO_LINK, fad,
                                MetricConfig(trials=5000, seed=10, elevation_mask=math.radians(30)), radius=R_LEO)
    assert intf.estimate <= base.estimate and mask.estimate <= base.estimate


def test_no_fading_nearest_beats_random():
    cfg = dict(trials=5000, seed=11)
    link = LEO_LINK.with_threshold(10 ** 1.5)
    near = coverage_probability(HomBPP(40), link, NoFading(), MetricConfig(**cfg), radius=R_LEO)
    rand = coverage_probability(HomBPP(40), link, NoFading(), MetricConfig(association="random", **cfg), radius=R_LEO)
    assert near.estimate >= rand.estimate
    assert near.estimate > rand.estimate + 3 * math.hypot(near.std_error, rand.std_error)


def test_random_association_empty_process():
    with pytest.raises(EngineConfigError):
        coverage_probability(HomPPP(0.0), LEO_LINK, None, MetricConfig(association="random", trials=10), radius=R_LEO)


def test_visibility_off_counts_hidden_platforms():
    link = LEO_LINK.with_threshold(0.0)
    res = coverage_probability(HomBPP(1), link, None, MetricConfig(trials=2000, seed=12, visibility=False),
                               radius=R_LEO)
    assert res.estimate == 1.0


def test_mixed_lognormal_runs():
    fad = MixedLognormal(1.0, 2.0, 15.0, 8.0, 0.3)
    res = coverage_probability(HomBPP(40), LEO_LINK, fad, MetricConfig(trials=2000, seed=13), radius=R_LEO)
    assert 0.0 < res.estimate < 1.0


def test_result_echo():
    res = coverage_probability(HomBPP(5), LEO_LINK, Nakagami(1.0), MetricConfig(trials=100, seed=14, threads=2),
                               radius=R_LEO)
    assert res.config["seed"] == 14 and res.config["spec"]["type"] == "hom-bpp"
    assert "threads" not in res.config and res.trials == 100


def test_invalid_config():
    for bad in (dict(trials=0), dict(k=-1), dict(association="x"), dict(elevation_mask=2.0), dict(threads=0)):
        with pytest.raises(EngineConfigError):
            MetricConfig(**bad)
    with pytest.raises(EngineConfigError):
        simulate(HomBPP(1), LEO_LINK, None, MetricConfig(trials=1), radius=100.0)


class TestSweep:
    def grid(self):
        fad = ShadowedRician(1.29, 0.158, 19.4)
        return [SweepPoint(("meo", n), DSBPP.from_total(n, 4), LinkParams.meo_downlink(), fad, R_MEO) for n in (24, 26, 28)]

    def test_permutation_invariance(self):
        base = MetricConfig(trials=3000, seed=15, k=4)
        pts = self.grid()
        a = dict(run_sweep(pts, base))
        b = dict(run_sweep(pts[::-1], base))
        assert {k: v.estimate for k, v in a.items()} == {k: v.estimate for k, v in b.items()}
        assert a[("meo", 26)].config["seed"] == point_seed(15, ("meo", 26))

    def test_error_context(self):
        bad = [SweepPoint(("x",), HomBPP(3), LEO_LINK, None, 10.0)]
        with pytest.raises(SweepError) as ei:
            run_sweep(bad, MetricConfig(trials=10))
        assert ei.value.key == ("x",)

    def test_empty_grid(self):
        with pytest.raises(EngineConfigError):
            run_sweep([], MetricConfig(trials=10))
