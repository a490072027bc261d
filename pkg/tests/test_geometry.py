import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ntnsg.geometry import (
    R_EARTH_KM,
    GeometryError,
    SpacePoint,
    beam_apex_angle,
    cap_fraction,
    cartesian_to_spherical,
    central_angle_to_distance,
    central_angles,
    central_to_zenith,
    distance_to_central_angle,
    horizon_central_angle,
    rotate_to_pole,
    spherical_to_cartesian,
)

LEO = R_EARTH_KM + 500.0


def _zenith_3d(theta_c, r, R=R_EARTH_KM):
    # angle at the user between local vertical and the user->platform ray
    user = np.array([0.0, 0.0, R])
    p = np.array([r * math.sin(theta_c), 0.0, r * math.cos(theta_c)])
    v = p - user
    return math.acos(v[2] / np.linalg.norm(v))


class TestDistance:
    def test_endpoints(self):
        assert central_angle_to_distance(0.0, 6871, 6371) == pytest.approx(500.0, rel=1e-12)
        assert central_angle_to_distance(math.pi, 6871, 6371) == pytest.approx(13242.0, rel=1e-12)

    def test_quarter_turn_matches_vector_norm(self):
        # |(6871, 0, 0) - (0, 0, 6371)|, frozen from an mpmath evaluation
        assert central_angle_to_distance(math.pi / 2, 6871, 6371) == pytest.approx(9370.180467845857, rel=1e-9)
        v = np.array([6871.0, 0, 0]) - np.array([0, 0, 6371.0])
        assert central_angle_to_distance(math.pi / 2, 6871, 6371) == pytest.approx(np.linalg.norm(v), rel=1e-12)

    def test_inverse_endpoints(self):
        assert distance_to_central_angle(500.0, 6871, 6371) == pytest.approx(0.0, abs=1e-12)
        assert distance_to_central_angle(13242.0, 6871, 6371) == pytest.approx(math.pi, rel=1e-12)

    def test_round_trip_grid(self):
        th = np.linspace(0, math.pi, 1000)
        d = central_angle_to_distance(th, 6871, 6371)
        back = distance_to_central_angle(d, 6871, 6371)
        assert np.allclose(central_angle_to_distance(back, 6871, 6371), d, rtol=1e-9)
        assert np.allclose(back, th, atol=1e-7)

    def test_domain_errors(self):
        with pytest.raises(GeometryError):
            central_angle_to_distance(0.1, 6000, 6371)
        with pytest.raises(GeometryError):
            central_angle_to_distance(0.1, -1, 6371)
        with pytest.raises(GeometryError):
            distance_to_central_angle(100.0, 6871, 6371)
        with pytest.raises(GeometryError):
            distance_to_central_angle(20000.0, 6871, 6371)

    @given(st.floats(0, math.pi - 1e-6), st.floats(1e-6, 0.5), st.floats(10.0, 40000.0))
    def test_strictly_increasing(self, th, step, alt):
        r = R_EARTH_KM + alt
        a = central_angle_to_distance(th, r)
        b = central_angle_to_distance(min(th + step, math.pi), r)
        assert b > a


class TestZenith:
    def test_zero(self):
        assert central_to_zenith(0.0, LEO) == 0.0
        assert central_to_zenith(1e-9, LEO) < 1e-6

    def test_matches_3d_geometry_on_grid(self):
        for r in (R_EARTH_KM + 20, LEO, R_EARTH_KM + 20000):
            th = np.linspace(1e-4, math.pi - 1e-4, 1000)
            ref = np.array([_zenith_3d(t, r) for t in th])
            assert np.max(np.abs(central_to_zenith(th, r) - ref)) < 1e-6

    def test_leo_half_cap_angle(self):
        # exact 3-D value for theta_c = 1.8 deg at 500 km (mpmath): 23.489 deg
        assert math.degrees(central_to_zenith(math.radians(1.8), LEO)) == pytest.approx(23.48945559212306, abs=1e-9)

    def test_beam_apex_leo(self):
        # 2 * zenith(3.6 deg) at 500 km, mpmath: 83.1408 deg
        assert math.degrees(beam_apex_angle(math.radians(3.6), LEO)) == pytest.approx(83.14076628120688, abs=1e-8)

    def test_horizon_is_horizontal(self):
        for alt in (20, 500, 1200, 20000, 35786):
            r = R_EARTH_KM + alt
            assert central_to_zenith(horizon_central_angle(r), r) == pytest.approx(math.pi / 2, abs=1e-6)

    @given(st.floats(1e-4, math.pi - 1e-3), st.floats(1e-4, 0.2), st.floats(10.0, 40000.0))
    def test_increasing(self, th, step, alt):
        r = R_EARTH_KM + alt
        assert central_to_zenith(min(th + step, math.pi), r) > central_to_zenith(th, r)

    def test_bad_angle(self):
        with pytest.raises(GeometryError):
            central_to_zenith(-0.1, LEO)


class TestCap:
    def test_values(self):
        assert cap_fraction(0.0) == 0.0
        assert cap_fraction(math.pi) == pytest.approx(1.0, abs=1e-15)
        assert cap_fraction(math.pi / 2) == pytest.approx(0.5, abs=1e-15)

    @given(st.floats(0, math.pi))
    def test_complement(self, th):
        assert cap_fraction(th) + cap_fraction(math.pi - th) == pytest.approx(1.0, abs=1e-12)

    @given(st.floats(0, math.pi - 1e-3), st.floats(1e-3, 1.0))
    def test_increasing(self, th, step):
        assert cap_fraction(min(th + step, math.pi)) > cap_fraction(th)


class TestHorizon:
    def test_limits(self):
        assert horizon_central_angle(R_EARTH_KM) == 0.0
        assert horizon_central_angle(1e12) == pytest.approx(math.pi / 2, abs=1e-8)

    def test_leo_tangency(self):
        th = horizon_central_angle(LEO)
        assert th == pytest.approx(0.3838481952900163, abs=1e-12)  # mpmath acos(6371/6871)
        user = np.array([0.0, 0.0, R_EARTH_KM])
        p = np.array([LEO * math.sin(th), 0.0, LEO * math.cos(th)])
        # distance from the Earth center to the user->platform line equals R (tangent)
        d = np.linalg.norm(np.cross(p - user, -user)) / np.linalg.norm(p - user)
        assert d == pytest.approx(R_EARTH_KM, rel=1e-12)
        # and the segment direction is perpendicular to the local vertical
        assert abs(np.dot(p - user, user)) / (np.linalg.norm(p - user) * R_EARTH_KM) < 1e-12


class TestCoordinates:
    @given(st.floats(R_EARTH_KM, 50000), st.floats(1e-6, math.pi - 1e-6), st.floats(0, 2 * math.pi - 1e-9))
    def test_round_trip(self, r, pol, az):
        xyz = spherical_to_cartesian(r, pol, az)
        r2, pol2, az2 = cartesian_to_spherical(xyz)
        assert r2 == pytest.approx(r, rel=1e-9)
        assert pol2 == pytest.approx(pol, rel=1e-9, abs=1e-12)
        # azimuth is ill-conditioned near the poles
        if math.sin(pol) > 1e-6:
            d = (az2 - az + math.pi) % (2 * math.pi) - math.pi
            assert abs(d) < 1e-9 * max(1.0, az) / math.sin(pol)

    def test_pole_azimuth_zero(self):
        _, pol, az = cartesian_to_spherical(np.array([0.0, 0.0, 7000.0]))
        assert pol == 0.0 and az == 0.0
        p = SpacePoint.from_cartesian([0.0, 0.0, -7000.0])
        assert p.polar == pytest.approx(math.pi) and p.azimuth == 0.0

    def test_spacepoint(self):
        p = SpacePoint(7000.0, 1.0, 2.0)
        q = SpacePoint.from_cartesian(p.to_cartesian())
        assert q.radius == pytest.approx(7000.0) and q.polar == pytest.approx(1.0) and q.azimuth == pytest.approx(2.0)


class TestRotation:
    def _random_points(self, n, seed):
        rng = np.random.default_rng(seed)
        v = rng.normal(size=(n, 3))
        return v / np.linalg.norm(v, axis=1)[:, None] * 7000.0

    def test_identity_at_pole(self):
        pts = self._random_points(10, 1)
        out = rotate_to_pole(pts, np.array([0, 0, 1.0]))
        assert np.allclose(out, pts, atol=1e-9)

    def test_antipodal_reference(self):
        pts = self._random_points(10, 2)
        out = rotate_to_pole(pts, np.array([0, 0, -3.0]))
        ref_angles = central_angles(pts, [0, 0, -1.0])
        assert np.allclose(cartesian_to_spherical(out)[1], ref_angles, atol=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_pairwise_angles_preserved(self, seed):
        pts = self._random_points(100, seed)
        ref = self._random_points(1, seed + 100)[0]
        out = rotate_to_pole(pts, ref)
        g0 = pts @ pts.T / 7000.0**2
        g1 = out @ out.T / 7000.0**2
        assert np.max(np.abs(g0 - g1)) < 1e-9

    @pytest.mark.parametrize("seed", range(5))
    def test_polar_equals_central_angle(self, seed):
        pts = self._random_points(100, seed)
        ref = self._random_points(1, seed + 50)[0]
        dots = np.clip(pts @ ref / 7000.0**2, -1, 1)
        expected = np.arccos(dots)
        out = rotate_to_pole(pts, ref)
        assert np.allclose(cartesian_to_spherical(out)[1], expected, atol=1e-7)

    def test_spacepoint_list(self):
        pts = [SpacePoint(7000.0, 0.3, 1.0), SpacePoint(7000.0, 2.0, 4.0)]
        ref = SpacePoint(6371.0, 0.3, 1.0)
        out = rotate_to_pole(pts, ref)
        assert out[0].polar == pytest.approx(0.0, abs=1e-7)
        assert rotate_to_pole([], ref) == []

    def test_zero_reference(self):
        with pytest.raises(GeometryError):
            rotate_to_pole(self._random_points(3, 0), np.zeros(3))
