import numpy as np
import pytest

from ariscomm.geometry import (
    AngleOfView,
    EulerAngles,
    azimuth_elevation,
    direction_vector,
    incidence_cosine,
    rotation_matrix,
    surface_normal,
    wrap_angle,
)


def random_euler(rng):
    return EulerAngles(
        roll=rng.uniform(-np.pi / 4, np.pi / 4),
        pitch=rng.uniform(-np.pi / 4, np.pi / 4),
        yaw=rng.uniform(0, 2 * np.pi),
    )


class TestRotationMatrix:
    def test_zero_rotation_is_identity(self):
        assert np.allclose(rotation_matrix(EulerAngles()), np.eye(3))

    def test_pure_yaw_maps_x_to_y(self):
        r = rotation_matrix(EulerAngles(0, 0, np.pi / 2))
        assert np.allclose(r @ [1, 0, 0], [0, 1, 0], atol=1e-12)

    def test_orthonormal_with_unit_determinant(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            r = rotation_matrix(random_euler(rng))
            assert np.abs(r.T @ r - np.eye(3)).max() < 1e-12
            assert abs(np.linalg.det(r) - 1.0) < 1e-12


class TestSurfaceNormal:
    def test_level_points_down(self):
        assert np.allclose(surface_normal(EulerAngles()), [0, 0, -1])

    def test_quarter_pitch_is_horizontal(self):
        n = surface_normal(EulerAngles(0, np.pi / 2, 0))
        assert abs(n[2]) < 1e-12
        assert abs(np.linalg.norm(n) - 1) < 1e-12
        # equals R @ (0,0,-1)
        assert np.allclose(n, rotation_matrix(EulerAngles(0, np.pi / 2, 0)) @ [0, 0, -1])

    def test_unit_norm_everywhere(self):
        rng = np.random.default_rng(22)
        for _ in range(100):
            n = surface_normal(random_euler(rng))
            assert abs(n @ n - 1.0) < 1e-12


class TestAzimuthElevation:
    def test_directly_overhead(self):
        a = azimuth_elevation([0, 0, 0], [0, 0, 100])
        assert a.elevation == pytest.approx(np.pi / 2)
        assert a.azimuth == 0.0  # atan2(0, 0) convention

    def test_horizontal_along_x(self):
        a = azimuth_elevation([0, 0, 100], [100, 0, 100])
        assert a.elevation == pytest.approx(0.0)
        assert a.azimuth == pytest.approx(0.0)

    def test_plugging_coordinates(self):
        a = azimuth_elevation([100, 100, 10], [20, 20, 100])
        expected = np.arcsin(90 / np.sqrt(80**2 + 80**2 + 90**2))
        assert a.elevation == pytest.approx(expected, abs=1e-12)

    def test_coincident_positions_rejected(self):
        with pytest.raises(ValueError):
            azimuth_elevation([1, 2, 3], [1, 2, 3])


class TestDirectionVector:
    def test_along_x(self):
        assert np.allclose(direction_vector(AngleOfView(0, 0)), [1, 0, 0])

    def test_straight_up(self):
        assert np.allclose(direction_vector(AngleOfView(0, np.pi / 2)),
                           [0, 0, 1], atol=1e-12)

    def test_unit_norm(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            a = AngleOfView(rng.uniform(-np.pi, np.pi), rng.uniform(-np.pi / 2, np.pi / 2))
            assert abs(np.linalg.norm(direction_vector(a)) - 1.0) < 1e-12


class TestIncidenceCosine:
    def test_level_panel_source_below(self):
        assert incidence_cosine(EulerAngles(), AngleOfView(0, np.pi / 2)) == pytest.approx(1.0)

    def test_in_plane_trig_identity(self):
        # roll = yaw = 0, azimuth 0: reduces to sin(pitch + elevation)
        v = incidence_cosine(EulerAngles(0, np.pi / 6, 0), AngleOfView(0, np.pi / 3))
        assert v == pytest.approx(1.0, abs=1e-12)
        rng = np.random.default_rng(24)
        for _ in range(200):
            pitch = rng.uniform(-np.pi / 4, np.pi / 4)
            elev = rng.uniform(-np.pi / 2, np.pi / 2)
            v = incidence_cosine(EulerAngles(0, pitch, 0), AngleOfView(0, elev))
            assert v == pytest.approx(np.sin(pitch + elev), abs=1e-12)

    def test_source_above_level_panel_is_negative(self):
        v = incidence_cosine(EulerAngles(), AngleOfView(0, -np.pi / 4))
        assert v == pytest.approx(-np.sin(np.pi / 4))
        assert v < 0

    def test_level_panel_reduces_to_sin_elevation(self):
        rng = np.random.default_rng(25)
        for _ in range(100):
            a = AngleOfView(rng.uniform(-np.pi, np.pi), rng.uniform(-np.pi / 2, np.pi / 2))
            assert incidence_cosine(EulerAngles(), a) == pytest.approx(np.sin(a.elevation), abs=1e-12)

    def test_bounded(self):
        rng = np.random.default_rng(26)
        for _ in range(200):
            a = AngleOfView(rng.uniform(-np.pi, np.pi), rng.uniform(-np.pi / 2, np.pi / 2))
            assert -1.0 - 1e-12 <= incidence_cosine(random_euler(rng), a) <= 1.0 + 1e-12


def test_wrap_angle():
    assert wrap_angle(2 * np.pi - 0.1 + 0.2) == pytest.approx(0.1)
    assert wrap_angle(-0.1) == pytest.approx(2 * np.pi - 0.1)
    assert wrap_angle(2 * np.pi) == 0.0
