import numpy as np
import pytest

from ariscomm.dynamics import (
    AirframeParams,
    UavState,
    apply_angle_variation,
    planar_acceleration,
    rotor_speed,
    step_kinematics,
    total_thrust,
)
from ariscomm.geometry import EulerAngles, rotation_matrix

PARAMS = AirframeParams()  # m=3, g=9.81, C_t=4.848e-5, C_d=(0.11, 0.11, 0.2)


class TestTotalThrust:
    def test_level_hover(self):
        assert total_thrust(EulerAngles(), PARAMS) == pytest.approx(29.43)

    def test_double_at_quarter_pi_tilt(self):
        e = EulerAngles(np.pi / 4, np.pi / 4, 1.3)
        assert total_thrust(e, PARAMS) == pytest.approx(58.86)

    def test_monotone_in_tilt(self):
        angles = np.linspace(0, np.pi / 4, 10)
        thrusts = [total_thrust(EulerAngles(a, 0.1, 0), PARAMS) for a in angles]
        assert all(t2 > t1 for t1, t2 in zip(thrusts, thrusts[1:]))

    def test_singularity_rejected(self):
        with pytest.raises(ValueError):
            total_thrust(EulerAngles(np.pi / 2, 0, 0), PARAMS)

    def test_vertical_force_balance(self):
        # thrust along the body axis exactly cancels gravity at any attitude
        rng = np.random.default_rng(31)
        for _ in range(100):
            e = EulerAngles(rng.uniform(-np.pi / 4, np.pi / 4),
                            rng.uniform(-np.pi / 4, np.pi / 4),
                            rng.uniform(0, 2 * np.pi))
            f = total_thrust(e, PARAMS)
            vertical = f * rotation_matrix(e)[2, 2]
            assert vertical == pytest.approx(PARAMS.mass * PARAMS.gravity, rel=1e-12)


class TestRotorSpeed:
    def test_level_value(self):
        # direct arithmetic: sqrt(29.43 / (4 * 4.848e-5))
        expected = np.sqrt(29.43 / 1.9392e-4)
        assert rotor_speed(EulerAngles(), PARAMS) == pytest.approx(expected)
        assert rotor_speed(EulerAngles(), PARAMS) == pytest.approx(389.6, abs=0.1)

    def test_scales_with_inverse_sqrt_cosines(self):
        level = rotor_speed(EulerAngles(), PARAMS)
        tilted = rotor_speed(EulerAngles(np.pi / 4, np.pi / 4, 0), PARAMS)
        assert tilted == pytest.approx(level * np.sqrt(2))
        assert tilted == pytest.approx(550.9, abs=0.1)

    def test_consistent_with_total_thrust(self):
        rng = np.random.default_rng(32)
        for _ in range(50):
            e = EulerAngles(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7), 0)
            w = rotor_speed(e, PARAMS)
            assert 4 * PARAMS.thrust_coeff * w**2 == pytest.approx(
                total_thrust(e, PARAMS), rel=1e-12)


class TestPlanarAcceleration:
    def test_level_hover_is_zero(self):
        a = planar_acceleration(EulerAngles(), [0.0, 0.0], PARAMS)
        assert np.allclose(a, [0.0, 0.0])

    def test_pure_pitch_gives_g_tan(self):
        for pitch in (0.1, 0.3, -0.5):
            a = planar_acceleration(EulerAngles(0, pitch, 0), [0, 0], PARAMS)
            assert a[0] == pytest.approx(PARAMS.gravity * np.tan(pitch))
            assert a[1] == pytest.approx(0.0, abs=1e-15)

    def test_quadratic_drag(self):
        a = planar_acceleration(EulerAngles(), [2.0, 0.0], PARAMS)
        assert a[0] == pytest.approx(-0.11 * 4 / 3)
        assert a[1] == pytest.approx(0.0)

    def test_drag_opposes_motion(self):
        rng = np.random.default_rng(33)
        for _ in range(50):
            v = rng.uniform(-10, 10, 2)
            a = planar_acceleration(EulerAngles(), v, PARAMS)
            for comp, vel in zip(a, v):
                if vel != 0:
                    assert np.sign(comp) == -np.sign(vel)


def make_state(**kw):
    defaults = dict(position=np.array([0.0, 0.0, 100.0]),
                    velocity=np.array([0.0, 0.0]),
                    euler=EulerAngles(), energy_remaining=9000.0)
    defaults.update(kw)
    return UavState(**defaults)


class TestStepKinematics:
    def test_worked_arithmetic(self):
        s = make_state(velocity=np.array([2.0, 0.0]))
        out = step_kinematics(s, [1.0, 0.0], 0.5)
        assert np.allclose(out.velocity, [2.5, 0.0])
        assert out.position[0] == pytest.approx(1.125)
        assert out.position[2] == 100.0  # altitude unchanged

    def test_uniform_motion(self):
        s = make_state(velocity=np.array([3.0, -1.0]))
        out = step_kinematics(s, [0.0, 0.0], 0.5)
        assert np.allclose(out.position[:2], [1.5, -0.5])

    def test_matches_substepped_integration(self):
        # constant acceleration: closed form equals any number of substeps
        s = make_state(velocity=np.array([1.0, 2.0]))
        a = np.array([0.7, -0.4])
        direct = step_kinematics(s, a, 0.5)
        sub = s
        for _ in range(10):
            sub = step_kinematics(sub, a, 0.05)
        assert np.allclose(direct.position, sub.position, atol=1e-12)
        assert np.allclose(direct.velocity, sub.velocity, atol=1e-12)

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            step_kinematics(make_state(), [0, 0], 0.0)


class TestApplyAngleVariation:
    def test_plain_addition(self):
        e = apply_angle_variation(EulerAngles(), (np.pi / 12, -np.pi / 12, np.pi / 12))
        assert e.roll == pytest.approx(np.pi / 12)
        assert e.pitch == pytest.approx(-np.pi / 12)
        assert e.yaw == pytest.approx(np.pi / 12)

    def test_clamped_at_margin(self):
        e = apply_angle_variation(EulerAngles(np.pi / 4, 0, 0), (np.pi / 12, 0, 0))
        assert e.roll == pytest.approx(np.pi / 4)

    def test_yaw_wraparound(self):
        e = apply_angle_variation(EulerAngles(0, 0, 2 * np.pi - 0.1), (0, 0, 0.2))
        assert e.yaw == pytest.approx(0.1)

    def test_clamp_idempotent(self):
        rng = np.random.default_rng(34)
        e = EulerAngles()
        for _ in range(200):
            d = rng.uniform(-np.pi / 12, np.pi / 12, 3)
            e = apply_angle_variation(e, d)
            assert abs(e.roll) <= np.pi / 4 + 1e-15
            assert abs(e.pitch) <= np.pi / 4 + 1e-15
            assert 0 <= e.yaw < 2 * np.pi
