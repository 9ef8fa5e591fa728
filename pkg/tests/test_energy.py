import numpy as np
import pytest

from ariscomm.dynamics import AirframeParams, rotor_speed
from ariscomm.energy import MotorConstants, flight_power, hover_power, motor_power, update_energy
from ariscomm.geometry import EulerAngles

PARAMS = AirframeParams()
MOTOR = MotorConstants()  # I0=0.3, U0=10, R0=0.4, Kv=380, Cm=8.891e-7


class TestCoefficients:
    def test_back_emf_and_torque_constants(self):
        # independent arithmetic from the defining ratios
        k_e = (10.0 - 0.3 * 0.4) / (380.0 * 10.0)
        assert MOTOR.k_e == pytest.approx(k_e)
        assert MOTOR.k_t == pytest.approx(9.55 * k_e)

    def test_polynomial_coefficients(self):
        i0, r0, cm = 0.3, 0.4, 8.891e-7
        k_e, k_t = MOTOR.k_e, MOTOR.k_t
        assert MOTOR.c0 == pytest.approx(i0 * i0 * r0)
        assert MOTOR.c0 == pytest.approx(0.036)
        assert MOTOR.c1 == pytest.approx(30 * k_e * i0 / np.pi)
        assert MOTOR.c2 == pytest.approx(2 * cm * r0 * i0 / k_t)
        assert MOTOR.c3 == pytest.approx(30 * cm * k_e / (np.pi * k_t))
        assert MOTOR.c4 == pytest.approx(cm * cm * r0 / (k_t * k_t))
        assert min(MOTOR.c0, MOTOR.c1, MOTOR.c2, MOTOR.c3, MOTOR.c4) > 0

    def test_bad_constants_rejected(self):
        with pytest.raises(ValueError):
            MotorConstants(no_load_current=-1.0)


class TestMotorPower:
    def test_zero_speed_is_no_load_floor(self):
        assert motor_power(0.0, MOTOR) == pytest.approx(0.036)

    def test_level_hover_value(self):
        # spreadsheet-style oracle: evaluate each polynomial term separately
        w = rotor_speed(EulerAngles(), PARAMS)
        expected = (MOTOR.c4 * w**4 + MOTOR.c3 * w**3 + MOTOR.c2 * w**2
                    + MOTOR.c1 * w + MOTOR.c0)
        assert motor_power(w, MOTOR) == pytest.approx(expected, rel=1e-14)
        assert motor_power(w, MOTOR) == pytest.approx(68.6, abs=0.1)

    def test_strictly_increasing(self):
        speeds = np.linspace(0, 800, 50)
        powers = [motor_power(w, MOTOR) for w in speeds]
        assert all(p2 > p1 for p1, p2 in zip(powers, powers[1:]))

    def test_negative_speed_rejected(self):
        with pytest.raises(ValueError):
            motor_power(-1.0, MOTOR)


class TestFlightPower:
    def test_level_value(self):
        assert flight_power(EulerAngles(), PARAMS, MOTOR) == pytest.approx(274.5, abs=0.5)
        assert hover_power(PARAMS, MOTOR) == flight_power(EulerAngles(), PARAMS, MOTOR)

    def test_closed_form_equals_four_motor_powers(self):
        # the dual route: compose rotor speed with the per-motor polynomial
        rng = np.random.default_rng(41)
        for _ in range(1000):
            e = EulerAngles(rng.uniform(-np.pi / 4, np.pi / 4),
                            rng.uniform(-np.pi / 4, np.pi / 4),
                            rng.uniform(0, 2 * np.pi))
            closed = flight_power(e, PARAMS, MOTOR)
            composed = 4.0 * motor_power(rotor_speed(e, PARAMS), MOTOR)
            assert abs(closed - composed) < 1e-9 * composed

    def test_minimized_at_level(self):
        base = flight_power(EulerAngles(), PARAMS, MOTOR)
        rng = np.random.default_rng(42)
        for _ in range(200):
            e = EulerAngles(rng.uniform(-np.pi / 4, np.pi / 4),
                            rng.uniform(-np.pi / 4, np.pi / 4), 0.0)
            assert flight_power(e, PARAMS, MOTOR) >= base - 1e-12

    def test_increasing_in_roll_magnitude(self):
        rolls = np.linspace(0, np.pi / 4, 12)
        powers = [flight_power(EulerAngles(r, 0.2, 0), PARAMS, MOTOR) for r in rolls]
        assert all(p2 > p1 for p1, p2 in zip(powers, powers[1:]))

    def test_singular_attitude_rejected(self):
        with pytest.raises(ValueError):
            flight_power(EulerAngles(0, np.pi / 2, 0), PARAMS, MOTOR)


class TestUpdateEnergy:
    def test_worked_arithmetic(self):
        assert update_energy(9000.0, 274.5, 0.5) == pytest.approx(8862.75)

    def test_zero_power(self):
        assert update_energy(1234.5, 0.0, 0.5) == 1234.5

    def test_sixty_level_slots(self):
        e = 9000.0
        p = flight_power(EulerAngles(), PARAMS, MOTOR)
        for _ in range(60):
            e = update_energy(e, p, 0.5)
        assert e == pytest.approx(766, abs=1.5)

    def test_telescoping(self):
        rng = np.random.default_rng(43)
        e = 9000.0
        total = 0.0
        for _ in range(60):
            att = EulerAngles(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7), 0)
            p = flight_power(att, PARAMS, MOTOR)
            total += p * 0.5
            e = update_energy(e, p, 0.5)
        assert 9000.0 - e == pytest.approx(total, rel=1e-9)

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            update_energy(1.0, 1.0, -0.5)
