"""Rotor electrical power and per-slot flight energy accounting.

Each motor's electrical power is a quartic polynomial in its angular
velocity, P(w) = c4*w^4 + c3*w^3 + c2*w^2 + c1*w + c0, whose coefficients
derive from the no-load current/voltage, winding resistance, speed constant
and torque coefficient.  The speed w is in rad/s throughout; the rpm/V speed
constant enters through the back-EMF constant, and the rad/s -> rpm factor
30/pi is folded into c1 and c3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import AirframeParams, rotor_speed
from .geometry import EulerAngles


@dataclass(frozen=True)
class MotorConstants:
    no_load_current: float = 0.3      # A
    no_load_voltage: float = 10.0     # V
    resistance: float = 0.4           # ohm
    speed_constant: float = 380.0     # rpm/V
    torque_coeff: float = 8.891e-7    # N*m/(rad/s)^2

    # derived, filled in __post_init__
    k_e: float = field(init=False)    # back-EMF constant, (U0 - I0*R0)/(Kv*U0)
    k_t: float = field(init=False)    # torque constant, 9.55 * k_e
    c0: float = field(init=False)
    c1: float = field(init=False)
    c2: float = field(init=False)
    c3: float = field(init=False)
    c4: float = field(init=False)

    def __post_init__(self):
        i0, u0, r0 = self.no_load_current, self.no_load_voltage, self.resistance
        kv, cm = self.speed_constant, self.torque_coeff
        if min(i0, u0, r0, kv, cm) <= 0:
            raise ValueError("motor constants must be strictly positive")
        k_e = (u0 - i0 * r0) / (kv * u0)
        k_t = 9.55 * k_e
        object.__setattr__(self, "k_e", k_e)
        object.__setattr__(self, "k_t", k_t)
        object.__setattr__(self, "c0", i0 * i0 * r0)
        object.__setattr__(self, "c1", 30.0 * k_e * i0 / np.pi)
        object.__setattr__(self, "c2", 2.0 * cm * r0 * i0 / k_t)
        object.__setattr__(self, "c3", 30.0 * cm * k_e / (np.pi * k_t))
        object.__setattr__(self, "c4", cm * cm * r0 / (k_t * k_t))
        if min(self.c0, self.c1, self.c2, self.c3, self.c4) <= 0:
            raise ValueError("derived power coefficients must be positive")


def motor_power(omega: float, c: MotorConstants) -> float:
    """Electrical power of one motor at angular velocity ``omega`` (rad/s)."""
    if omega < 0:
        raise ValueError("angular velocity must be non-negative")
    return float(
        c.c4 * omega**4 + c.c3 * omega**3 + c.c2 * omega**2 + c.c1 * omega + c.c0
    )


def flight_power(e: EulerAngles, p: AirframeParams, c: MotorConstants) -> float:
    """Total four-rotor flight power at the given attitude, closed form.

    Equals 4 * motor_power(rotor_speed(e)); written here in terms of
    X = m*g / (C_t * cos(roll) * cos(pitch)) = 4 * w^2 so the attitude
    dependence is explicit.
    """
    if abs(e.roll) >= np.pi / 2 or abs(e.pitch) >= np.pi / 2:
        raise ValueError("roll/pitch at +-pi/2 is a thrust singularity")
    x = p.mass * p.gravity / (p.thrust_coeff * np.cos(e.roll) * np.cos(e.pitch))
    return float(
        c.c4 / 4.0 * x * x
        + c.c3 / 2.0 * x ** 1.5
        + c.c2 * x
        + 2.0 * c.c1 * np.sqrt(x)
        + 4.0 * c.c0
    )


def update_energy(energy_remaining: float, power: float, dt: float) -> float:
    """Remaining energy after one slot; may go negative (penalized upstream)."""
    if dt <= 0:
        raise ValueError("time step must be positive")
    return energy_remaining - power * dt


def hover_power(p: AirframeParams, c: MotorConstants) -> float:
    """Flight power at level attitude (the minimum over admissible tilts)."""
    return flight_power(EulerAngles(), p, c)


__all__ = [
    "MotorConstants",
    "motor_power",
    "flight_power",
    "update_energy",
    "hover_power",
    "rotor_speed",
]
