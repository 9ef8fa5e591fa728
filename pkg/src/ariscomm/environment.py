"""Episodic control task: fly reflecting panels to maximize multi-user rate.

One episode is L fixed-length slots.  Each slot the agent picks attitude
variations and per-sub-surface phases; the environment integrates the
quadrotor kinematics, redraws block-fading channels at the (optionally
perturbed) vehicle position, solves the base-station precoder by
zero-forcing water-filling, accumulates rates and energy, and assembles a
reward of the instantaneous sum-rate minus additive penalties for boundary,
speed, acceleration, inter-vehicle separation, and exhausted flight energy.

Baseline modes
--------------
proposed      full tilt-aware control (default)
fixed-ris     panel pinned level at (60, 60, H); attitude actions ignored
random-phase  phases drawn uniformly each slot; attitude actions still apply
no-tilt       vehicle flies, but the panel is held level for all gains
ignore-tilt   precoder and reward believe a level panel; reported rates use
              the true tilt (fading draws are shared between both views)
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .beamforming import solve_beamforming
from .channel import (
    ChannelRealization,
    GainModel,
    PanelGeometry,
    ReflectionState,
    RicianParams,
    achievable_rate,
    aris_gain,
    cascade_rows,
    sample_bs_ris_channel,
    sample_direct_channel,
    sample_ris_gu_channel,
    service_factor,
)
from .dynamics import (
    AirframeParams,
    UavState,
    apply_angle_variation,
    planar_acceleration,
    step_kinematics,
)
from .energy import MotorConstants, flight_power
from .geometry import EulerAngles, azimuth_elevation
from .numerics import RngStream, sample_complex_gaussian

MODES = ("proposed", "fixed-ris", "random-phase", "no-tilt", "ignore-tilt")
LEVEL = EulerAngles(0.0, 0.0, 0.0)
FIXED_RIS_XY = (60.0, 60.0)


@dataclass(frozen=True)
class RewardConfig:
    boundary_penalty: float = 10.0     # P1
    speed_penalty: float = 10.0        # P2
    accel_penalty: float = 10.0        # P3
    separation_penalty: float = 10.0   # P4
    energy_weight: float = 0.01        # omega, 1/J

    def __post_init__(self):
        if min(self.boundary_penalty, self.speed_penalty, self.accel_penalty,
               self.separation_penalty, self.energy_weight) < 0:
            raise ValueError("penalty magnitudes must be >= 0")


@dataclass
class Violations:
    boundary: int = 0
    speed: int = 0
    accel: int = 0
    separation: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict


@dataclass
class EnvConfig:
    num_gus: int = 8
    num_antennas: int = 8
    num_elements: int = 40
    elements_per_group: int = 10        # N = groups * elements_per_group
    altitude: float = 100.0
    area_min: tuple = (0.0, 0.0)
    area_max: tuple = (150.0, 150.0)
    bs_position: tuple = (100.0, 100.0, 10.0)
    start_position: tuple = (20.0, 20.0, 100.0)
    gu_positions: list | None = None    # [[x, y, 0], ...]; random per seed if None
    flight_duration: float = 30.0       # T, s
    num_slots: int = 60                 # L; slot length is T/L
    v_max: float = 15.0
    a_max: float = 5.0
    roll_max: float = np.pi / 4
    pitch_max: float = np.pi / 4
    roll_step_max: float = np.pi / 12
    pitch_step_max: float = np.pi / 12
    yaw_step_max: float = np.pi / 12
    energy_budget: float = 9000.0       # J
    bs_power_max: float = 20.0          # W
    noise_power: float = 1e-11          # W
    wavelength: float = 1.0
    airframe: AirframeParams = field(default_factory=AirframeParams)
    motor: MotorConstants = field(default_factory=MotorConstants)
    rician: RicianParams = field(default_factory=RicianParams)
    gain: GainModel = field(default_factory=GainModel)
    reward: RewardConfig = field(default_factory=RewardConfig)
    position_noise: float = 0.0         # epsilon_0, m
    num_aris: int = 1
    min_separation: float = 10.0        # m, multi-vehicle only
    mode: str = "proposed"
    rate_scale: float | None = None     # obs normalization; default 10*K*L

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.num_gus < 1 or self.num_antennas < 1:
            raise ValueError("need at least one GU and one antenna")
        if self.num_gus > self.num_antennas:
            raise ValueError("zero-forcing requires K <= M")
        if self.num_elements < 1 or self.elements_per_group < 1:
            raise ValueError("element counts must be >= 1")
        if self.num_elements % self.elements_per_group:
            raise ValueError("num_elements must be a multiple of elements_per_group")
        if self.num_slots < 1 or self.flight_duration <= 0:
            raise ValueError("need a positive flight duration and slot count")
        if not (self.area_min[0] <= self.start_position[0] <= self.area_max[0]
                and self.area_min[1] <= self.start_position[1] <= self.area_max[1]):
            raise ValueError("start position lies outside the flight area")
        if self.start_position[2] != self.altitude:
            raise ValueError("start position altitude must equal the flight altitude")
        if min(self.v_max, self.a_max, self.energy_budget, self.bs_power_max,
               self.noise_power, self.wavelength) <= 0:
            raise ValueError("v_max, a_max, energy, power, noise, wavelength must be positive")
        if self.position_noise < 0:
            raise ValueError("position_noise must be >= 0")
        if self.num_aris < 1:
            raise ValueError("num_aris must be >= 1")
        if self.gu_positions is not None and len(self.gu_positions) != self.num_gus:
            raise ValueError("gu_positions length must equal num_gus")

    @property
    def dt(self) -> float:
        return self.flight_duration / self.num_slots

    @property
    def num_groups(self) -> int:
        return self.num_elements // self.elements_per_group

    @property
    def area_side(self) -> float:
        return max(self.area_max[0] - self.area_min[0],
                   self.area_max[1] - self.area_min[1])

    @property
    def rate_norm(self) -> float:
        if self.rate_scale is not None:
            return self.rate_scale
        return 10.0 * self.num_gus * self.num_slots


def perturb_position(q, epsilon_0: float, rng: RngStream) -> np.ndarray:
    """Gaussian position error N(0, eps^2 I3); affects the vertical axis too."""
    if epsilon_0 < 0:
        raise ValueError("epsilon_0 must be >= 0")
    q = np.asarray(q, dtype=float)
    if epsilon_0 == 0.0:
        return q.copy()
    return q + epsilon_0 * rng.gen.standard_normal(3)


def check_separation(positions, d_min: float) -> list[tuple[int, int]]:
    """Unordered vehicle pairs closer than d_min (boundary distance is fine)."""
    positions = [np.asarray(p, dtype=float) for p in positions]
    bad = []
    for i in range(len(positions)):
        for j in range(i + 1, len(positions)):
            if np.sum((positions[i] - positions[j]) ** 2) < d_min**2:
                bad.append((i, j))
    return bad


def compute_reward(rate_sum: float, violations: Violations, energy_remaining,
                   slot: int, num_slots: int, cfg: RewardConfig) -> float:
    """Instantaneous sum-rate minus additive penalties.

    Penalty branches compose when several fire at once; the energy term
    omega * E_res only applies before the final slot and once per vehicle
    with negative remaining energy.
    """
    r = rate_sum
    r -= cfg.boundary_penalty * violations.boundary
    if slot < num_slots:
        for e in np.atleast_1d(np.asarray(energy_remaining, dtype=float)):
            if e < 0:
                r += cfg.energy_weight * e
    r -= cfg.speed_penalty * violations.speed
    r -= cfg.accel_penalty * violations.accel
    r -= cfg.separation_penalty * violations.separation
    return float(r)


class ArisEnv:
    """Single- or multi-vehicle episodic environment.

    Observations are normalized per vehicle: three Euler angles / pi, three
    position components / area side, two velocity components / v_max, the
    cumulative rate / rate_norm, and remaining energy / budget (10 numbers
    per vehicle).  Actions per vehicle are three attitude variations within
    the safety steps plus one phase in [0, 2*pi) per sub-surface.
    """

    def __init__(self, cfg: EnvConfig, seed: int = 0):
        self.cfg = cfg
        self.geom = PanelGeometry(cfg.num_antennas, cfg.num_elements, cfg.wavelength)
        self._states: list[UavState] = []
        self._slot = 0
        self._rate_cum = 0.0
        self._done = True
        self._gu_positions = None
        self._seed(seed)

    # ------------------------------------------------------------------ setup

    def _seed(self, seed: int):
        root = RngStream(seed)
        self._rng_gu = root.child(1)
        self._rng_fading = root.child(2)
        self._rng_perturb = root.child(3)
        self._rng_phase = root.child(4)
        self._draw_gu_layout()

    def _draw_gu_layout(self):
        cfg = self.cfg
        if cfg.gu_positions is not None:
            self._gu_positions = np.asarray(cfg.gu_positions, dtype=float)
            return
        lo = np.asarray(cfg.area_min, dtype=float)
        hi = np.asarray(cfg.area_max, dtype=float)
        xy = self._rng_gu.gen.uniform(lo, hi, size=(cfg.num_gus, 2))
        self._gu_positions = np.hstack([xy, np.zeros((cfg.num_gus, 1))])

    @property
    def gu_positions(self) -> np.ndarray:
        return self._gu_positions.copy()

    @property
    def obs_dim(self) -> int:
        return 10 * self.cfg.num_aris

    @property
    def action_dim(self) -> int:
        return (3 + self.cfg.num_groups) * self.cfg.num_aris

    @property
    def action_low(self) -> np.ndarray:
        cfg = self.cfg
        per = np.concatenate([
            [-cfg.roll_step_max, -cfg.pitch_step_max, -cfg.yaw_step_max],
            np.zeros(cfg.num_groups),
        ])
        return np.tile(per, cfg.num_aris)

    @property
    def action_high(self) -> np.ndarray:
        cfg = self.cfg
        per = np.concatenate([
            [cfg.roll_step_max, cfg.pitch_step_max, cfg.yaw_step_max],
            np.full(cfg.num_groups, 2.0 * np.pi),
        ])
        return np.tile(per, cfg.num_aris)

    def _initial_positions(self) -> list[np.ndarray]:
        cfg = self.cfg
        if cfg.mode == "fixed-ris":
            base = np.array([FIXED_RIS_XY[0], FIXED_RIS_XY[1], cfg.altitude])
        else:
            base = np.asarray(cfg.start_position, dtype=float)
        if cfg.num_aris == 1:
            return [base]
        step = 1.5 * cfg.min_separation * np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
        out = []
        for i in range(cfg.num_aris):
            p = base + i * step
            p[0] = np.clip(p[0], cfg.area_min[0], cfg.area_max[0])
            p[1] = np.clip(p[1], cfg.area_min[1], cfg.area_max[1])
            out.append(p)
        return out

    def reset(self, seed: int | None = None) -> np.ndarray:
        """Start a new episode; reseeding also redraws the GU layout."""
        if seed is not None:
            self._seed(seed)
        cfg = self.cfg
        self._states = [
            UavState(position=p, velocity=np.zeros(2), euler=LEVEL,
                     energy_remaining=cfg.energy_budget, rate_cum=0.0)
            for p in self._initial_positions()
        ]
        self._slot = 0
        self._rate_cum = 0.0
        self._done = False
        return self._observe()

    # ------------------------------------------------------------- observation

    def _observe(self) -> np.ndarray:
        cfg = self.cfg
        lo = np.asarray(cfg.area_min, dtype=float)
        blocks = []
        for st in self._states:
            blocks.append(np.concatenate([
                st.euler.as_array() / np.pi,
                np.array([
                    (st.position[0] - lo[0]) / cfg.area_side,
                    (st.position[1] - lo[1]) / cfg.area_side,
                    st.position[2] / cfg.area_side,
                ]),
                st.velocity / cfg.v_max,
                [self._rate_cum / cfg.rate_norm],
                [st.energy_remaining / cfg.energy_budget],
            ]))
        return np.concatenate(blocks)

    # ------------------------------------------------------------------- step

    def _parse_action(self, action) -> tuple[list[np.ndarray], list[np.ndarray]]:
        cfg = self.cfg
        action = np.asarray(action, dtype=float).ravel()
        if action.size != self.action_dim:
            raise ValueError(f"action has size {action.size}, expected {self.action_dim}")
        lo, hi = self.action_low, self.action_high
        if np.any(action < lo - 1e-9) or np.any(action > hi + 1e-9):
            raise ValueError("action out of bounds")
        width = 3 + cfg.num_groups
        d_angles, phases = [], []
        for i in range(cfg.num_aris):
            block = action[i * width:(i + 1) * width]
            d_angles.append(block[:3])
            phases.append(np.mod(block[3:], 2.0 * np.pi))
        return d_angles, phases

    def _draw_fading(self):
        cfg = self.cfg
        rng = self._rng_fading
        nlos_bs = [sample_complex_gaussian(rng, cfg.num_antennas, cfg.num_elements)
                   for _ in range(cfg.num_aris)]
        nlos_gu = [sample_complex_gaussian(rng, cfg.num_gus, cfg.num_elements)
                   for _ in range(cfg.num_aris)]
        direct = np.zeros((cfg.num_gus, cfg.num_antennas), dtype=complex)
        for k in range(cfg.num_gus):
            direct[k] = sample_direct_channel(
                rng, cfg.num_antennas, cfg.bs_position,
                self._gu_positions[k], cfg.rician)
        return nlos_bs, nlos_gu, direct

    def _assemble_channels(self, positions, eulers, nlos_bs, nlos_gu, direct):
        cfg = self.cfg
        out = []
        for i in range(cfg.num_aris):
            h_bs = sample_bs_ris_channel(
                self._rng_fading, self.geom, positions[i], cfg.bs_position,
                eulers[i], cfg.rician, nlos=nlos_bs[i])
            rows = np.empty((cfg.num_gus, cfg.num_elements), dtype=complex)
            for k in range(cfg.num_gus):
                rows[k] = sample_ris_gu_channel(
                    self._rng_fading, self.geom, positions[i],
                    self._gu_positions[k], eulers[i], cfg.rician,
                    nlos=nlos_gu[i][k])
            out.append(ChannelRealization(bs_ris=h_bs, ris_gu=rows, direct=direct))
        return out

    def _gains_and_kappa(self, positions, eulers, reflections):
        cfg = self.cfg
        gains = []
        kappa = np.zeros((cfg.num_aris, cfg.num_gus))
        for i in range(cfg.num_aris):
            aov_bs = azimuth_elevation(cfg.bs_position, positions[i])
            per_gu = []
            for k in range(cfg.num_gus):
                aov_k = azimuth_elevation(self._gu_positions[k], positions[i])
                per_gu.append(aris_gain(eulers[i], aov_bs, aov_k,
                                        reflections[i], cfg.gain))
                kappa[i, k] = service_factor(eulers[i], aov_bs, aov_k, cfg.gain)
            gains.append(per_gu)
        return gains, kappa

    def _effective(self, channels, gains) -> np.ndarray:
        v = np.conj(channels[0].direct).astype(complex)
        for ch, g in zip(channels, gains):
            v = v + cascade_rows(ch, g)
        return v

    def step(self, action) -> StepResult:
        """Advance one slot; see the module docstring for the update order."""
        if self._done:
            raise RuntimeError("episode is over; call reset() first")
        cfg = self.cfg
        d_angles, phases = self._parse_action(action)
        if cfg.mode == "random-phase":
            phases = [self._rng_phase.gen.uniform(0.0, 2.0 * np.pi, cfg.num_groups)
                      for _ in range(cfg.num_aris)]
        reflections = [ReflectionState(p, cfg.elements_per_group) for p in phases]

        violations = Violations()
        new_states = []
        accel_norms = []
        for i, st in enumerate(self._states):
            if cfg.mode == "fixed-ris":
                st2 = st.copy()
                st2.velocity = np.zeros(2)
                st2.euler = LEVEL
                accel_norms.append(0.0)
                new_states.append(st2)
                continue
            euler = apply_angle_variation(st.euler, d_angles[i],
                                          cfg.roll_max, cfg.pitch_max)
            accel = planar_acceleration(euler, st.velocity, cfg.airframe)
            st2 = step_kinematics(st, accel, cfg.dt)
            st2.euler = euler
            accel_norms.append(float(np.linalg.norm(accel)))
            if accel_norms[-1] > cfg.a_max + 1e-12:
                violations.accel += 1
            speed = float(np.linalg.norm(st2.velocity))
            if speed > cfg.v_max + 1e-12:
                violations.speed += 1
                st2.velocity *= cfg.v_max / speed
            breached = False
            for axis in (0, 1):
                if st2.position[axis] < cfg.area_min[axis]:
                    st2.position[axis] = cfg.area_min[axis]
                    st2.velocity[axis] = max(st2.velocity[axis], 0.0)
                    breached = True
                elif st2.position[axis] > cfg.area_max[axis]:
                    st2.position[axis] = cfg.area_max[axis]
                    st2.velocity[axis] = min(st2.velocity[axis], 0.0)
                    breached = True
            if breached:
                violations.boundary += 1
            new_states.append(st2)

        if cfg.num_aris > 1:
            pairs = check_separation([s.position for s in new_states],
                                     cfg.min_separation)
            violations.separation = len(pairs)

        # channel geometry uses the realized (perturbed) position
        realized = [perturb_position(s.position, cfg.position_noise, self._rng_perturb)
                    for s in new_states]

        nlos_bs, nlos_gu, direct = self._draw_fading()
        panel_eulers = [LEVEL if cfg.mode == "no-tilt" else s.euler for s in new_states]
        channels = self._assemble_channels(realized, panel_eulers,
                                           nlos_bs, nlos_gu, direct)
        gains, kappa = self._gains_and_kappa(realized, panel_eulers, reflections)
        v_true = self._effective(channels, gains)

        if cfg.mode == "ignore-tilt":
            level = [LEVEL] * cfg.num_aris
            ch_level = self._assemble_channels(realized, level,
                                               nlos_bs, nlos_gu, direct)
            gains_level, kappa_level = self._gains_and_kappa(realized, level,
                                                             reflections)
            v_opt = self._effective(ch_level, gains_level)
            kappa_bf = kappa_level.max(axis=0)
        else:
            v_opt = v_true
            kappa_bf = kappa.max(axis=0)

        sol = solve_beamforming(v_opt, cfg.noise_power, cfg.bs_power_max,
                                kappa_bf, kappa_min=cfg.gain.service_threshold)
        rates_real = achievable_rate(v_true, sol.weights, cfg.noise_power)
        if cfg.mode == "ignore-tilt":
            rates_belief = achievable_rate(v_opt, sol.weights, cfg.noise_power)
        else:
            rates_belief = rates_real
        r_bar = float(rates_belief.sum())

        powers = []
        for st2 in new_states:
            p_fly = flight_power(st2.euler, cfg.airframe, cfg.motor)
            st2.energy_remaining -= p_fly * cfg.dt
            powers.append(p_fly)

        self._slot += 1
        self._rate_cum += r_bar
        for st2 in new_states:
            st2.rate_cum = self._rate_cum
        self._states = new_states

        energies = np.array([s.energy_remaining for s in new_states])
        reward = compute_reward(r_bar, violations, energies, self._slot,
                                cfg.num_slots, cfg.reward)
        self._done = self._slot >= cfg.num_slots or bool(np.any(energies < 0))

        info = {
            "slot": self._slot,
            "rates": rates_real.tolist(),
            "sum_rate": float(rates_real.sum()),
            "rates_believed": rates_belief.tolist(),
            "positions": [s.position.tolist() for s in new_states],
            "euler": [[s.euler.roll, s.euler.pitch, s.euler.yaw] for s in new_states],
            "phases": [p.tolist() for p in phases],
            "velocity": [s.velocity.tolist() for s in new_states],
            "energy_remaining": energies.tolist(),
            "flight_power": powers,
            "bs_power": sol.transmit_power,
            "kappa": kappa_bf.tolist(),
            "violations": violations.as_dict(),
            "rate_cum": self._rate_cum,
        }
        return StepResult(self._observe(), reward, self._done, info)


# ------------------------------------------------------------- serialization

def env_config_to_dict(cfg: EnvConfig) -> dict:
    d = {
        "num_gus": cfg.num_gus,
        "num_antennas": cfg.num_antennas,
        "num_elements": cfg.num_elements,
        "elements_per_group": cfg.elements_per_group,
        "altitude": cfg.altitude,
        "area_min": list(cfg.area_min),
        "area_max": list(cfg.area_max),
        "bs_position": list(cfg.bs_position),
        "start_position": list(cfg.start_position),
        "gu_positions": None if cfg.gu_positions is None
        else [list(p) for p in cfg.gu_positions],
        "flight_duration": cfg.flight_duration,
        "num_slots": cfg.num_slots,
        "v_max": cfg.v_max,
        "a_max": cfg.a_max,
        "roll_max": cfg.roll_max,
        "pitch_max": cfg.pitch_max,
        "roll_step_max": cfg.roll_step_max,
        "pitch_step_max": cfg.pitch_step_max,
        "yaw_step_max": cfg.yaw_step_max,
        "energy_budget": cfg.energy_budget,
        "bs_power_max": cfg.bs_power_max,
        "noise_power": cfg.noise_power,
        "wavelength": cfg.wavelength,
        "airframe": asdict(cfg.airframe),
        "motor": {
            "no_load_current": cfg.motor.no_load_current,
            "no_load_voltage": cfg.motor.no_load_voltage,
            "resistance": cfg.motor.resistance,
            "speed_constant": cfg.motor.speed_constant,
            "torque_coeff": cfg.motor.torque_coeff,
        },
        "rician": asdict(cfg.rician),
        "gain": asdict(cfg.gain),
        "reward": asdict(cfg.reward),
        "position_noise": cfg.position_noise,
        "num_aris": cfg.num_aris,
        "min_separation": cfg.min_separation,
        "mode": cfg.mode,
        "rate_scale": cfg.rate_scale,
    }
    return d


def env_config_from_dict(d: dict) -> EnvConfig:
    d = dict(d)
    known = set(env_config_to_dict(EnvConfig()).keys())
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown scenario config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in d.items():
        if value is None and key in ("gu_positions", "rate_scale"):
            kwargs[key] = None
        elif key == "airframe":
            kwargs[key] = AirframeParams(**value)
        elif key == "motor":
            kwargs[key] = MotorConstants(**value)
        elif key == "rician":
            kwargs[key] = RicianParams(**value)
        elif key == "gain":
            kwargs[key] = GainModel(**value)
        elif key == "reward":
            kwargs[key] = RewardConfig(**value)
        elif key in ("area_min", "area_max", "bs_position", "start_position"):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return EnvConfig(**kwargs)


def load_env_config(path) -> EnvConfig:
    with open(path) as f:
        return env_config_from_dict(json.load(f))


def save_env_config(cfg: EnvConfig, path):
    with open(path, "w") as f:
        json.dump(env_config_to_dict(cfg), f, indent=2)
        f.write("\n")


def write_episode_log(path, records):
    """One JSON object per line, one line per slot."""
    with open(path, "w") as f:
        for rec in records:
            f.write(json.dumps(rec))
            f.write("\n")


def read_episode_log(path) -> list[dict]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]
