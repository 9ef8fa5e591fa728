"""Tilt-aware aerial-RIS communication workbench.

Quadrotor attitude/trajectory dynamics with energy accounting, Rician
channels with a tilt-gated panel gain, zero-forcing water-filling
beamforming, an episodic control environment, and a soft actor-critic
trainer with prioritized replay.
"""

from .agent import SacAgent, SacConfig, TrainResult, evaluate, train
from .beamforming import BeamformingSolution, solve_beamforming, water_filling, zf_directions
from .channel import (
    ChannelRealization,
    GainModel,
    PanelGeometry,
    ReflectionState,
    RicianParams,
    achievable_rate,
    aris_gain,
    effective_channel,
    path_loss,
    service_factor,
    sum_rate,
)
from .dynamics import AirframeParams, UavState
from .energy import MotorConstants, flight_power, motor_power
from .environment import ArisEnv, EnvConfig, RewardConfig, StepResult, load_env_config
from .geometry import AngleOfView, EulerAngles, incidence_cosine, rotation_matrix, surface_normal
from .numerics import RngStream
from .replay import PrioritizedReplay, ReplayConfig, SumTree, Transition

__version__ = "0.1.0"
