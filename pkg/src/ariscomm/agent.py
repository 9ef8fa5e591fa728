"""Soft actor-critic with twin critics, squashed Gaussian policy, automatic
temperature tuning, and priority-weighted replay updates.

The actor outputs a mean and log-std per action dimension; samples are
squashed through tanh and affinely mapped onto the action box, with the
change-of-variables correction

    log pi(a|s) = log N(u; mean, std) - sum log(1 - tanh(u)^2)
                  - sum log(range/2).

Critic targets bootstrap through the minimum of two target networks minus
the entropy term; the temperature follows dual gradient descent toward a
target entropy.  All gradients are exact reverse-mode computations through
the dense networks (finite-difference checked in the test suite).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .nn import AdamState, Mlp, adam_step, load_mlp, save_mlp
from .numerics import RngStream
from .replay import PrioritizedReplay, ReplayConfig, Transition

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)

ALGORITHMS = ("sac-per", "sac-uniform", "random-policy")


@dataclass
class SacConfig:
    discount: float = 0.99
    tau: float = 0.005
    lr_actor: float = 5e-4
    lr_critic: float = 5e-4
    lr_alpha: float = 5e-4
    batch_size: int = 256
    hidden: tuple = (256, 256)
    target_entropy: float | None = None   # default: -action_dim
    init_alpha: float = 1.0
    warmup_steps: int = 5000
    updates_per_step: int = 1

    def __post_init__(self):
        if not 0.0 < self.discount < 1.0:
            raise ValueError("discount must lie in (0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if self.init_alpha <= 0:
            raise ValueError("init_alpha must be positive")


def _log1m_tanh2(u: np.ndarray) -> np.ndarray:
    # log(1 - tanh(u)^2) = 2*(log 2 - u - softplus(-2u)), stable at large |u|
    return 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


class SacAgent:
    def __init__(self, obs_dim: int, action_low, action_high, cfg: SacConfig,
                 rng: RngStream):
        self.cfg = cfg
        self.obs_dim = int(obs_dim)
        self.action_low = np.asarray(action_low, dtype=float)
        self.action_high = np.asarray(action_high, dtype=float)
        if self.action_low.shape != self.action_high.shape:
            raise ValueError("action bound shapes disagree")
        if np.any(self.action_high <= self.action_low):
            raise ValueError("action_high must exceed action_low everywhere")
        self.action_dim = self.action_low.size
        self.mid = 0.5 * (self.action_high + self.action_low)
        self.half = 0.5 * (self.action_high - self.action_low)
        self.target_entropy = (cfg.target_entropy if cfg.target_entropy is not None
                               else -float(self.action_dim))

        hidden = list(cfg.hidden)
        self.actor = Mlp.initialized(
            [self.obs_dim, *hidden, 2 * self.action_dim], rng.child(0), "tanh")
        self.critic1 = Mlp.initialized(
            [self.obs_dim + self.action_dim, *hidden, 1], rng.child(1), "tanh")
        self.critic2 = Mlp.initialized(
            [self.obs_dim + self.action_dim, *hidden, 1], rng.child(2), "tanh")
        self.target1 = self.critic1.copy()
        self.target2 = self.critic2.copy()
        self.log_alpha = np.array([np.log(cfg.init_alpha)])

        self.opt_actor = AdamState(self.actor.parameters(), cfg.lr_actor)
        self.opt_critic1 = AdamState(self.critic1.parameters(), cfg.lr_critic)
        self.opt_critic2 = AdamState(self.critic2.parameters(), cfg.lr_critic)
        self.opt_alpha = AdamState([self.log_alpha], cfg.lr_alpha)
        self._rng_actions = rng.child(3)

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    # ------------------------------------------------------------- policy

    def _actor_stats(self, obs: np.ndarray):
        out, cache = self.actor.forward(np.atleast_2d(obs))
        mean = out[:, :self.action_dim]
        raw = out[:, self.action_dim:]
        log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
        return mean, raw, log_std, np.exp(log_std), cache

    def _squash(self, mean, log_std, eps):
        """Reparameterized squashed sample and its log-probability."""
        std = np.exp(log_std)
        u = mean + std * eps
        t = np.tanh(u)
        action = self.mid + self.half * t
        log_prob = (
            -0.5 * eps * eps - log_std - _HALF_LOG_2PI
            - _log1m_tanh2(u) - np.log(self.half)
        ).sum(axis=1)
        return action, log_prob, u, t

    def select_action(self, obs, stochastic: bool = True) -> np.ndarray:
        mean, _, log_std, _, _ = self._actor_stats(obs)
        if stochastic:
            eps = self._rng_actions.gen.standard_normal(mean.shape)
            action, _, _, _ = self._squash(mean, log_std, eps)
        else:
            action = self.mid + self.half * np.tanh(mean)
        return action[0]

    # ------------------------------------------------------------- critics

    def critic_targets(self, batch) -> np.ndarray:
        """Bootstrap targets r + gamma*(min Q_target(s', a') - alpha*log pi)."""
        next_obs = np.atleast_2d(batch["next_obs"])
        mean, _, log_std, _, _ = self._actor_stats(next_obs)
        eps = self._rng_actions.gen.standard_normal(mean.shape)
        a2, logp2, _, _ = self._squash(mean, log_std, eps)
        x = np.hstack([next_obs, a2])
        q1, _ = self.target1.forward(x)
        q2, _ = self.target2.forward(x)
        qmin = np.minimum(q1[:, 0], q2[:, 0])
        not_done = 1.0 - np.asarray(batch["dones"], dtype=float)
        return batch["rewards"] + self.cfg.discount * not_done * (qmin - self.alpha * logp2)

    def critic_loss_and_grads(self, critic: Mlp, obs, actions, targets, weights):
        """Weighted half-squared TD loss and its parameter gradients."""
        x = np.hstack([np.atleast_2d(obs), np.atleast_2d(actions)])
        q, cache = critic.forward(x)
        diff = q[:, 0] - targets
        n = diff.size
        loss = float(np.mean(weights * 0.5 * diff * diff))
        grad_out = (weights * diff / n)[:, None]
        grads, _ = critic.backward(cache, grad_out)
        return loss, grads, diff

    def update_critics(self, batch, weights) -> np.ndarray:
        """Step both critics; returns mean |TD error| per sample (pre-update)."""
        weights = np.asarray(weights, dtype=float)
        y = self.critic_targets(batch)
        td_abs = np.zeros(y.size)
        for critic, opt in ((self.critic1, self.opt_critic1),
                            (self.critic2, self.opt_critic2)):
            _, grads, diff = self.critic_loss_and_grads(
                critic, batch["obs"], batch["actions"], y, weights)
            td_abs += np.abs(diff)
            adam_step(critic.parameters(), grads, opt)
        return 0.5 * td_abs

    # --------------------------------------------------------------- actor

    def actor_loss_and_grads(self, obs, eps):
        """Loss mean(alpha*log pi - min Q) and actor gradients, frozen noise.

        The Q path flows through the per-sample argmin critic's input
        gradient; the entropy path differentiates the squashed log-density
        with the reparameterization noise held fixed.
        """
        obs = np.atleast_2d(obs)
        n = obs.shape[0]
        mean, raw, log_std, std, cache = self._actor_stats(obs)
        action, log_prob, _, t = self._squash(mean, log_std, eps)
        x = np.hstack([obs, action])
        q1, c1 = self.critic1.forward(x)
        q2, c2 = self.critic2.forward(x)
        q1, q2 = q1[:, 0], q2[:, 0]
        pick1 = q1 <= q2
        qmin = np.where(pick1, q1, q2)
        alpha = self.alpha
        loss = float(np.mean(alpha * log_prob - qmin))

        gout1 = (np.where(pick1, -1.0, 0.0) / n)[:, None]
        gout2 = (np.where(pick1, 0.0, -1.0) / n)[:, None]
        _, gin1 = self.critic1.backward(c1, gout1)
        _, gin2 = self.critic2.backward(c2, gout2)
        d_action = (gin1 + gin2)[:, self.obs_dim:]

        d_u = alpha * 2.0 * t / n + d_action * self.half * (1.0 - t * t)
        d_mean = d_u
        d_log_std = d_u * std * eps - alpha / n
        inside = (raw > LOG_STD_MIN) & (raw < LOG_STD_MAX)
        d_raw = np.where(inside, d_log_std, 0.0)
        grads, _ = self.actor.backward(cache, np.hstack([d_mean, d_raw]))
        return loss, grads

    def update_actor(self, batch) -> float:
        obs = np.atleast_2d(batch["obs"])
        eps = self._rng_actions.gen.standard_normal((obs.shape[0], self.action_dim))
        loss, grads = self.actor_loss_and_grads(obs, eps)
        adam_step(self.actor.parameters(), grads, self.opt_actor)
        return loss

    # --------------------------------------------------------- temperature

    def temperature_loss_and_grad(self, log_prob):
        """L(alpha) = E[-alpha*(log pi + H_min)], gradient w.r.t. log alpha."""
        mism = float(np.mean(log_prob + self.target_entropy))
        loss = -self.alpha * mism
        return loss, np.array([-self.alpha * mism])

    def update_temperature(self, obs) -> float:
        obs = np.atleast_2d(obs)
        mean, _, log_std, _, _ = self._actor_stats(obs)
        eps = self._rng_actions.gen.standard_normal(mean.shape)
        _, log_prob, _, _ = self._squash(mean, log_std, eps)
        _, grad = self.temperature_loss_and_grad(log_prob)
        adam_step([self.log_alpha], [grad], self.opt_alpha)
        return self.alpha

    # -------------------------------------------------------------- targets

    def soft_update(self):
        tau = self.cfg.tau
        for tgt, src in ((self.target1, self.critic1), (self.target2, self.critic2)):
            for pt, ps in zip(tgt.parameters(), src.parameters()):
                pt *= 1.0 - tau
                pt += tau * ps


# ------------------------------------------------------------------ training

@dataclass
class TrainResult:
    agent: SacAgent | None
    episodes: list
    total_steps: int


def train(env, sac_cfg: SacConfig | None = None,
          replay_cfg: ReplayConfig | None = None,
          total_steps: int = 10_000, seed: int = 0,
          algorithm: str = "sac-per",
          agent: SacAgent | None = None,
          start_step: int = 0,
          constant_priority: bool = False,
          checkpoint_dir=None, checkpoint_every: int | None = None) -> TrainResult:
    """Run the full training loop: act, store, sample, update, log.

    ``algorithm`` selects SAC with prioritized replay, SAC with uniform
    replay (same sampler, flat priorities and unit weights), or a pure
    random-policy rollout with no updates.  ``constant_priority`` pins every
    refreshed priority to 1 (the ablation switch); with unit weights this
    makes the prioritized path reproduce uniform replay exactly.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}")
    sac_cfg = sac_cfg if sac_cfg is not None else SacConfig()
    replay_cfg = replay_cfg if replay_cfg is not None else ReplayConfig()
    if algorithm == "sac-uniform":
        replay_cfg = replace(replay_cfg, priority_exponent=0.0,
                             weight_exponent_start=0.0, weight_exponent_end=0.0)

    root = RngStream(seed)
    obs = env.reset(seed=seed)
    if agent is None:
        agent = SacAgent(env.obs_dim, env.action_low, env.action_high,
                         sac_cfg, root.child(16))
    buffer = PrioritizedReplay(replay_cfg)
    rng_replay = root.child(17)
    rng_warmup = root.child(18)
    use_per = algorithm == "sac-per"

    episodes = []
    ep = {"return": 0.0, "sum_rate": 0.0, "steps": 0,
          "boundary": 0, "speed": 0, "accel": 0, "separation": 0}

    def flush_episode(info):
        energies = np.asarray(info["energy_remaining"], dtype=float)
        episodes.append({
            "episode": len(episodes),
            "steps": ep["steps"],
            "return": ep["return"],
            "sum_rate": ep["sum_rate"],
            "energy_used": float(np.sum(env.cfg.energy_budget - energies)),
            "boundary": ep["boundary"],
            "speed": ep["speed"],
            "accel": ep["accel"],
            "separation": ep["separation"],
        })
        for key in ep:
            ep[key] = 0 if isinstance(ep[key], int) else 0.0

    for step in range(start_step, start_step + total_steps):
        if algorithm == "random-policy" or step < sac_cfg.warmup_steps:
            action = rng_warmup.gen.uniform(env.action_low, env.action_high)
        else:
            action = agent.select_action(obs, stochastic=True)
        sr = env.step(action)
        buffer.push(Transition(np.asarray(obs, float), np.asarray(action, float),
                               sr.reward, sr.observation, sr.done))
        ep["return"] += sr.reward
        ep["sum_rate"] += sr.info["sum_rate"]
        ep["steps"] += 1
        for key in ("boundary", "speed", "accel", "separation"):
            ep[key] += sr.info["violations"][key]
        obs = sr.observation

        if (algorithm != "random-policy" and step >= sac_cfg.warmup_steps
                and len(buffer) >= sac_cfg.batch_size):
            for _ in range(sac_cfg.updates_per_step):
                batch, idx, w = buffer.sample(sac_cfg.batch_size, rng_replay)
                td = agent.update_critics(batch, w)
                if use_per:
                    if constant_priority:
                        td = np.full(td.shape, 1.0 - replay_cfg.priority_floor)
                    buffer.update_priorities(idx, td)
                agent.update_actor(batch)
                agent.update_temperature(batch["obs"])
                agent.soft_update()

        if sr.done:
            flush_episode(sr.info)
            if (checkpoint_dir is not None and checkpoint_every
                    and len(episodes) % checkpoint_every == 0):
                save_checkpoint(agent, Path(checkpoint_dir) / f"ep{len(episodes):05d}",
                                extra={"total_steps": step + 1})
            obs = env.reset()

    return TrainResult(agent=None if algorithm == "random-policy" else agent,
                       episodes=episodes, total_steps=start_step + total_steps)


# ---------------------------------------------------------------- evaluation

@dataclass
class EvalResult:
    records: list            # one dict per slot, with an "episode" field
    mean_slot_rate: float    # mean over slots of the realized sum-rate
    mean_episode_rate: float  # mean over episodes of the episode total
    mean_return: float
    mean_energy_used: float


def evaluate(env, agent: SacAgent | None = None, episodes: int = 1,
             seed: int | None = None,
             random_rng: RngStream | None = None) -> EvalResult:
    """Deterministic-policy rollouts (uniform-random actions when agent=None)."""
    if agent is None and random_rng is None:
        random_rng = RngStream(0 if seed is None else seed).child(99)
    records = []
    ep_rates, ep_returns, ep_energy = [], [], []
    for ep_idx in range(episodes):
        obs = env.reset(seed=seed) if (seed is not None and ep_idx == 0) else env.reset()
        done = False
        total_rate = total_return = 0.0
        info = {}
        while not done:
            if agent is not None:
                action = agent.select_action(obs, stochastic=False)
            else:
                action = random_rng.gen.uniform(env.action_low, env.action_high)
            sr = env.step(action)
            records.append({"episode": ep_idx, "reward": sr.reward, **sr.info})
            total_rate += sr.info["sum_rate"]
            total_return += sr.reward
            obs, done, info = sr.observation, sr.done, sr.info
        ep_rates.append(total_rate)
        ep_returns.append(total_return)
        energies = np.asarray(info["energy_remaining"], dtype=float)
        ep_energy.append(float(np.sum(env.cfg.energy_budget - energies)))
    slot_rates = [r["sum_rate"] for r in records]
    return EvalResult(
        records=records,
        mean_slot_rate=float(np.mean(slot_rates)),
        mean_episode_rate=float(np.mean(ep_rates)),
        mean_return=float(np.mean(ep_returns)),
        mean_energy_used=float(np.mean(ep_energy)),
    )


# ---------------------------------------------------------------- checkpoint

def save_checkpoint(agent: SacAgent, directory, extra: dict | None = None):
    """Networks in the flat binary format plus a JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_mlp(agent.actor, directory / "actor.net")
    save_mlp(agent.critic1, directory / "critic1.net")
    save_mlp(agent.critic2, directory / "critic2.net")
    save_mlp(agent.target1, directory / "target1.net")
    save_mlp(agent.target2, directory / "target2.net")
    manifest = {
        "log_alpha": float(agent.log_alpha[0]),
        "obs_dim": agent.obs_dim,
        "action_low": agent.action_low.tolist(),
        "action_high": agent.action_high.tolist(),
        "target_entropy": agent.target_entropy,
        "sac_config": asdict(agent.cfg),
        "action_rng_state": agent._rng_actions.state(),
    }
    if extra:
        manifest.update(extra)
    with open(directory / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, default=str)
        f.write("\n")


def load_checkpoint(directory) -> tuple[SacAgent, dict]:
    directory = Path(directory)
    with open(directory / "manifest.json") as f:
        manifest = json.load(f)
    cfg_dict = dict(manifest["sac_config"])
    cfg_dict["hidden"] = tuple(cfg_dict["hidden"])
    cfg = SacConfig(**cfg_dict)
    agent = SacAgent(manifest["obs_dim"], manifest["action_low"],
                     manifest["action_high"], cfg, RngStream(0))
    agent.actor = load_mlp(directory / "actor.net")
    agent.critic1 = load_mlp(directory / "critic1.net")
    agent.critic2 = load_mlp(directory / "critic2.net")
    agent.target1 = load_mlp(directory / "target1.net")
    agent.target2 = load_mlp(directory / "target2.net")
    agent.log_alpha[0] = manifest["log_alpha"]
    agent.target_entropy = manifest["target_entropy"]
    agent.opt_actor = AdamState(agent.actor.parameters(), cfg.lr_actor)
    agent.opt_critic1 = AdamState(agent.critic1.parameters(), cfg.lr_critic)
    agent.opt_critic2 = AdamState(agent.critic2.parameters(), cfg.lr_critic)
    agent.opt_alpha = AdamState([agent.log_alpha], cfg.lr_alpha)
    return agent, manifest
