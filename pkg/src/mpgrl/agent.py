"""Actor-critic training loop with selectable bootstrap target rules.

Three target rules are supported for the critic bootstrap:

- "mpg": max of the two target critics minus the running average of the
  current and previous absolute critic gaps (momentum-adjusted target),
- "td3": min of the two target critics (clipped double estimate),
- "ddpg": first target critic alone.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import net
from .net import ActivationSpec, MlpParams
from .replay import ReplayBuffer, Transition

TARGET_KINDS = ("mpg", "td3", "ddpg")


@dataclass
class NoiseSchedule:
    v_explore: float = 2.0  # current exploration variance
    v_min: float = 0.01  # variance floor
    lam: float = 0.99  # per-step decay factor
    v_train: float = 0.2  # target-policy smoothing variance


def decay_noise(noise: NoiseSchedule) -> NoiseSchedule:
    """Geometric decay of the exploration variance down to the floor."""
    return dataclasses.replace(
        noise, v_explore=max(noise.lam * noise.v_explore, noise.v_min)
    )


@dataclass
class TargetRule:
    kind: str = "mpg"
    delta_last: np.ndarray | None = None  # per-transition carry, mpg only

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise ValueError(f"unknown target rule {self.kind!r}")

    def reset_delta(self, batch_size: int) -> None:
        self.delta_last = np.zeros(batch_size)


def compute_target(
    rule: TargetRule,
    rewards: np.ndarray,
    dones: np.ndarray,
    q1p: np.ndarray,
    q2p: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """Bootstrap targets y for one critic regression step.

    For the "mpg" rule, rule.delta_last is consumed and refreshed with the
    current absolute critic gap.
    """
    rewards = np.asarray(rewards, dtype=float)
    dones = np.asarray(dones, dtype=float)
    q1p = np.asarray(q1p, dtype=float)
    q2p = np.asarray(q2p, dtype=float)
    if not (rewards.shape == dones.shape == q1p.shape == q2p.shape):
        raise ValueError("batch shapes disagree")
    if not (np.all(np.isfinite(q1p)) and np.all(np.isfinite(q2p))):
        raise FloatingPointError("non-finite critic values (training diverged)")

    if rule.kind == "mpg":
        delta = np.abs(q1p - q2p)
        carry = rule.delta_last if rule.delta_last is not None else np.zeros_like(delta)
        delta_adj = 0.5 * (carry + delta)
        q = np.maximum(q1p, q2p) - delta_adj
        rule.delta_last = delta
    elif rule.kind == "td3":
        q = np.minimum(q1p, q2p)
    else:  # ddpg
        q = q1p
    return rewards + gamma * q * (1.0 - dones)


def select_action(
    actor: MlpParams,
    actor_spec: ActivationSpec,
    state: np.ndarray,
    noise: NoiseSchedule,
    rng: np.random.Generator,
    v_max: float,
) -> np.ndarray:
    """Clamped policy action plus Gaussian exploration noise of variance v_explore."""
    a = net.forward(actor, actor_spec, state)
    if noise.v_explore > 0:
        a = a + rng.normal(0.0, np.sqrt(noise.v_explore), size=a.shape)
    return np.clip(a, -v_max, v_max)


@dataclass
class TrainerConfig:
    gamma: float = 0.99
    batch_size: int = 16
    actor_lr: float = 1e-3
    critic_lr: float = 1e-2
    inner_iters: int = 2  # target/critic refinement passes per env step
    policy_delay: int = 2  # actor + soft updates every F-th inner pass
    tau: float = 0.005
    replay_capacity: int = 100_000
    hidden: tuple[int, int] = (64, 64)
    v_max: float = 0.7
    train_noise_clip: float = 0.5
    noise: NoiseSchedule = field(default_factory=NoiseSchedule)

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if min(self.actor_lr, self.critic_lr, self.tau) <= 0:
            raise ValueError("rates must be positive")
        if self.inner_iters < 1 or self.policy_delay < 1:
            raise ValueError("inner_iters and policy_delay must be >= 1")


@dataclass
class EpisodeSummary:
    total_reward: float
    steps: int
    v_explore: float


@dataclass
class StepMetrics:
    episode: int
    step: int
    reward: float
    q1_mean: float
    q2_mean: float
    delta_adj_mean: float
    v_explore: float
    loss_critic: float
    loss_actor: float


class Trainer:
    """Single-environment training state: networks, replay, noise, rngs.

    One Trainer owns its parameters exclusively; independent seeds can run
    as independent Trainer instances in parallel.
    """

    def __init__(
        self,
        obs_dim: int,
        act_dim: int,
        config: TrainerConfig,
        rule_kind: str = "mpg",
        seed: int = 0,
    ):
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.cfg = config
        self.rule = TargetRule(kind=rule_kind)
        self.noise = dataclasses.replace(config.noise)

        ss = (seed if isinstance(seed, np.random.SeedSequence)
              else np.random.SeedSequence(seed))
        s_actor, s_q1, s_q2, s_explore, s_batch, s_train = ss.spawn(6)
        h1, h2 = config.hidden
        self.actor = net.init_params([obs_dim, h1, h2, act_dim], np.random.default_rng(s_actor))
        self.critic1 = net.init_params([obs_dim + act_dim, h1, h2, 1], np.random.default_rng(s_q1))
        self.critic2 = net.init_params([obs_dim + act_dim, h1, h2, 1], np.random.default_rng(s_q2))
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy()
        self.actor_spec = ActivationSpec(output="tanh", output_scale=config.v_max)
        self.critic_spec = ActivationSpec(output="identity")

        self.replay = ReplayBuffer(config.replay_capacity)
        self.rng_explore = np.random.default_rng(s_explore)
        self.rng_batch = np.random.default_rng(s_batch)
        self.rng_train = np.random.default_rng(s_train)

        self.last_q1_mean = 0.0
        self.last_q2_mean = 0.0
        self.last_delta_adj_mean = 0.0
        self.last_loss_critic = 0.0
        self.last_loss_actor = 0.0

    # -- policy ------------------------------------------------------------

    def act(self, state: np.ndarray, explore: bool = True) -> np.ndarray:
        if explore:
            return select_action(
                self.actor, self.actor_spec, state, self.noise,
                self.rng_explore, self.cfg.v_max,
            )
        a = net.forward(self.actor, self.actor_spec, state)
        return np.clip(a, -self.cfg.v_max, self.cfg.v_max)

    # -- updates -----------------------------------------------------------

    def _target_actions(self, next_states: np.ndarray) -> np.ndarray:
        a = net.forward(self.actor, self.actor_spec, next_states)
        eps = self.rng_train.normal(0.0, np.sqrt(self.noise.v_train), size=a.shape)
        eps = np.clip(eps, -self.cfg.train_noise_clip, self.cfg.train_noise_clip)
        return np.clip(a + eps, -self.cfg.v_max, self.cfg.v_max)

    def critic_update(self, states, actions, y) -> float:
        """One Adam step on each critic's mean squared Bellman error."""
        n = len(y)
        x = np.concatenate([states, actions], axis=1)
        loss = 0.0
        for critic in (self.critic1, self.critic2):
            q = net.forward(critic, self.critic_spec, x)[:, 0]
            resid = q - y
            loss += float(np.mean(resid**2))
            grads, _ = net.backward(
                critic, self.critic_spec, x, (2.0 * resid / n)[:, None]
            )
            net.adam_step(critic, grads, self.cfg.critic_lr)
        if not np.isfinite(loss):
            raise FloatingPointError("non-finite critic loss; step aborted")
        return loss

    def actor_update(self, states) -> float:
        """Ascend Q1(s, pi(s)); the critic supplies gradients but is not stepped."""
        n = len(states)
        a = net.forward(self.actor, self.actor_spec, states)
        x = np.concatenate([states, a], axis=1)
        q = net.forward(self.critic1, self.critic_spec, x)[:, 0]
        loss = float(-np.mean(q))
        if not np.isfinite(loss):
            raise FloatingPointError("non-finite actor loss; step aborted")
        _, dx = net.backward(
            self.critic1, self.critic_spec, x, np.full((n, 1), -1.0 / n)
        )
        da = dx[:, self.obs_dim:]
        grads, _ = net.backward(self.actor, self.actor_spec, states, da)
        net.adam_step(self.actor, grads, self.cfg.actor_lr)
        return loss

    def train_on_batch(self) -> None:
        """Inner refinement loop over one sampled minibatch."""
        cfg = self.cfg
        batch = self.replay.sample(self.rng_batch, cfg.batch_size)
        s, a, s2, r, d = ReplayBuffer.stack(batch)
        self.rule.reset_delta(cfg.batch_size)
        x2_states = s2
        for i in range(1, cfg.inner_iters + 1):
            a2 = self._target_actions(x2_states)
            x2 = np.concatenate([x2_states, a2], axis=1)
            q1p = net.forward(self.critic1_target, self.critic_spec, x2)[:, 0]
            q2p = net.forward(self.critic2_target, self.critic_spec, x2)[:, 0]
            carry = self.rule.delta_last
            y = compute_target(self.rule, r, d, q1p, q2p, cfg.gamma)
            self.last_q1_mean = float(np.mean(q1p))
            self.last_q2_mean = float(np.mean(q2p))
            if self.rule.kind == "mpg":
                self.last_delta_adj_mean = float(
                    np.mean(0.5 * (carry + np.abs(q1p - q2p)))
                )
            self.last_loss_critic = self.critic_update(s, a, y)
            if i % cfg.policy_delay == 0:
                self.last_loss_actor = self.actor_update(s)
                net.soft_update(self.critic1, self.critic1_target, cfg.tau)
                net.soft_update(self.critic2, self.critic2_target, cfg.tau)

    # -- episode loop --------------------------------------------------------

    def train_episode(self, env, episode_index: int = 0,
                      metrics: list[StepMetrics] | None = None) -> EpisodeSummary:
        """Run one episode: act, store, decay noise, update networks.

        Updates are skipped until the replay buffer holds a full batch.
        """
        obs = env.reset()
        total = 0.0
        steps = 0
        for step in range(env.episode_len):
            action = self.act(obs)
            obs2, reward, done = env.step(action)
            # Hitting the step limit truncates the episode but is not a real
            # terminal state: keep bootstrapping through it. Only genuine
            # failure events (breach / collision / contact) cut the return.
            terminal = bool(done) and getattr(env, "last_event", None) is not None
            self.replay.push(Transition(obs, action, obs2, reward, terminal))
            self.noise = decay_noise(self.noise)
            if self.replay.size >= self.cfg.batch_size:
                self.train_on_batch()
            if metrics is not None:
                metrics.append(StepMetrics(
                    episode=episode_index, step=step, reward=float(reward),
                    q1_mean=self.last_q1_mean, q2_mean=self.last_q2_mean,
                    delta_adj_mean=self.last_delta_adj_mean,
                    v_explore=self.noise.v_explore,
                    loss_critic=self.last_loss_critic,
                    loss_actor=self.last_loss_actor,
                ))
            total += reward
            steps += 1
            obs = obs2
            if done:
                break
        return EpisodeSummary(total_reward=total, steps=steps,
                              v_explore=self.noise.v_explore)
