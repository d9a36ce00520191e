"""Flat key-value experiment configuration.

The file format is one `key = value` pair per line, `#` comments allowed.
Unset keys take the defaults below; training hyperparameter defaults are
the published ones (gamma 0.99, batch 16, actor lr 1e-3, critic lr 1e-2,
200-step episodes, exploration variance 2 decaying by 0.99 to 0.01,
training noise variance 0.2).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .agent import NoiseSchedule, TrainerConfig
from .envs import EnvConfig

PROFILES = {"paper": (400, 300), "desk": (64, 64)}


@dataclass
class ExperimentConfig:
    task: str = "tracking"
    algorithm: str = "mpg"
    leader: str = "random"
    episodes: int = 100
    seeds: tuple[int, ...] = (0,)
    profile: str = "desk"
    eval_episodes: int = 10
    # trainer
    gamma: float = 0.99
    batch_size: int = 16
    actor_lr: float = 1e-3
    critic_lr: float = 1e-2
    inner_iters: int = 2
    policy_delay: int = 2
    tau: float = 0.005
    replay_capacity: int = 100_000
    v_explore: float = 2.0
    v_min: float = 0.01
    noise_decay: float = 0.99
    v_train: float = 0.2
    train_noise_clip: float = 0.5
    # environment
    dt: float = 0.05
    episode_len: int = 200
    v_max: float = 0.7
    k_b: float = 10.0
    k_c: float = 10.0
    k_o: float = 0.25
    safety_dist: float = 0.1
    init_range: float = 1.0
    leader_speed: float = 0.4
    consensus_dist: float = 0.4

    def validate(self) -> None:
        from .envs import TASKS
        from .leaders import LEADER_KINDS
        from .agent import TARGET_KINDS
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.algorithm not in TARGET_KINDS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.leader not in LEADER_KINDS:
            raise ValueError(f"unknown leader kind {self.leader!r}")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.episodes < 0 or self.eval_episodes < 0:
            raise ValueError("episode counts must be >= 0")
        if not self.seeds:
            raise ValueError("at least one seed required")

    def trainer_config(self) -> TrainerConfig:
        return TrainerConfig(
            gamma=self.gamma,
            batch_size=self.batch_size,
            actor_lr=self.actor_lr,
            critic_lr=self.critic_lr,
            inner_iters=self.inner_iters,
            policy_delay=self.policy_delay,
            tau=self.tau,
            replay_capacity=self.replay_capacity,
            hidden=PROFILES[self.profile],
            v_max=self.v_max,
            train_noise_clip=self.train_noise_clip,
            noise=NoiseSchedule(
                v_explore=self.v_explore, v_min=self.v_min,
                lam=self.noise_decay, v_train=self.v_train,
            ),
        )

    def env_config(self) -> EnvConfig:
        return EnvConfig(
            dt=self.dt,
            episode_len=self.episode_len,
            v_max=self.v_max,
            k_b=self.k_b,
            k_c=self.k_c,
            k_o=self.k_o,
            safety_dist=self.safety_dist,
            init_range=self.init_range,
            leader_speed=self.leader_speed,
            consensus_dist=self.consensus_dist,
        )


def _parse_value(name: str, raw: str, kind):
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if name == "seeds":
        return tuple(int(s) for s in raw.split(",") if s.strip() != "")
    return raw


def parse_config(path) -> ExperimentConfig:
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in fields:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            kind = fields[key].type
            pytype = {"int": int, "float": float}.get(str(kind), str)
            try:
                values[key] = _parse_value(key, raw, pytype)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {exc}")
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        if f.name == "seeds":
            v = ",".join(str(s) for s in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
