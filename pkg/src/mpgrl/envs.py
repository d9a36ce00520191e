"""Task environments: leader tracking, unison/consensus formation, obstacles.

All environments are pure state machines over 2D agents: step(action)
advances the leader by its generator, integrates follower reference-point
velocities, and returns (observation, reward, done). Observations are
concatenated global positions. Motion constraints are enforced by ending
the episode with a boundary penalty when a follower leaves its box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import AgentState, ControlInput, integrate_step
from .leaders import make_leader

TASKS = ("tracking", "unison", "consensus", "obstacle")


@dataclass
class EnvConfig:
    dt: float = 0.05
    episode_len: int = 200
    leader_bound: float = 1.0
    follower_bound: float = 2.0
    v_max: float = 0.7
    k_b: float = 10.0  # boundary / obstacle-contact penalty
    k_c: float = 10.0  # collision coefficient
    k_o: float = 0.25  # obstacle shaping weight
    safety_dist: float = 0.1  # minimum safety distance C
    init_range: float = 1.0  # follower spawn box half-width
    unison_offsets: tuple = ((-0.3, 0.0), (0.0, -0.3), (-0.3, -0.3))
    consensus_dist: float = 0.4
    n_consensus_followers: int = 2
    leader_speed: float = 0.4

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.safety_dist <= 0:
            raise ValueError("safety distance must be positive")


def _count_close_pairs(points: list[np.ndarray], threshold: float) -> int:
    n = 0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if np.linalg.norm(points[i] - points[j]) < threshold:
                n += 1
    return n


class _BaseEnv:
    """Shared leader/follower bookkeeping; subclasses define the reward."""

    n_followers = 1

    def _spawn_slots(self) -> list[np.ndarray] | None:
        """Per-follower spawn centers; None means a box around the leader."""
        return None

    def __init__(self, cfg: EnvConfig, leader_kind: str, seed: int = 0):
        self.cfg = cfg
        self.leader_kind = leader_kind
        self.rng = np.random.default_rng(seed)
        self.leader = self._make_leader()
        self.followers: list[AgentState] = []
        self.leader_pos = np.zeros(2)
        self.step_count = 0
        self.last_event: str | None = None

    def _make_leader(self):
        cfg = self.cfg
        if self.leader_kind == "random":
            return make_leader("random", v_max=cfg.v_max, bound=cfg.leader_bound)
        if self.leader_kind in ("circle", "square"):
            return make_leader(self.leader_kind, speed=cfg.leader_speed)
        if self.leader_kind == "line":
            return make_leader("line", speed=cfg.leader_speed)
        raise ValueError(f"unknown leader kind {self.leader_kind!r}")

    @property
    def episode_len(self) -> int:
        return self.cfg.episode_len

    @property
    def act_dim(self) -> int:
        return 2 * self.n_followers

    def _spawn_followers(self) -> None:
        """Uniform spawn around per-follower centers, pairwise >= 2C apart.

        Centers default to the leader position; formation tasks center each
        follower on its formation slot instead. init_range is the half-width
        of the uniform jitter box around the center.
        """
        cfg = self.cfg
        centers = self._spawn_slots() or [self.leader_pos] * self.n_followers
        while True:
            pts = [np.clip(
                       c + self.rng.uniform(-cfg.init_range, cfg.init_range,
                                            size=2),
                       -cfg.follower_bound, cfg.follower_bound)
                   for c in centers]
            if _count_close_pairs(pts + [self.leader_pos],
                                  2.0 * cfg.safety_dist) == 0:
                break
        self.followers = [AgentState(x=float(p[0]), y=float(p[1]))
                          for p in pts]

    def reset(self) -> np.ndarray:
        self.leader_pos = np.asarray(self.leader.reset(self.rng), dtype=float)
        self._spawn_followers()
        self.step_count = 0
        self.last_event = None
        return self._observation()

    def _follower_positions(self) -> list[np.ndarray]:
        return [np.array([f.x, f.y]) for f in self.followers]

    def _advance(self, action: np.ndarray) -> bool:
        """Move leader and followers; returns True on a boundary breach."""
        cfg = self.cfg
        action = np.clip(np.asarray(action, dtype=float).ravel(), -cfg.v_max, cfg.v_max)
        if action.size != self.act_dim:
            raise ValueError(f"action has size {action.size}, expected {self.act_dim}")
        self.leader_pos = np.asarray(self.leader.step(cfg.dt, self.rng), dtype=float)
        breach = False
        for i, f in enumerate(self.followers):
            u = ControlInput(a_x=action[2 * i], a_y=action[2 * i + 1])
            self.followers[i] = integrate_step(f, u, cfg.dt)
            if (abs(self.followers[i].x) > cfg.follower_bound
                    or abs(self.followers[i].y) > cfg.follower_bound):
                breach = True
        self.step_count += 1
        return breach

    def _observation(self) -> np.ndarray:
        return np.concatenate([self.leader_pos] + self._follower_positions())

    @property
    def obs_dim(self) -> int:
        return 2 * (1 + self.n_followers)

    def positions(self) -> dict[str, tuple[float, float, float]]:
        out = {"leader": (float(self.leader_pos[0]), float(self.leader_pos[1]), 0.0)}
        for i, f in enumerate(self.followers, start=1):
            out[f"follower_{i}"] = (float(f.x), float(f.y), float(f.theta))
        return out

    def step(self, action):
        raise NotImplementedError


class TrackingEnv(_BaseEnv):
    """Single follower punished by its distance to the leader."""

    n_followers = 1

    def step(self, action):
        breach = self._advance(action)
        p_f = self._follower_positions()[0]
        reward = -float(np.linalg.norm(self.leader_pos - p_f))
        done = self.step_count >= self.cfg.episode_len
        self.last_event = None
        if breach:
            reward -= self.cfg.k_b
            done = True
            self.last_event = "breach"
        return self._observation(), reward, done


class UnisonEnv(_BaseEnv):
    """Rigid non-rotating formation: follower i tracks leader + offset_i."""

    def __init__(self, cfg: EnvConfig, leader_kind: str, seed: int = 0):
        self.n_followers = len(cfg.unison_offsets)
        super().__init__(cfg, leader_kind, seed)
        self.offsets = [np.asarray(o, dtype=float) for o in cfg.unison_offsets]

    def _spawn_slots(self) -> list[np.ndarray]:
        return [self.leader_pos + off for off in self.offsets]

    def step(self, action):
        cfg = self.cfg
        breach = self._advance(action)
        pts = self._follower_positions()
        n_c = _count_close_pairs([self.leader_pos] + pts, cfg.safety_dist)
        offset_err = sum(
            float(np.linalg.norm(p - (self.leader_pos + off)))
            for p, off in zip(pts, self.offsets)
        )
        reward = -cfg.k_c * n_c - offset_err
        done = self.step_count >= cfg.episode_len or n_c > 0
        self.last_event = "collision" if n_c > 0 else None
        if breach:
            reward -= cfg.k_b
            done = True
            self.last_event = "breach"
        return self._observation(), reward, done


class ConsensusEnv(_BaseEnv):
    """Distance-constrained formation, free to rotate and permute."""

    def __init__(self, cfg: EnvConfig, leader_kind: str, seed: int = 0):
        self.n_followers = cfg.n_consensus_followers
        super().__init__(cfg, leader_kind, seed)

    def _spawn_slots(self) -> list[np.ndarray]:
        # ring of radius D below the leader; adjacent slots are exactly D
        # apart (60-degree chords), so two followers form an equilateral
        # triangle with the leader
        d = self.cfg.consensus_dist
        n = self.n_followers
        angles = [math.radians(240.0 + 60.0 * k) for k in range(n)]
        return [self.leader_pos + d * np.array([math.cos(a), math.sin(a)])
                for a in angles]

    def pair_distances(self) -> list[float]:
        pts = [self.leader_pos] + self._follower_positions()
        return [float(np.linalg.norm(pts[i] - pts[j]))
                for i in range(len(pts)) for j in range(i + 1, len(pts))]

    def step(self, action):
        cfg = self.cfg
        breach = self._advance(action)
        dists = self.pair_distances()
        n_c = sum(d < cfg.safety_dist for d in dists)
        reward = -cfg.k_c * n_c - sum(abs(d - cfg.consensus_dist) for d in dists)
        done = self.step_count >= cfg.episode_len or n_c > 0
        self.last_event = "collision" if n_c > 0 else None
        if breach:
            reward -= cfg.k_b
            done = True
            self.last_event = "breach"
        return self._observation(), reward, done


class ObstacleEnv(_BaseEnv):
    """Leader travels the diagonal; fixed and moving obstacles stop only
    the follower. Distance to obstacles is paid back as shaping reward."""

    n_followers = 1

    def __init__(self, cfg: EnvConfig, leader_kind: str = "line", seed: int = 0,
                 fixed_obstacles=((-0.33, -0.33), (0.33, 0.33))):
        super().__init__(cfg, leader_kind, seed)
        self.fixed_obstacles = [np.asarray(o, dtype=float) for o in fixed_obstacles]
        self.moving_obstacle = make_leader(
            "line", start=(-1.0, 1.0), end=(1.0, -1.0), speed=cfg.leader_speed)
        self.moving_pos = np.zeros(2)

    def reset(self) -> np.ndarray:
        self.moving_pos = np.asarray(self.moving_obstacle.reset(self.rng), dtype=float)
        return super().reset()

    def obstacle_positions(self) -> list[np.ndarray]:
        return self.fixed_obstacles + [self.moving_pos]

    def _spawn_followers(self) -> None:
        # Also keep the spawn clear of every obstacle.
        cfg = self.cfg
        while True:
            super()._spawn_followers()
            p = self._follower_positions()[0]
            if all(np.linalg.norm(p - o) >= 2.0 * cfg.safety_dist
                   for o in self.obstacle_positions()):
                return

    def step(self, action):
        cfg = self.cfg
        breach = self._advance(action)
        self.moving_pos = np.asarray(
            self.moving_obstacle.step(cfg.dt, self.rng), dtype=float)
        p_f = self._follower_positions()[0]
        obstacles = self.obstacle_positions()
        shaping = cfg.k_o * sum(float(np.linalg.norm(p_f - o)) for o in obstacles)
        reward = -float(np.linalg.norm(self.leader_pos - p_f)) + shaping
        contact = any(np.linalg.norm(p_f - o) < cfg.safety_dist for o in obstacles)
        done = self.step_count >= cfg.episode_len or contact
        self.last_event = "contact" if contact else None
        if breach or contact:
            reward -= cfg.k_b
            done = True
            if breach:
                self.last_event = "breach"
        return self._observation(), reward, done

    @property
    def obs_dim(self) -> int:
        return 2 * (1 + self.n_followers + 3)

    def _observation(self) -> np.ndarray:
        return np.concatenate(
            [self.leader_pos] + self._follower_positions()
            + self.obstacle_positions())

    def positions(self) -> dict[str, tuple[float, float, float]]:
        out = super().positions()
        for i, o in enumerate(self.obstacle_positions(), start=1):
            out[f"obstacle_{i}"] = (float(o[0]), float(o[1]), 0.0)
        return out


def make_env(task: str, cfg: EnvConfig, leader_kind: str, seed: int = 0):
    if task == "tracking":
        return TrackingEnv(cfg, leader_kind, seed)
    if task == "unison":
        return UnisonEnv(cfg, leader_kind, seed)
    if task == "consensus":
        return ConsensusEnv(cfg, leader_kind, seed)
    if task == "obstacle":
        return ObstacleEnv(cfg, "line", seed)
    raise ValueError(f"unknown task {task!r}")
