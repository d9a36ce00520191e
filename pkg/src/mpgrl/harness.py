"""Experiment runner: seeded training, evaluation, CSV/plot outputs.

Each seed trains an independent agent, writes per-step metrics, saves
checkpoints, and runs noise-free evaluation rollouts whose trajectories
and summary metrics are exported. Tracking runs are additionally
evaluated against all three leader patterns so every train/eval pairing
is reported.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import net
from .agent import StepMetrics, Trainer
from .config import ExperimentConfig, serialize_config
from .envs import ConsensusEnv, ObstacleEnv, TrackingEnv, UnisonEnv, make_env

METRICS_HEADER = ("episode,step,reward,q1_mean,q2_mean,delta_adj_mean,"
                  "v_explore,loss_critic,loss_actor")
TRAJECTORY_HEADER = "step,agent_id,x,y,theta,reward"


@dataclass
class RunSummary:
    seed: int
    task: str
    algorithm: str
    leader: str
    episode_rewards: list[float] = field(default_factory=list)
    episode_lengths: list[int] = field(default_factory=list)
    eval: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "seed": self.seed, "task": self.task,
            "algorithm": self.algorithm, "leader": self.leader,
            "episode_rewards": self.episode_rewards,
            "episode_lengths": self.episode_lengths,
            "eval": self.eval,
        }

    @classmethod
    def from_json(cls, d: dict) -> "RunSummary":
        return cls(**d)


def write_metrics_csv(path, rows: list[StepMetrics]) -> None:
    with open(path, "w") as f:
        f.write(METRICS_HEADER + "\n")
        for m in rows:
            f.write(f"{m.episode},{m.step},{m.reward!r},{m.q1_mean!r},"
                    f"{m.q2_mean!r},{m.delta_adj_mean!r},{m.v_explore!r},"
                    f"{m.loss_critic!r},{m.loss_actor!r}\n")


def evaluate(trainer: Trainer, env, n_episodes: int):
    """Noise-free rollouts. Returns (metrics dict, trajectory rows).

    Trajectory rows are (global_step, agent_id, x, y, theta, reward) with
    the per-step reward repeated on every agent row of that step.
    """
    rows = []
    rewards = []
    distances = []  # leader-to-follower, tracking/obstacle only
    offset_errors = None
    pair_errors = None
    episode_lengths = []
    collisions = 0
    contacts = 0
    breaches = 0
    if isinstance(env, UnisonEnv):
        offset_errors = [[] for _ in env.offsets]
    if isinstance(env, ConsensusEnv):
        pair_errors = None  # sized on first step
    gstep = 0
    for _ in range(n_episodes):
        obs = env.reset()
        steps = 0
        for _ in range(env.episode_len):
            action = trainer.act(obs, explore=False)
            obs, reward, done = env.step(action)
            rewards.append(float(reward))
            for agent_id, (x, y, theta) in env.positions().items():
                rows.append((gstep, agent_id, x, y, theta, float(reward)))
            if isinstance(env, (TrackingEnv, ObstacleEnv)):
                p_l = env.leader_pos
                f = env.followers[0]
                distances.append(float(np.hypot(p_l[0] - f.x, p_l[1] - f.y)))
            if isinstance(env, UnisonEnv):
                pts = env._follower_positions()
                for k, (p, off) in enumerate(zip(pts, env.offsets)):
                    offset_errors[k].append(
                        float(np.linalg.norm(p - (env.leader_pos + off))))
            if isinstance(env, ConsensusEnv):
                dists = env.pair_distances()
                if pair_errors is None:
                    pair_errors = [[] for _ in dists]
                for k, d in enumerate(dists):
                    pair_errors[k].append(abs(d - env.cfg.consensus_dist))
            if env.last_event == "collision":
                collisions += 1
            elif env.last_event == "contact":
                contacts += 1
            elif env.last_event == "breach":
                breaches += 1
            gstep += 1
            steps += 1
            if done:
                break
        episode_lengths.append(steps)

    metrics = {
        "avg_reward": float(np.mean(rewards)) if rewards else 0.0,
        "mean_episode_len": float(np.mean(episode_lengths)),
        "collisions": collisions,
        "contacts": contacts,
        "breaches": breaches,
    }
    if distances:
        metrics["avg_distance"] = float(np.mean(distances))
    if offset_errors is not None:
        metrics["offset_errors"] = [float(np.mean(e)) for e in offset_errors]
    if pair_errors is not None:
        metrics["pair_errors"] = [float(np.mean(e)) for e in pair_errors]
    return metrics, rows


def write_trajectory_csv(path, rows) -> None:
    with open(path, "w") as f:
        f.write(TRAJECTORY_HEADER + "\n")
        for step, agent_id, x, y, theta, reward in rows:
            f.write(f"{step},{agent_id},{x!r},{y!r},{theta!r},{reward!r}\n")


def run_seed(cfg: ExperimentConfig, seed: int, out_dir: str) -> RunSummary:
    """Train and evaluate one seed; writes all artifacts under out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    root = np.random.SeedSequence([seed, 0xA5])
    ss_trainer, ss_env, ss_eval = root.spawn(3)

    env = make_env(cfg.task, cfg.env_config(), cfg.leader, seed=ss_env)
    trainer = Trainer(env.obs_dim, env.act_dim, cfg.trainer_config(),
                      rule_kind=cfg.algorithm, seed=ss_trainer)

    summary = RunSummary(seed=seed, task=cfg.task, algorithm=cfg.algorithm,
                         leader=cfg.leader)
    metrics_rows: list[StepMetrics] = []
    for ep in range(cfg.episodes):
        es = trainer.train_episode(env, episode_index=ep, metrics=metrics_rows)
        summary.episode_rewards.append(es.total_reward)
        summary.episode_lengths.append(es.steps)
    write_metrics_csv(os.path.join(out_dir, "metrics.csv"), metrics_rows)

    net.save_params(trainer.actor, os.path.join(out_dir, "actor.ckpt"))
    net.save_params(trainer.critic1, os.path.join(out_dir, "critic1.ckpt"))
    net.save_params(trainer.critic2, os.path.join(out_dir, "critic2.ckpt"))

    eval_leaders = [cfg.leader]
    if cfg.task == "tracking":
        eval_leaders += [k for k in ("random", "circle", "square")
                         if k != cfg.leader]
    for i, kind in enumerate(eval_leaders):
        eval_env = make_env(cfg.task, cfg.env_config(), kind,
                            seed=np.random.SeedSequence([seed, 0xE7, i]))
        metrics, rows = evaluate(trainer, eval_env, cfg.eval_episodes)
        summary.eval[kind] = metrics
        name = "trajectory.csv" if kind == cfg.leader else f"trajectory_{kind}.csv"
        write_trajectory_csv(os.path.join(out_dir, name), rows)

    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        json.dump(summary.to_json(), f, indent=2, sort_keys=True)
    return summary


def run_experiment(cfg: ExperimentConfig, out_dir: str) -> list[RunSummary]:
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.txt"), "w") as f:
        f.write(serialize_config(cfg))
    summaries = []
    for seed in cfg.seeds:
        summaries.append(run_seed(cfg, seed, os.path.join(out_dir, f"seed_{seed}")))
    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        json.dump([s.to_json() for s in summaries], f, indent=2, sort_keys=True)
    return summaries


def smooth_rewards(series, window: int):
    """Centered box filter; edge windows are truncated so len(out) == len(in)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        return x
    kernel = np.ones(min(window, x.size))
    sums = np.convolve(x, kernel, mode="same")
    counts = np.convolve(np.ones_like(x), kernel, mode="same")
    return sums / counts


def load_experiment_summaries(out_dir: str) -> list[RunSummary]:
    with open(os.path.join(out_dir, "summary.json")) as f:
        return [RunSummary.from_json(d) for d in json.load(f)]


def compare_runs(summaries_a: list[RunSummary], summaries_b: list[RunSummary],
                 smooth_window: int = 200, final_window: int = 50) -> dict:
    """Side-by-side report of two seed groups on the same task."""
    for group in (summaries_a, summaries_b):
        if len(group) < 2:
            raise ValueError("need at least 2 seeds per algorithm")
    tasks = {s.task for s in summaries_a} | {s.task for s in summaries_b}
    if len(tasks) != 1:
        raise ValueError(f"mismatched tasks across runs: {sorted(tasks)}")

    def group_stats(group: list[RunSummary]) -> dict:
        n_ep = min(len(s.episode_rewards) for s in group)
        rewards = np.array([s.episode_rewards[:n_ep] for s in group])
        lengths = np.array([s.episode_lengths[:n_ep] for s in group])
        smoothed = np.array([smooth_rewards(r, smooth_window) for r in rewards])
        w = min(final_window, n_ep)
        return {
            "algorithm": group[0].algorithm,
            "seeds": [s.seed for s in group],
            "episodes": n_ep,
            "mean_curve": smoothed.mean(axis=0).tolist(),
            "low_curve": smoothed.min(axis=0).tolist(),
            "high_curve": smoothed.max(axis=0).tolist(),
            "final_mean_reward": float(rewards[:, -w:].mean()),
            "final_mean_episode_len": float(lengths[:, -w:].mean()),
        }

    a, b = group_stats(summaries_a), group_stats(summaries_b)
    return {
        "task": tasks.pop(),
        "a": a,
        "b": b,
        "final_reward_diff": a["final_mean_reward"] - b["final_mean_reward"],
        "final_episode_len_diff":
            a["final_mean_episode_len"] - b["final_mean_episode_len"],
    }


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise ValueError(f"{path}:1: empty file")
    header = lines[0].split(",")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, "
                             f"got {len(parts)}")
        rows.append(parts)
    return header, rows


def load_trajectory(path):
    """Trajectory CSV as {agent_id: (steps, x, y, theta, reward) arrays}."""
    header, rows = _read_csv(path)
    if header != TRAJECTORY_HEADER.split(","):
        raise ValueError(f"{path}:1: unexpected trajectory header")
    agents: dict[str, list] = {}
    for lineno, parts in enumerate(rows, start=2):
        try:
            step = int(parts[0])
            vals = [float(v) for v in parts[2:]]
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}")
        agents.setdefault(parts[1], []).append((step, *vals))
    return {k: np.array(v) for k, v in agents.items()}


def render_plots(trajectory_csv, metrics_csv, out_dir,
                 smooth_window: int = 200) -> list[str]:
    """Trajectory overlay and smoothed reward curve as SVG files."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    written = []

    agents = load_trajectory(trajectory_csv)
    fig, ax = plt.subplots(figsize=(6, 6))
    for agent_id, data in sorted(agents.items()):
        style = {"linewidth": 1.2}
        if agent_id == "leader":
            style.update(color="black", linewidth=1.8)
        elif agent_id.startswith("obstacle"):
            style.update(color="red", linestyle="--")
        ax.plot(data[:, 1], data[:, 2], label=agent_id, **style)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.legend(fontsize=8)
    traj_path = os.path.join(out_dir, "trajectory.svg")
    fig.savefig(traj_path)
    plt.close(fig)
    written.append(traj_path)

    header, rows = _read_csv(metrics_csv)
    if header != METRICS_HEADER.split(","):
        raise ValueError(f"{metrics_csv}:1: unexpected metrics header")
    if not rows:
        print(f"note: {metrics_csv} has no data rows; skipping reward plot")
        return written
    try:
        rewards = np.array([float(r[2]) for r in rows])
    except ValueError as exc:
        raise ValueError(f"{metrics_csv}: bad reward value: {exc}")
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(smooth_rewards(rewards, smooth_window), linewidth=1.2)
    ax.set_xlabel("training step")
    ax.set_ylabel(f"reward (box filter, window {smooth_window})")
    reward_path = os.path.join(out_dir, "rewards.svg")
    fig.savefig(reward_path)
    plt.close(fig)
    written.append(reward_path)
    return written
