"""Command-line entry point: train / eval / compare / plot / tabular."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np


def _add_common_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int, help="override: single training seed")
    p.add_argument("--algo", choices=["mpg", "td3", "ddpg"])
    p.add_argument("--task", choices=["tracking", "unison", "consensus", "obstacle"])
    p.add_argument("--leader", choices=["circle", "square", "random", "line"])
    p.add_argument("--episodes", type=int)
    p.add_argument("--profile", choices=["paper", "desk"])


def _load_config(args):
    from .config import ExperimentConfig, parse_config
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seeds=(args.seed,))
    if args.algo:
        cfg = dataclasses.replace(cfg, algorithm=args.algo)
    if args.task:
        cfg = dataclasses.replace(cfg, task=args.task)
    if args.leader:
        cfg = dataclasses.replace(cfg, leader=args.leader)
    if args.episodes is not None:
        cfg = dataclasses.replace(cfg, episodes=args.episodes)
    if args.profile:
        cfg = dataclasses.replace(cfg, profile=args.profile)
    cfg.validate()
    return cfg


def cmd_train(args) -> int:
    from .harness import run_experiment
    cfg = _load_config(args)
    summaries = run_experiment(cfg, args.out)
    for s in summaries:
        last = s.episode_rewards[-1] if s.episode_rewards else float("nan")
        print(f"seed {s.seed}: {len(s.episode_rewards)} episodes, "
              f"last episode reward {last:.3f}")
    print(f"outputs in {args.out}")
    return 0


def cmd_eval(args) -> int:
    from . import net
    from .agent import Trainer
    from .config import parse_config
    from .envs import make_env
    from .harness import evaluate, write_trajectory_csv

    cfg = parse_config(os.path.join(args.run, os.pardir, "config.txt"))
    leader = args.leader or cfg.leader
    env = make_env(cfg.task, cfg.env_config(), leader,
                   seed=np.random.SeedSequence([args.seed, 0xE7]))
    trainer = Trainer(env.obs_dim, env.act_dim, cfg.trainer_config(),
                      rule_kind=cfg.algorithm, seed=args.seed)
    trainer.actor = net.load_params(os.path.join(args.run, "actor.ckpt"))
    metrics, rows = evaluate(trainer, env, args.episodes)
    out = args.out or args.run
    os.makedirs(out, exist_ok=True)
    write_trajectory_csv(os.path.join(out, f"eval_trajectory_{leader}.csv"), rows)
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return 0


def cmd_compare(args) -> int:
    from .harness import compare_runs, load_experiment_summaries
    report = compare_runs(load_experiment_summaries(args.run_a),
                          load_experiment_summaries(args.run_b))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "comparison.json")
    with open(path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
    for side in ("a", "b"):
        g = report[side]
        print(f"{g['algorithm']}: final mean reward {g['final_mean_reward']:.4f}, "
              f"final mean episode length {g['final_mean_episode_len']:.1f}")
    print(f"report written to {path}")
    return 0


def cmd_plot(args) -> int:
    from .harness import render_plots
    written = render_plots(args.trajectory, args.metrics, args.out)
    for path in written:
        print(path)
    return 0


def cmd_tabular(args) -> int:
    from .tabular import convergence_experiment, random_mdp, value_iteration
    os.makedirs(args.out, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    errors = []
    for i in range(args.mdps):
        mdp = random_mdp(
            n_states=int(rng.integers(2, 11)),
            n_actions=int(rng.integers(2, 5)),
            gamma=args.gamma, reward_noise=0.1, rng=rng,
        )
        q_star = value_iteration(mdp, 1e-10)
        trace = convergence_experiment(
            mdp, n_steps=args.steps, seed=args.seed + 1000 + i,
            mode=args.mode, q_star=q_star, alpha_power=args.alpha_power,
        )
        trace.write_csv(os.path.join(args.out, f"trace_{i:02d}.csv"))
        errors.append(trace.terminal_error)
        print(f"mdp {i:02d}: terminal sup error {trace.terminal_error:.5f}")
    print(f"median terminal sup error: {float(np.median(errors)):.5f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpgrl",
        description="Momentum-target actor-critic training and "
                    "leader-follower control experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one experiment configuration")
    _add_common_overrides(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved checkpoint")
    p.add_argument("--run", required=True, help="seed directory of a train run")
    p.add_argument("--leader", choices=["circle", "square", "random", "line"])
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("compare", help="compare two experiment directories")
    p.add_argument("--run-a", required=True)
    p.add_argument("--run-b", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("plot", help="render trajectory and reward plots")
    p.add_argument("--trajectory", required=True)
    p.add_argument("--metrics", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_plot)

    p = sub.add_parser("tabular", help="tabular convergence experiment suite")
    p.add_argument("--mdps", type=int, default=20)
    p.add_argument("--steps", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--mode", choices=["shared", "alternating"], default="shared")
    p.add_argument("--alpha-power", type=float, default=1.0,
                   help="step size = visit-count ** -p, for p in (0.5, 1]")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_tabular)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
