"""Command-line entry point: train, bench-landscape, and eval.

Exit codes: 0 success, 1 runtime failure (e.g. unreadable checkpoint),
2 invalid configuration or usage (the message names the offending field).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import evalharness
from .config import ConfigError, SCHEMA_VERSION, load_config
from .envs import NONSTATIONARY_DRIFT_RATE
from .learner import SacLearner
from .nets import load_params
from .rngstreams import substream


def _parse_ablate(raw: str) -> dict[tuple[str, str], object]:
    """Parse --ablate "no_buffer,alpha_zero,beta=1,refresh_start=300"."""
    out: dict[tuple[str, str], object] = {}
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" in part:
            key, _, value = part.partition("=")
            key = key.strip()
            if key not in ("beta", "refresh_start"):
                raise ConfigError(f"ablate.{key}: not a valued ablation flag")
            out[("ablate", key)] = value.strip()
        else:
            if part not in ("no_buffer", "alpha_zero", "no_symmetrize"):
                raise ConfigError(f"ablate.{part}: unknown ablation flag")
            out[("ablate", part)] = True
    return out


def _train_overrides(args) -> dict[tuple[str, str], object]:
    overrides: dict[tuple[str, str], object] = {}
    if args.seed is not None:
        overrides[("run", "seed")] = args.seed
    if args.out is not None:
        overrides[("run", "out")] = args.out
    if args.method is not None:
        overrides[("run", "method")] = args.method
    if args.rounds is not None:
        overrides[("run", "rounds")] = args.rounds
    if args.eval_every is not None:
        overrides[("run", "eval_every")] = args.eval_every
    if args.paper_hparams:
        overrides[("run", "paper_hparams")] = True
    if args.ablate:
        overrides.update(_parse_ablate(args.ablate))
    return overrides


def cmd_train(args) -> int:
    from .game import train

    try:
        cfg = load_config(args.config, _train_overrides(args))
        cfg.require_out()
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    run_dir = train(cfg)
    print(f"run complete: {run_dir}")
    return 0


def cmd_bench_landscape(args) -> int:
    try:
        result = bench_mod.run_bench(
            optimizer=args.optimizer,
            variant=args.variant,
            steps=args.steps,
            seed=args.seed,
            drift_rate=args.drift_rate,
            refresh_beta=args.refresh_beta,
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    frac = result.fraction_near_center()
    tail = result.mean_tail_distance(100)
    print(
        f"bench {args.optimizer} {args.variant} steps={args.steps} seed={args.seed}: "
        f"frac_final500_within_0.1={frac:.3f} mean_final100_distance={tail:.4f}"
    )
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        stem = f"{args.optimizer}_{args.variant}_seed{args.seed}"
        csv_path = os.path.join(args.out, stem + ".csv")
        with open(csv_path, "w") as f:
            f.write("step,g0,g1,regret,center_x,center_y\n")
            for t in range(args.steps):
                f.write(
                    f"{t},{result.proposals[t,0]!r},{result.proposals[t,1]!r},"
                    f"{result.regrets[t]!r},{result.centers[t,0]!r},{result.centers[t,1]!r}\n"
                )
        summary = {
            "schema_version": SCHEMA_VERSION,
            "optimizer": args.optimizer,
            "variant": args.variant,
            "steps": args.steps,
            "seed": args.seed,
            "fraction_final500_within_0.1": frac,
            "mean_final100_distance_to_center": tail,
            "settings": result.settings,
        }
        with open(os.path.join(args.out, stem + ".json"), "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
    return 0


def cmd_eval(args) -> int:
    ckpt_path = args.checkpoint
    if not os.path.exists(ckpt_path):
        print(f"error: checkpoint {ckpt_path!r} does not exist", file=sys.stderr)
        return 1
    config_path = args.config
    if config_path is None:
        run_dir = os.path.dirname(os.path.dirname(os.path.abspath(ckpt_path)))
        candidate = os.path.join(run_dir, "config.ini")
        config_path = candidate if os.path.exists(candidate) else None
    try:
        overrides: dict[tuple[str, str], object] = {}
        if args.seed is not None:
            overrides[("run", "seed")] = args.seed
        cfg = load_config(config_path, overrides)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        named = load_params(ckpt_path)
    except (OSError, ValueError, json.JSONDecodeError) as e:
        print(f"error: cannot read checkpoint: {e}", file=sys.stderr)
        return 1

    env = cfg.make_env()
    reward_spec = cfg.make_reward_spec()
    bob = SacLearner(env.obs_dim, cfg.goal_dim, np.array([-1.0, -1.0]), np.array([1.0, 1.0]),
                     cfg.make_learner_cfg(), substream(cfg.seed, "bob", 0))
    try:
        bob.load_named_params("bob", named)
    except ValueError as e:
        print(f"error: corrupt or mismatched checkpoint: {e}", file=sys.stderr)
        return 1

    extra = 1 if cfg.misspecified else 0
    if args.goal is not None:
        try:
            goal = np.array([float(v) for v in args.goal.split(",")])
        except ValueError:
            print(f"error: --goal expects comma-separated floats, got {args.goal!r}",
                  file=sys.stderr)
            return 2
        spec = evalharness.EvalSpec(name="explicit", goal_list=goal[None, :],
                                    n_episodes=args.episodes, extra_goal_dims=extra)
    elif args.goals == "gid":
        spec = evalharness.EvalSpec(name="gid", goal_space=cfg.gid_space(),
                                    n_episodes=args.episodes, extra_goal_dims=extra)
    elif args.goals == "ood":
        spec = evalharness.EvalSpec(name="ood", goal_space=cfg.ood_space(),
                                    n_episodes=args.episodes, extra_goal_dims=extra)
    else:
        spec = evalharness.behind_obstacles_spec(n_episodes=args.episodes, extra_goal_dims=extra)

    rng = substream(cfg.seed, "eval", args.round)
    result = evalharness.evaluate(bob, spec, env, reward_spec, rng)
    record = result.to_record(args.round)
    print(f"eval {spec.name}: success_rate={result.success_rate:.4f} "
          f"({result.n_episodes} episodes)")
    if args.out:
        with open(args.out, "w") as f:
            f.write(json.dumps(record) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cusplab",
                                     description="Curriculum self play laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one training budget")
    p_train.add_argument("--config", default=None, help="INI config file")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--out", default=None, help="output directory")
    p_train.add_argument("--method", default=None,
                         choices=["cusp", "domain_randomization", "paired_single",
                                  "single_learner", "asp_sparse", "asp_dense"])
    p_train.add_argument("--rounds", type=int, default=None)
    p_train.add_argument("--eval-every", type=int, default=None)
    p_train.add_argument("--paper-hparams", action="store_true")
    p_train.add_argument("--ablate", default=None,
                         help="comma list: no_buffer, alpha_zero, no_symmetrize, beta=V, refresh_start=N")
    p_train.set_defaults(func=cmd_train)

    p_bench = sub.add_parser("bench-landscape", help="toy regret-landscape bench")
    p_bench.add_argument("--variant", choices=["stationary", "nonstationary"], required=True)
    p_bench.add_argument("--optimizer", choices=list(bench_mod.OPTIMIZERS), required=True)
    p_bench.add_argument("--steps", type=int, default=5000)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", default=None, help="directory for proposal CSV + summary")
    p_bench.add_argument("--drift-rate", type=float, default=None,
                         help=f"nonstationary drift per round (default {NONSTATIONARY_DRIFT_RATE})")
    p_bench.add_argument("--refresh-beta", type=float, default=0.0,
                         help="blend weight for sac_refresh (0 = replace)")
    p_bench.set_defaults(func=cmd_bench_landscape)

    p_eval = sub.add_parser("eval", help="evaluate a saved checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--config", default=None, help="config INI (default: sibling of checkpoint)")
    p_eval.add_argument("--goals", choices=["gid", "ood", "behind_obstacles"], default="gid")
    p_eval.add_argument("--goal", default=None,
                        help="evaluate a single explicit goal, e.g. --goal 0.1,-0.2")
    p_eval.add_argument("--episodes", type=int, default=50)
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.add_argument("--round", type=int, default=0,
                        help="evaluation stream index; matching a training eval round "
                             "reproduces that record exactly")
    p_eval.add_argument("--out", default=None, help="write the eval record JSON here")
    p_eval.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
