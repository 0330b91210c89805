"""Command-line front end for the full pipeline.

Subcommands: generate, pattern, beams, train-ppo, train-dqn, baseline,
evaluate, latency. All commands that take a --seed produce bit-identical
output files across runs; the latency command is the one deliberate
exception (it reports wall-clock timings).
"""

import argparse
import csv
import os
import sys

import numpy as np

from . import dqn as dqn_mod
from . import ppo as ppo_mod
from .antenna import total_gain_db
from .beams import build_beam_gain_table, read_beam_tables, write_beam_tables
from .channel import generate_dataset, read_dataset, write_dataset
from .config import (AnnealConfig, ArrayConfig, DQNConfig, ElementPattern,
                     LinkBudget, PPOConfig, SceneConfig,
                     boresights_toward_origin, parse_kv_file)
from .env import AssociationEnv
from .errors import ConfigError, EvaluationError, UavRrmError
from .evaluation import (ClosestBsMethod, HungarianMethod, MaxGainMethod,
                         PolicyMethod, QNetMethod, RandomMethod, aggregate,
                         benchmark_latency, evaluate, write_curve_csv,
                         write_records_csv, write_summary_json)

BASELINE_NAMES = ("hungarian", "maxgain", "closest", "random")


def _load_kv(path):
    return parse_kv_file(path) if path else {}


def _make_env(dataset_path, beams_path, kv):
    scenarios = read_dataset(dataset_path)
    tables = read_beam_tables(beams_path)
    if not scenarios:
        raise ConfigError("dataset is empty")
    num_beams = scenarios[0].channel.shape[2]
    budget = LinkBudget.from_kv(kv, num_beams)
    return AssociationEnv(scenarios, tables, budget)


def _scene_for_dataset(kv, shape):
    scene = SceneConfig.from_kv(kv)
    m, l, n = shape
    if (scene.num_uavs, scene.num_bs, scene.num_beams) != (m, l, n):
        raise ConfigError(
            f"config declares (M, L, N) = ({scene.num_uavs}, {scene.num_bs}, "
            f"{scene.num_beams}) but the dataset holds ({m}, {l}, {n})")
    return scene


def _make_method(name, env, kv, checkpoints_dir, seed):
    if name == "ppo":
        policy, normalizer, shape = ppo_mod.load_policy(
            os.path.join(checkpoints_dir, "ppo.ckpt"))
        if shape != env.shape:
            raise EvaluationError(
                f"PPO checkpoint shape {shape} does not match dataset {env.shape}")
        return PolicyMethod(policy, normalizer)
    if name == "dqn":
        qnet, normalizer, shape = dqn_mod.load_qnet(
            os.path.join(checkpoints_dir, "dqn.ckpt"))
        if shape != env.shape:
            raise EvaluationError(
                f"DQN checkpoint shape {shape} does not match dataset {env.shape}")
        return QNetMethod(qnet, normalizer)
    if name == "hungarian":
        return HungarianMethod()
    if name == "maxgain":
        return MaxGainMethod()
    if name == "closest":
        scene = _scene_for_dataset(kv, env.shape)
        return ClosestBsMethod(np.asarray(scene.bs_positions, dtype=float))
    if name == "random":
        return RandomMethod(seed=seed)
    raise ConfigError(f"unknown method {name!r}")


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(args):
    kv = _load_kv(args.config)
    scene = SceneConfig.from_kv(kv)
    seed = scene.seed if args.seed is None else args.seed
    scenarios = generate_dataset(scene, args.count, seed=seed)
    write_dataset(scenarios, args.out)
    print(f"wrote {len(scenarios)} scenarios to {args.out}")
    return 0


def cmd_pattern(args):
    kv = _load_kv(args.config)
    pat = ElementPattern.from_kv(kv)
    arr = ArrayConfig.from_kv(kv)
    thetas = np.arange(0.0, 180.0 + args.step / 2, args.step)
    phis = np.arange(-180.0, 180.0, args.step)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta_deg", "phi_deg", "total_gain_db"])
        for theta in thetas:
            for phi in phis:
                g = total_gain_db(pat, arr, float(theta), float(phi), args.scan)
                writer.writerow([repr(float(theta)), repr(float(phi)), repr(g)])
    print(f"wrote {len(thetas) * len(phis)} grid points to {args.out}")
    return 0


def cmd_beams(args):
    kv = _load_kv(args.config)
    scenarios = read_dataset(args.dataset)
    if not scenarios:
        raise ConfigError("dataset is empty")
    scene = _scene_for_dataset(kv, scenarios[0].channel.shape)
    boresights = boresights_toward_origin(scene.bs_positions)
    pat = ElementPattern.from_kv(kv)
    arr = ArrayConfig.from_kv(kv, boresight_az_deg=boresights)
    seed = scene.seed if args.seed is None else args.seed
    anneal = AnnealConfig(seed=seed)
    tables = [build_beam_gain_table(s, pat, arr, anneal, scenario_index=i)
              for i, s in enumerate(scenarios)]
    write_beam_tables(tables, args.out)
    print(f"wrote {len(tables)} beam gain tables to {args.out}")
    return 0


def cmd_train_ppo(args):
    kv = _load_kv(args.config)
    env = _make_env(args.dataset, args.beams, kv)
    cfg = PPOConfig.from_kv(kv)
    if args.seed is not None:
        cfg.seed = args.seed
    policy, curve = ppo_mod.train(env, cfg)
    ppo_mod.save_policy(args.out, policy, env.normalizer, env.shape)
    write_curve_csv(curve, args.curve, beta_name="entropy_beta")
    print(f"wrote checkpoint {args.out}, curve {args.curve} "
          f"(final mean reward {curve[-1][1]:.4f})")
    return 0


def cmd_train_dqn(args):
    kv = _load_kv(args.config)
    env = _make_env(args.dataset, args.beams, kv)
    cfg = DQNConfig.from_kv(kv)
    if args.seed is not None:
        cfg.seed = args.seed
    qnet, curve = dqn_mod.train(env, cfg)
    dqn_mod.save_qnet(args.out, qnet, env.normalizer, env.shape)
    write_curve_csv(curve, args.curve, beta_name="epsilon")
    print(f"wrote checkpoint {args.out}, curve {args.curve} "
          f"(final mean reward {curve[-1][1]:.4f})")
    return 0


def cmd_baseline(args):
    kv = _load_kv(args.config)
    env = _make_env(args.dataset, args.beams, kv)
    method = _make_method(args.method, env, kv, checkpoints_dir="", seed=args.seed or 0)
    records = evaluate(method, env)
    write_records_csv(records, args.out)
    summary = aggregate(records)
    print(f"{args.method}: mean reward {summary['mean_reward']:.4f} over "
          f"{summary['num_scenarios']} scenarios, wrote {args.out}")
    return 0


def cmd_evaluate(args):
    kv = _load_kv(args.config)
    env = _make_env(args.dataset, args.beams, kv)
    names = [m.strip() for m in args.methods.split(",") if m.strip()]
    os.makedirs(args.out, exist_ok=True)
    summaries = {}
    for name in names:
        method = _make_method(name, env, kv, args.checkpoints, seed=args.seed or 0)
        records = evaluate(method, env, check_consistency=True)
        write_records_csv(records, os.path.join(args.out, f"{name}_records.csv"))
        summary = aggregate(records)
        with open(os.path.join(args.out, f"{name}_cdf.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rate_mbps", "cdf"])
            for x, y in zip(summary["cdf_rate_mbps"], summary["cdf_fraction"]):
                writer.writerow([repr(x), repr(y)])
        summaries[name] = {k: v for k, v in summary.items()
                           if not k.startswith("cdf_")}
        print(f"{name}: mean rate {summary['mean_rate_mbps']:.4f} Mb/s, "
              f"p5 {summary['p5_rate_mbps']:.4f}, mean reward "
              f"{summary['mean_reward']:.4f}")
    write_summary_json(summaries, os.path.join(args.out, "summary.json"))
    return 0


def cmd_latency(args):
    # timing report; this is the one output that is not bit-reproducible
    kv = _load_kv(args.config)
    env = _make_env(args.dataset, args.beams, kv)
    names = [m.strip() for m in args.methods.split(",") if m.strip()]
    rows = []
    for name in names:
        method = _make_method(name, env, kv, args.checkpoints, seed=args.seed or 0)
        stats = benchmark_latency(method, env, repetitions=args.repetitions)
        rows.append(stats)
        print(f"{name}: mean {stats['mean_ms']:.3f} ms, "
              f"median-of-means {stats['median_of_means_ms']:.3f} ms")
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "num_uavs", "mean_ms", "std_ms",
                         "median_of_means_ms", "repetitions"])
        for s in rows:
            writer.writerow([s["method"], s["num_uavs"], s["mean_ms"],
                             s["std_ms"], s["median_of_means_ms"],
                             s["repetitions"]])
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="uavrrm",
        description="UAV-BS-beam association workbench: channel twin, beam "
                    "optimization, learners, baselines and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample scenarios into a dataset file")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("pattern", help="dump antenna gain over a theta x phi grid")
    p.add_argument("--config", default=None)
    p.add_argument("--scan", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--step", type=float, default=1.0)
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("beams", help="optimize per-link beam gains into a table file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_beams)

    p = sub.add_parser("train-ppo", help="train the multi-head PPO policy")
    p.add_argument("--dataset", required=True)
    p.add_argument("--beams", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--curve", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train_ppo)

    p = sub.add_parser("train-dqn", help="train the multi-head DQN baseline")
    p.add_argument("--dataset", required=True)
    p.add_argument("--beams", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--curve", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train_dqn)

    p = sub.add_parser("baseline", help="run one heuristic baseline over a dataset")
    p.add_argument("--method", required=True, choices=BASELINE_NAMES)
    p.add_argument("--dataset", required=True)
    p.add_argument("--beams", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("evaluate", help="evaluate methods on held-out scenarios")
    p.add_argument("--methods", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--beams", required=True)
    p.add_argument("--checkpoints", default=".")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("latency", help="benchmark per-decision inference latency")
    p.add_argument("--methods", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--beams", required=True)
    p.add_argument("--checkpoints", default=".")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--repetitions", type=int, default=100)
    p.set_defaults(func=cmd_latency)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UavRrmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
