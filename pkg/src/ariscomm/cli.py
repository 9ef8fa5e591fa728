"""Experiment driver: train, evaluate, run baselines, aggregate metrics.

Artifacts per training run (one directory per seed):
    metrics.csv      one row per episode
    checkpoint/      networks + manifest (final; optional periodic copies)
    manifest.json    resolved configs, seed, algorithm, step count

Evaluation and baseline runs emit a JSON-lines trajectory (one record per
slot) plus a summary.json.  ``summarize`` aggregates the final-window
episode sum-rates of several runs grouped by (algorithm, mode).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .agent import (
    ALGORITHMS,
    SacConfig,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .environment import (
    MODES,
    ArisEnv,
    EnvConfig,
    env_config_to_dict,
    load_env_config,
    write_episode_log,
)
from .replay import ReplayConfig

METRIC_FIELDS = ("episode", "steps", "return", "sum_rate", "energy_used",
                 "boundary", "speed", "accel", "separation")


def _env_config(args) -> EnvConfig:
    cfg = load_env_config(args.config) if args.config else EnvConfig()
    baseline = getattr(args, "baseline", None)
    if baseline and baseline != cfg.mode:
        cfg = replace(cfg, mode=baseline)
    return cfg


def _train_configs(args) -> tuple[SacConfig, ReplayConfig]:
    sac_kwargs, replay_kwargs = {}, {}
    if getattr(args, "train_config", None):
        with open(args.train_config) as f:
            overrides = json.load(f)
        unknown = set(overrides) - {"sac", "replay"}
        if unknown:
            raise ValueError(f"unknown training config sections: {sorted(unknown)}")
        sac_kwargs = overrides.get("sac", {})
        replay_kwargs = overrides.get("replay", {})
    if "hidden" in sac_kwargs:
        sac_kwargs["hidden"] = tuple(sac_kwargs["hidden"])
    return SacConfig(**sac_kwargs), ReplayConfig(**replay_kwargs)


def _write_metrics(path, episodes):
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=METRIC_FIELDS)
        writer.writeheader()
        for row in episodes:
            writer.writerow({k: row[k] for k in METRIC_FIELDS})


def _read_metrics(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def cmd_train(args) -> int:
    cfg = _env_config(args)
    sac_cfg, replay_cfg = _train_configs(args)
    steps = args.steps
    if steps is None and args.episodes is not None:
        steps = args.episodes * cfg.num_slots
    if steps is None or steps < 1:
        raise ValueError("provide --steps or --episodes (positive)")
    seeds = args.seed or [0]
    for seed in seeds:
        out = Path(args.out) / f"seed_{seed}"
        out.mkdir(parents=True, exist_ok=True)
        env = ArisEnv(cfg, seed=seed)
        agent, start_step = None, 0
        if args.checkpoint:
            agent, manifest = load_checkpoint(args.checkpoint)
            start_step = int(manifest.get("total_steps", 0))
        result = train(
            env, sac_cfg, replay_cfg, total_steps=steps, seed=seed,
            algorithm=args.algo, agent=agent, start_step=start_step,
            checkpoint_dir=out / "checkpoints" if args.checkpoint_every else None,
            checkpoint_every=args.checkpoint_every,
        )
        _write_metrics(out / "metrics.csv", result.episodes)
        if result.agent is not None:
            save_checkpoint(result.agent, out / "checkpoint",
                            extra={"total_steps": result.total_steps,
                                   "seed": seed, "algorithm": args.algo})
        manifest = {
            "seed": seed,
            "algorithm": args.algo,
            "mode": cfg.mode,
            "total_steps": result.total_steps,
            "episodes": len(result.episodes),
            "resumed_from": str(args.checkpoint) if args.checkpoint else None,
            "env_config": env_config_to_dict(cfg),
            "sac_config": asdict(sac_cfg),
            "replay_config": asdict(replay_cfg),
        }
        with open(out / "manifest.json", "w") as f:
            json.dump(manifest, f, indent=2)
            f.write("\n")
        print(f"seed {seed}: {len(result.episodes)} episodes, "
              f"{result.total_steps} total steps -> {out}")
    return 0


def _run_eval(args, require_baseline: bool) -> int:
    if require_baseline and not args.baseline:
        raise ValueError("--baseline is required for this subcommand")
    cfg = _env_config(args)
    seed = (args.seed or [0])[0]
    env = ArisEnv(cfg, seed=seed)
    agent = None
    if args.checkpoint:
        agent, _ = load_checkpoint(args.checkpoint)
    elif not require_baseline:
        raise ValueError("--checkpoint is required for eval")
    res = evaluate(env, agent, episodes=args.eval_episodes, seed=seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_episode_log(out / "trajectory.jsonl", res.records)
    summary = {
        "mode": cfg.mode,
        "seed": seed,
        "episodes": args.eval_episodes,
        "checkpoint": str(args.checkpoint) if args.checkpoint else None,
        "mean_slot_sum_rate": res.mean_slot_rate,
        "mean_episode_sum_rate": res.mean_episode_rate,
        "mean_return": res.mean_return,
        "mean_energy_used": res.mean_energy_used,
    }
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")
    print(f"{cfg.mode}: mean slot sum-rate {res.mean_slot_rate:.4f} "
          f"bits/s/Hz over {args.eval_episodes} episode(s) -> {out}")
    return 0


def cmd_eval(args) -> int:
    return _run_eval(args, require_baseline=False)


def cmd_baseline(args) -> int:
    return _run_eval(args, require_baseline=True)


def cmd_summarize(args) -> int:
    rows = []
    groups: dict[tuple, list] = {}
    for run_dir in args.runs:
        run = Path(run_dir)
        metrics = _read_metrics(run / "metrics.csv")
        if not metrics:
            raise ValueError(f"{run}: empty metrics.csv")
        with open(run / "manifest.json") as f:
            manifest = json.load(f)
        window = max(1, len(metrics) // 5)
        final = [float(r["sum_rate"]) for r in metrics[-window:]]
        key = (manifest.get("algorithm", "?"), manifest.get("mode", "?"))
        groups.setdefault(key, []).append(float(np.mean(final)))
    for (algo, mode), scores in sorted(groups.items()):
        rows.append({
            "algorithm": algo,
            "mode": mode,
            "runs": len(scores),
            "mean_final_sum_rate": float(np.mean(scores)),
            "std_final_sum_rate": float(np.std(scores)),
        })
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=["algorithm", "mode", "runs",
                                               "mean_final_sum_rate",
                                               "std_final_sum_rate"])
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} group(s) -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ariscomm",
        description="Tilt-aware aerial-RIS experiment driver",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="scenario config JSON (defaults to the built-in scenario)")
        p.add_argument("--seed", type=int, action="append",
                       help="random seed; repeatable")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--baseline", choices=MODES, default=None,
                       help="scheme variant to run")

    p_train = sub.add_parser("train", help="train an agent, one run per seed")
    common(p_train)
    p_train.add_argument("--steps", type=int, default=None, help="environment steps")
    p_train.add_argument("--episodes", type=int, default=None,
                         help="episodes (alternative to --steps)")
    p_train.add_argument("--algo", choices=ALGORITHMS, default="sac-per")
    p_train.add_argument("--checkpoint", type=Path, default=None,
                         help="resume from this checkpoint directory")
    p_train.add_argument("--checkpoint-every", type=int, default=None,
                         help="also save a checkpoint every N episodes")
    p_train.add_argument("--train-config", type=Path, default=None,
                         help='JSON with optional "sac"/"replay" hyperparameter sections')
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="deterministic rollout of a checkpoint")
    common(p_eval)
    p_eval.add_argument("--checkpoint", type=Path, default=None)
    p_eval.add_argument("--eval-episodes", type=int, default=5)
    p_eval.set_defaults(func=cmd_eval)

    p_base = sub.add_parser("baseline", help="run a baseline scheme")
    common(p_base)
    p_base.add_argument("--checkpoint", type=Path, default=None,
                        help="optional trained policy driving the baseline")
    p_base.add_argument("--eval-episodes", type=int, default=5)
    p_base.set_defaults(func=cmd_baseline)

    p_sum = sub.add_parser("summarize", help="aggregate metrics across runs")
    p_sum.add_argument("runs", nargs="+", help="run directories (seed_* level)")
    p_sum.add_argument("--out", type=Path, required=True, help="output CSV path")
    p_sum.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
