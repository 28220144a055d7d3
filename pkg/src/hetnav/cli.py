"""Command line entry points: scenario runs and filter fuzzing."""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .batch import run_batch, write_metrics_csv
from .config import ConfigError, WorldConfig, load_config
from .reward import PRESETS
from .safety import (
    apply_filter,
    instance_clearance,
    oracle_filter,
    random_filter_instance,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetnav",
        description="Deterministic multi-agent navigation scenarios with safety filtering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a batch of seeded episodes")
    run_p.add_argument("--config", help="TOML scenario file (defaults used when omitted)")
    run_p.add_argument("--episodes", type=int, default=200)
    run_p.add_argument("--steps", type=int, default=100)
    run_p.add_argument("--seed", type=int, default=0, help="base seed; episode i uses seed+i")
    run_p.add_argument("--preset", default="R4", choices=sorted(PRESETS))
    run_p.add_argument(
        "--policy", default="greedy",
        help="greedy | random | weights:<path to weights json>",
    )
    run_p.add_argument("--filter", default="on", choices=("on", "off"))
    run_p.add_argument("--metrics", help="write per-episode metrics CSV here")
    run_p.add_argument("--traj", help="write per-step trajectory JSONL here")
    run_p.add_argument("--jobs", type=int, default=1, help="worker processes")

    fuzz_p = sub.add_parser(
        "fuzz-filter",
        help="compare the analytic filter against a brute-force oracle",
    )
    fuzz_p.add_argument("--config", help="TOML scenario file (defaults used when omitted)")
    fuzz_p.add_argument("--instances", type=int, default=1000)
    fuzz_p.add_argument("--seed", type=int, default=0)
    fuzz_p.add_argument("--samples", type=int, default=10_000, help="oracle sampling density")
    fuzz_p.add_argument(
        "--tolerance", type=float, default=1e-6,
        help="instances with boundary clearance below this are inconclusive",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else WorldConfig()
        if args.command == "run":
            return _cmd_run(args, config)
        return _cmd_fuzz(args, config)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _cmd_run(args: argparse.Namespace, config: WorldConfig) -> int:
    t0 = time.perf_counter()
    result = run_batch(
        config,
        episodes=args.episodes,
        steps=args.steps,
        base_seed=args.seed,
        policy_spec=args.policy,
        preset=args.preset,
        filter_enabled=args.filter == "on",
        jobs=args.jobs,
        record_traj=args.traj is not None,
    )
    elapsed = time.perf_counter() - t0
    metrics = result.metrics

    if args.metrics:
        write_metrics_csv(args.metrics, metrics, config.n_agents)
    if args.traj:
        with open(args.traj, "w") as f:
            for m, rows in zip(metrics, result.trajectories or []):
                for row in rows:
                    f.write(json.dumps({"episode": m.seed, **row}) + "\n")

    n_eps = len(metrics)
    env_steps = sum(len(m.coverage_curve) for m in metrics)
    print(
        f"episodes={n_eps} policy={args.policy} preset={args.preset} "
        f"filter={args.filter} jobs={args.jobs}"
    )
    if n_eps:
        mean_targets = float(np.mean([m.targets_final for m in metrics]))
        completed = sum(1 for m in metrics if m.steps_to_all >= 0)
        print(f"targets covered: mean={mean_targets:.3f} of {config.n_t}")
        print(f"episodes fully covered: {completed}/{n_eps}")
        print(
            "collisions={} interventions={} infeasible_fallbacks={}".format(
                sum(m.collisions for m in metrics),
                sum(m.interventions for m in metrics),
                sum(m.infeasible_fallbacks for m in metrics),
            )
        )
    rate = env_steps / elapsed if elapsed > 0 else float("inf")
    print(f"env_steps={env_steps} elapsed={elapsed:.3f}s rate={rate:.0f} steps/s")
    if args.metrics:
        print(f"metrics csv: {args.metrics}")
    if args.traj:
        print(f"trajectory jsonl: {args.traj}")
    return 0


def _cmd_fuzz(args: argparse.Namespace, config: WorldConfig) -> int:
    if args.instances < 1:
        raise ValueError("--instances must be >= 1")
    failures: list[int] = []
    inconclusive = 0
    t0 = time.perf_counter()
    for i in range(args.instances):
        rng = np.random.default_rng([args.seed, i])
        state, ego_radius, cmd, neighbors = random_filter_instance(rng, config)
        analytic = apply_filter(state, ego_radius, cmd, neighbors, config)
        oracle = oracle_filter(state, ego_radius, cmd, neighbors, config, samples=args.samples)
        if analytic.alpha == oracle.alpha:
            continue
        clearance = instance_clearance(state, ego_radius, cmd, neighbors, config)
        if clearance <= args.tolerance:
            inconclusive += 1
            continue
        failures.append(i)
        print(
            f"MISMATCH instance={i} (rerun with --seed {args.seed}): "
            f"analytic alpha={analytic.alpha} oracle alpha={oracle.alpha} "
            f"clearance={clearance:.3e}",
            file=sys.stderr,
        )
    elapsed = time.perf_counter() - t0
    print(
        f"instances={args.instances} mismatches={len(failures)} "
        f"inconclusive={inconclusive} elapsed={elapsed:.2f}s"
    )
    if failures:
        print(f"failing instance indices: {failures[:20]}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
