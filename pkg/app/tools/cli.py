# app/tools/cli.py
"""
Command line entry point.

  qrl train         --config cfg.json --profile desk --episodes 300 --seed 0
  qrl eval          --config cfg.json --seed 0 --eval-episodes 20 [--trajectory steps.csv]
  qrl grad-check    [--circuits 100] [--corrupt-shift 1.1]
  qrl variance      --circuit RandomLayers --min-qubits 2 --max-qubits 8 --samples 200
  qrl print-circuit --variant D5Q --env cartpole

Exit codes: 0 success / pass, 1 failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from app.config import (
    ExperimentConfig,
    VarianceStudyConfig,
    apply_profile,
    load_config,
    with_overrides,
)
from app.errors import ConfigError
from app.io_utils import safe_replace_output
from app.pipeline import describe_circuit, evaluate, grad_check, measure_gradient_variance, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def experiment_config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.profile:
        config = apply_profile(config, args.profile)
    overrides = {
        "variant": args.variant,
        "environment": args.env,
        "episodes": args.episodes,
        "seeds": None if args.seed is None else [args.seed],
    }
    if args.arch:
        overrides["architecture"] = {**config.architecture.model_dump(), "arch": args.arch}
    return with_overrides(config, **overrides)


def variance_config_from_args(args: argparse.Namespace) -> VarianceStudyConfig:
    config = load_config(args.config, VarianceStudyConfig) if args.config else VarianceStudyConfig()
    return with_overrides(
        config,
        circuit=args.circuit,
        min_qubits=args.min_qubits,
        max_qubits=args.max_qubits,
        samples=args.samples,
        depth=args.depth,
        seed=args.seed,
    )

# ---------------- Commands ----------------

def cmd_train(args: argparse.Namespace) -> int:
    config = experiment_config_from_args(args)
    report = run_experiment(config, args.out_dir)
    for path in report.metrics_paths:
        print(f"OK: metrics written to {path}")
    print(f"OK: summary written to {report.summary_path}")
    print(report.summary.to_string(index=False))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    config = experiment_config_from_args(args)
    seed = config.seeds[0]
    try:
        returns = evaluate(config, args.out_dir, seed, episodes=args.eval_episodes, trajectory_path=args.trajectory)
    except LookupError as e:
        print(f"FAIL: {e}")
        return EXIT_FAIL
    print(f"OK: {config.run_name} seed={seed} greedy mean return {np.mean(returns):.3f} over {len(returns)} episodes")
    if args.trajectory:
        print(f"OK: trajectory written to {args.trajectory}")
    return EXIT_OK


def cmd_grad_check(args: argparse.Namespace) -> int:
    report = grad_check(num_circuits=args.circuits, seed=args.seed or 0, corrupt_shift=args.corrupt_shift)
    for line in report.lines():
        print(line)
    print("OK: gradients agree" if report.passed else "FAIL: gradient engines disagree")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_variance(args: argparse.Namespace) -> int:
    config = variance_config_from_args(args)
    table = measure_gradient_variance(config)
    out = Path(args.out_dir) / f"variance_{config.circuit}.csv"
    safe_replace_output(out)
    table.to_csv(out, index=False)
    print(table.to_string(index=False))
    print(f"OK: variance table written to {out}")
    return EXIT_OK


def cmd_print_circuit(args: argparse.Namespace) -> int:
    sys.stdout.write(describe_circuit(args.variant or "D5Q", args.env or "cartpole", args.arch or "modified"))
    return EXIT_OK

# ---------------- Parser ----------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qrl", description="Hybrid quantum-classical DDQN experiments")
    p.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True)

    def experiment_flags(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", type=Path, help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir", type=Path, default=Path("outputs"))
        sp.add_argument("--episodes", type=int)
        sp.add_argument("--profile", choices=["paper", "desk"])
        sp.add_argument("--variant", help="variant code such as D5Q / C5D, or ClassicalMLP")
        sp.add_argument("--env", help="cartpole | gridworld | catch")
        sp.add_argument("--arch", choices=["modified", "original"])

    sp = sub.add_parser("train", help="train every configured seed")
    experiment_flags(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="greedy rollouts from the latest checkpoint")
    experiment_flags(sp)
    sp.add_argument("--eval-episodes", type=int, default=10)
    sp.add_argument("--trajectory", help="write a per-step trajectory CSV of the greedy rollouts")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("grad-check", help="adjoint vs parameter shift vs finite differences")
    sp.add_argument("--circuits", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--corrupt-shift", type=float, help="multiply the rotation shift constant (fault injection)")
    sp.set_defaults(func=cmd_grad_check)

    sp = sub.add_parser("variance", help="gradient variance vs qubit count")
    sp.add_argument("--config", type=Path, help="JSON variance-study config")
    sp.add_argument("--circuit", choices=["RandomLayers", "QcnnAnsatz", "SingleRx"])
    sp.add_argument("--min-qubits", type=int)
    sp.add_argument("--max-qubits", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--depth", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out-dir", type=Path, default=Path("outputs"))
    sp.set_defaults(func=cmd_variance)

    sp = sub.add_parser("print-circuit", help="list the assembled circuit of a variant")
    sp.add_argument("--variant")
    sp.add_argument("--env")
    sp.add_argument("--arch", choices=["modified", "original"])
    sp.set_defaults(func=cmd_print_circuit)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"CONFIG ERROR: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
