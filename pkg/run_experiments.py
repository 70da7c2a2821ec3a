#!/usr/bin/env python3
"""
Experiment Runner
=================

Command-line entry point for the reproduction experiments.

    python run_experiments.py table1
    python run_experiments.py table2 --trials 200 --out results/table2
    python run_experiments.py convergence --config configs/convergence.env
    python run_experiments.py distributed-check --degree 2 --iters 5
    python run_experiments.py denoise-sweep --seed 7
    python run_experiments.py graph gen --config configs/graph.env

Exit code 0 on success; on a library error the runner prints
``error_category=<category>`` and exits with that category's code.
"""

import argparse
import logging
import sys

from src.config import LOG_LEVEL
from src.errors import InverseFilterError
from src.experiments import RUNNERS, load_config

logger = logging.getLogger("run_experiments")


def _add_common_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="experiment file (dotenv syntax)")
    parser.add_argument("--seed", type=int, help="PRNG seed")
    parser.add_argument("--trials", type=int, help="number of random trials")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--degree", type=int, help="polynomial degree M")
    parser.add_argument("--iters", type=int, help="iterations m")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Inverse graph filtering experiments")
    commands = parser.add_subparsers(dest="command", required=True)
    for name in ("table1", "table2", "convergence", "distributed-check", "denoise-sweep"):
        _add_common_flags(commands.add_parser(name))
    graph = commands.add_parser("graph", help="graph utilities")
    graph_commands = graph.add_subparsers(dest="action", required=True)
    _add_common_flags(graph_commands.add_parser("gen", help="write an edge list and its shift"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    experiment = "graph-gen" if args.command == "graph" else args.command
    # table1 and convergence sweep degrees 0..M
    degrees = None
    if args.degree is not None and experiment in ("table1", "convergence"):
        degrees = list(range(args.degree + 1))
    try:
        config = load_config(
            args.config,
            experiment=experiment,
            seed=args.seed,
            trials=args.trials,
            out=args.out,
            poly_degree=args.degree,
            poly_degrees=degrees,
            solver_iters=args.iters,
        )
        result = RUNNERS[experiment](config)
    except InverseFilterError as e:
        logger.error(f"{experiment} failed: {e}")
        print(f"❌ [{experiment.upper()}] {e}")
        print(f"error_category={e.category}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"{experiment} failed unexpectedly: {e}")
        print("error_category=error")
        return 1

    print(result.table.to_string())
    for name, path in result.artifacts.items():
        print(f"📁 {name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
