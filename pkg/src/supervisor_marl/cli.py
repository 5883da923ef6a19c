"""Command-line entry point: ``supervisor-marl <command> ...``.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 runtime abort.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from . import harness
from .config import load_config
from .errors import ArithmeticRangeError, CheckpointError, InputError, SupervisorError

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_ABORT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="supervisor-marl",
                     description="Sequential joint-action construction for cooperative MARL.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train supervisor policies with PPO")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-plots", action="store_true")

    p = sub.add_parser("evaluate", help="evaluate trained checkpoints")
    p.add_argument("--config", required=True)
    p.add_argument("--models", required=True, help="directory of model_*.ckpt or one checkpoint")
    p.add_argument("--greedy", action="store_true", help="argmax actions instead of sampling")
    p.add_argument("--out", help="report directory (default: the models directory)")
    p.add_argument("--no-plots", action="store_true")

    p = sub.add_parser("verify", help="check the compilation against exact solvers")
    p.add_argument("--mmdp", help="verify one MMDP text file instead of random cases")
    p.add_argument("--cases", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("inspect", help="render one rollout as text frames")
    p.add_argument("--config", required=True)
    p.add_argument("--model")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("enumerate", help="compare joint and supervisor space sizes")
    p.add_argument("--actions", type=int, required=True)
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--states", type=int)
    return parser


def _run(args: argparse.Namespace) -> int:
    if args.command == "train":
        cfg = load_config(args.config)
        paths = harness.train(cfg, args.out, plots=not args.no_plots)
        for path in paths:
            print(path)
        return EXIT_OK

    if args.command == "evaluate":
        cfg = load_config(args.config)
        report = harness.evaluate(cfg, args.models, greedy=args.greedy, out_dir=args.out,
                                  plots=not args.no_plots)
        for key, value in report.rows():
            print(f"{key}\t{value}")
        return EXIT_OK

    if args.command == "verify":
        if args.cases < 1:
            raise InputError("--cases must be positive")
        result = harness.verify(cases=args.cases, seed=args.seed, mmdp=args.mmdp)
        for line in result.lines:
            print(line)
        print(f"equivalence: {result.passed_cases}/{result.total_cases} pass")
        for failure in result.failures:
            print(f"failure: {failure}", file=sys.stderr)
        return EXIT_OK if result.ok else EXIT_VERIFY

    if args.command == "inspect":
        cfg = load_config(args.config)
        if args.steps < 1:
            raise InputError("--steps must be positive")
        for line in harness.inspect_rollout(cfg, args.model, args.steps, args.seed):
            print(line)
        return EXIT_OK

    if args.command == "enumerate":
        for key, value in harness.enumerate_sizes(args.actions, args.agents, args.states):
            print(f"{key}\t{value}")
        return EXIT_OK
    raise InputError(f"unknown command {args.command}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (InputError, ArithmeticRangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CheckpointError, SupervisorError, OSError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
