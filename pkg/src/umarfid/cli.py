"""Command line front-end: every experiment as a reproducible run.

Exit code 0 means every trial-level assertion held; 1 means at least
one trial failed; 2 is a usage error.
"""

from __future__ import annotations

import argparse
import sys

from .harness import STRATEGIES, TrialConfig, render, run_trials

ATTACK_NAMES = ["full-disclosure", "clone", "desync-mitm", "desync-bitflip"]


def _add_common(parser: argparse.ArgumentParser, trials: int) -> None:
    parser.add_argument("--bits", type=int, default=128, metavar="L",
                        help="word length in bits (default 128)")
    parser.add_argument("--trials", type=int, default=trials, metavar="N",
                        help=f"number of trials (default {trials})")
    parser.add_argument("--seed", type=int, default=0, metavar="S",
                        help="base seed; every trial derives its own stream")
    parser.add_argument("--format", choices=["text", "json-lines", "csv"],
                        default="text", help="record output format")
    parser.add_argument("--out", metavar="PATH",
                        help="write records to PATH instead of stdout")
    parser.add_argument("--workers", type=int, default=1, metavar="W",
                        help="parallel worker processes (results identical)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="umarfid",
        description=(
            "Simulator and attack harness for the UMA-RFID ultralightweight "
            "mutual-authentication protocol."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("session", help="honest-session smoke scenarios")
    _add_common(p, trials=100)

    p = sub.add_parser("game", help="untraceability distinguishing games")
    _add_common(p, trials=1000)
    p.add_argument("--executes", type=int, default=2,
                   help="eavesdrop query budget per game (default 2)")
    p.add_argument("--sends", type=int, default=1,
                   help="block/alter query budget per game (default 1)")
    p.add_argument("--strategy", choices=sorted(STRATEGIES), default="distinguish",
                   help="adversary strategy (random-guess is the null baseline)")

    p = sub.add_parser("attack", help="run one attack as a Monte Carlo experiment")
    p.add_argument("name", choices=ATTACK_NAMES)
    _add_common(p, trials=200)
    p.add_argument("--followups", type=int, default=3,
                   help="honest recovery attempts verified after a desync")
    p.add_argument("--c1-cap", type=int, default=64, dest="c1_cap",
                   help="bit-flip attack: cap on mask redraw rounds")

    p = sub.add_parser("verify-identities",
                       help="check the XOR identities the attacks rely on")
    _add_common(p, trials=10000)

    return parser


def config_from_args(args: argparse.Namespace) -> TrialConfig:
    common = dict(
        word_len=args.bits,
        trials=args.trials,
        seed=args.seed,
    )
    if args.command == "session":
        return TrialConfig(experiment="session", **common)
    if args.command == "game":
        return TrialConfig(
            experiment="untraceability",
            execute_budget=args.executes,
            send_budget=args.sends,
            strategy=args.strategy,
            **common,
        )
    if args.command == "attack":
        return TrialConfig(
            experiment=args.name,
            followups=args.followups,
            c1_round_cap=args.c1_cap,
            **common,
        )
    if args.command == "verify-identities":
        return TrialConfig(experiment="identities", **common)
    raise ValueError(f"unhandled command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        reports, stats = run_trials(config, workers=args.workers)
        text = render(reports, stats, args.format)
    except ValueError as err:
        parser.exit(2, f"error: {err}\n")

    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(
            f"{stats.experiment}: {stats.successes}/{stats.trials} ok, "
            f"records written to {args.out}"
        )
    else:
        sys.stdout.write(text)
    return 0 if stats.successes == stats.trials else 1


if __name__ == "__main__":
    sys.exit(main())
