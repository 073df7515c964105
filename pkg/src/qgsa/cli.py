"""Command-line entry point: ``qgsa train | compare | shots``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bench.config import ConfigError, load_config
from .bench.runner import compare, format_report, train
from .shots_cost import shots_for_descent, shots_for_precision


def _cmd_train(args) -> int:
    config = load_config(args.config)
    out = Path(args.out) if args.out else Path("runs")
    summary = train(config, out, base_dir=Path(args.config).resolve().parent, plots=args.plots)
    print(f"{summary['name']}: {summary['optimizer']} on {summary['dataset']}/{summary['loss']}, "
          f"{len(summary['seeds'])} seed(s)")
    print(f"  final loss {summary['final_loss_mean']:.6g} +/- {summary['final_loss_std']:.3g}")
    print(f"  circuits {summary['total_circuits']} (update {summary['total_update_circuits']}), "
          f"shots {summary['total_shots']}")
    print(f"  cost under {summary['pricing']}: USD {summary['cost'][summary['pricing']]:,.2f}")
    print(f"  written to {out / summary['name']}")
    return 0


def _cmd_compare(args) -> int:
    report = compare(Path(args.runs), plots=not args.no_plots)
    print(format_report(report))
    return 0


def _cmd_shots(args) -> int:
    if args.epsilon is None and args.gap is None:
        raise ConfigError("give --epsilon and/or --gap")
    rows = []
    if args.epsilon is not None:
        n = shots_for_precision(args.epsilon, args.delta, args.range)
        rows.append((f"n_mu (precision {args.epsilon:g}, delta {args.delta:g})", n))
    if args.gap is not None:
        n = shots_for_descent(args.gap, args.delta, args.range)
        rows.append((f"n_g (gap {args.gap:g}, delta {args.delta:g})", n))
    print(f"{'quantity':<34}{'value':>12}")
    for label, n in rows:
        print(f"{label:<34}{n:>12d}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgsa", description="Gradient-sampling optimiser benchmarks")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one configuration over its seeds")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (default ./runs)")
    p.add_argument("--plots", action="store_true", help="also write SVG loss curves")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("compare", help="tabulate completed runs")
    p.add_argument("--runs", required=True)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("shots", help="shot counts for a precision or a descent gap")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--gap", type=float)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--range", type=float, default=None,
                   help="outcome range for the full Hoeffding bound (omit for the unit-range formula)")
    p.set_defaults(func=_cmd_shots)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"qgsa {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
