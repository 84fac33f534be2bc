"""plotkit command line: ``plotkit render --in DIR --figure TAG --out FILE``."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURES, FigureJob, SchemaError, render


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plotkit", description="Render pt-hybrid figures")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one figure from an output directory")
    r.add_argument("--in", dest="in_dir", required=True, help="pt-hybrid output directory")
    r.add_argument("--figure", choices=FIGURES, required=True)
    r.add_argument("--out", required=True, help="output image path")
    r.add_argument("--png", action="store_true", help="write PNG instead of SVG")
    r.add_argument("--linear-y", action="store_true", help="disable the log y-axis")
    r.add_argument("--title", default=None)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    job = FigureJob(
        in_dir=args.in_dir,
        figure=args.figure,
        out_path=args.out,
        png=args.png,
        log_y=False if args.linear_y else None,
        title=args.title,
    )
    try:
        render(job)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
