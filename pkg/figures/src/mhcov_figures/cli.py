"""Command line: ``figures <job.json>`` renders one figure as PNG + SVG."""

from __future__ import annotations

import argparse
import sys

from .io import FigureInputError
from .jobs import FigureJob
from .render import render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render one figure (PNG + SVG) from mhcov experiment CSV output.",
    )
    parser.add_argument("job", help="path to a JSON job file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = FigureJob.from_json(args.job)
        _, paths = render(job)
    except FigureInputError as exc:
        print(f"figures: {exc}", file=sys.stderr)
        return exc.exit_code
    for path in paths:
        print(path)
    return 0


def run() -> None:  # console-script entry point
    sys.exit(main())


if __name__ == "__main__":
    run()
