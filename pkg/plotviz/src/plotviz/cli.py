"""Console entry point: ``plot --out fig.png [--title T] [--svg] trace.csv ...``"""

import argparse
import sys

from . import PlotSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render trace CSVs into one log-scale residual figure.")
    parser.add_argument("csvs", nargs="+", metavar="file.csv")
    parser.add_argument("--out", required=True, help="output PNG path")
    parser.add_argument("--title", default=None)
    parser.add_argument("--svg", action="store_true",
                        help="also write a sibling .svg")
    args = parser.parse_args(argv)

    spec = PlotSpec(inputs=tuple(args.csvs), out=args.out,
                    title=args.title, svg=args.svg)
    try:
        render(spec)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
