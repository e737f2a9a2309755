"""figs command line: render one figure from a spec JSON or flags."""

import argparse
import sys

from .render import render
from .spec import KINDS, FigureSpec, SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figs", description="Render figures from kinkhmc experiment CSVs")
    parser.add_argument("--spec", help="figure-spec JSON (overrides flags)")
    parser.add_argument("--kind", choices=KINDS)
    parser.add_argument("--csv", help="input CSV path")
    parser.add_argument("--out", help="output image path")
    parser.add_argument("--series", default="activation",
                        help="grouping column for multi-line kinds")
    parser.add_argument("--xlabel")
    parser.add_argument("--ylabel")
    parser.add_argument("--title")
    args = parser.parse_args(argv)

    if args.spec:
        spec = FigureSpec.load(args.spec)
    else:
        if not (args.kind and args.csv and args.out):
            parser.error("need --spec or all of --kind/--csv/--out")
        spec = FigureSpec(kind=args.kind, csv=args.csv, out=args.out,
                          series=args.series, xlabel=args.xlabel,
                          ylabel=args.ylabel, title=args.title)
    try:
        result = render(spec)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.path}")
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
