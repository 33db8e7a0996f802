"""Command-line figure rendering: `pinchplot render --csv ... --kind ...`."""

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, NoDataError, SchemaError, render


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="pinchplot", description="Render experiment CSVs into figures")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one figure")
    r.add_argument("--csv", action="append", required=True,
                   help="input CSV (repeat to overlay several files)")
    r.add_argument("--kind", required=True, choices=sorted(FIGURE_KINDS),
                   help="figure kind, one per sweep kind")
    r.add_argument("--out", required=True, help="output image path")
    r.add_argument("--title", default=None)
    args = parser.parse_args(argv)

    try:
        render(FigureSpec(csv_paths=tuple(args.csv), kind=args.kind,
                          out_path=args.out, title=args.title))
    except (SchemaError, NoDataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
