"""Command line: render --kind {distance|rates} --in file.csv --out file.png
[--tstar T] [--dump]. --dump re-emits the numeric block to stdout."""

import argparse
import sys
from pathlib import Path

from .render import KINDS, FigureSpec, SchemaMismatch, dump_text, load_table, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="Render switchback CSV scans to figures"
    )
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--in", dest="input_csv", required=True, metavar="CSV")
    parser.add_argument("--out", dest="output_image", required=True, metavar="IMG")
    parser.add_argument("--tstar", type=float, default=None,
                        help="draw a vertical marker at this time")
    parser.add_argument("--dump", action="store_true",
                        help="also write the plotted numeric block to stdout")
    args = parser.parse_args(argv)

    spec = FigureSpec(
        input_csv=Path(args.input_csv),
        kind=args.kind,
        output_image=Path(args.output_image),
        tstar=args.tstar,
    )
    try:
        render(spec)
        if args.dump:
            sys.stdout.write(dump_text(load_table(spec.input_csv, spec.kind)))
    except SchemaMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
