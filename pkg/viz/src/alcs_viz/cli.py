"""Command line for offline rendering: one figure per invocation."""

import argparse
import sys

from .formats import FormatError
from .render import KINDS, PlotSpec, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="alcs-viz",
        description="Render simulator snapshots and diagnostics tables")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--input", required=True, help="snapshot or CSV path")
    p.add_argument("--output", default="",
                   help="image path (default: alongside the input)")
    p.add_argument("--colormap", default="viridis")
    p.add_argument("--stride", type=int, default=4,
                   help="glyph downsampling stride")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    spec = PlotSpec(kind=args.kind, input_path=args.input,
                    output_path=args.output, colormap=args.colormap,
                    stride=args.stride)
    try:
        out = render(spec)
    except (FormatError, OSError) as err:
        print(f"render failed: {err}")
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
