"""Command line figure renderer for the solver's CSV artifacts."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, PlotError, render


def _cmd_convergence(args) -> int:
    spec = FigureSpec("convergence", (args.errors,), args.out, k=args.k)
    result = render(spec)
    for norm, slope in sorted(result.annotations.items()):
        print(f"{norm} fitted slope {slope:.4f}")
    print(f"wrote {result.out}")
    return 0


def _cmd_slice(args) -> int:
    spec = FigureSpec("slice", (args.newmark, args.bathe), args.out)
    result = render(spec)
    for scheme, tv in sorted(result.annotations.items()):
        print(f"velocity TV {scheme}: {tv:.6g}")
    print(f"wrote {result.out}")
    return 0


def _cmd_snapshot(args) -> int:
    spec = FigureSpec("snapshot", (args.input,), args.out, field_name=args.field)
    result = render(spec)
    print(f"wrote {result.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render figures from wave-solver CSV artifacts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convergence", help="log-log error curves from errors.csv")
    conv.add_argument("--errors", required=True, help="errors.csv path")
    conv.add_argument("--k", type=int, required=True, help="polynomial degree for the reference slopes")
    conv.add_argument("--out", required=True, help="output image (.svg, .pdf or .png)")
    conv.set_defaults(func=_cmd_convergence)

    sli = sub.add_parser("slice", help="overlay diagonal profiles of the two schemes")
    sli.add_argument("--newmark", required=True, help="trapezoidal-scheme slice CSV")
    sli.add_argument("--bathe", required=True, help="composite-scheme slice CSV")
    sli.add_argument("--out", required=True)
    sli.set_defaults(func=_cmd_slice)

    snap = sub.add_parser("snapshot", help="field heatmap from a snapshot CSV")
    snap.add_argument("--in", dest="input", required=True, help="snapshot CSV")
    snap.add_argument("--field", choices=("u", "z"), default="u")
    snap.add_argument("--out", required=True)
    snap.set_defaults(func=_cmd_snapshot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
