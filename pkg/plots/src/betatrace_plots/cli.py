"""Script entry point: betatrace-plots INPUT [INPUT2] --kind K --out FILE."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="betatrace-plots",
        description="Render overlay figures from betatrace CSV outputs")
    p.add_argument("inputs", nargs="+", help="input CSV path(s)")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--out", required=True, help="output image path (.png or .svg)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = render(FigureSpec(inputs=tuple(args.inputs), kind=args.kind,
                                out=args.out))
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
