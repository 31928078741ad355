"""crnplots command line: render figures and tables from sweep CSVs."""

from __future__ import annotations

import argparse
import sys

from .render import SchemaError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="crnplots", description="Render crnsim sweep CSVs"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="write figures and the steps table")
    p_render.add_argument("--in", dest="input", required=True, help="results or aggregate CSV")
    p_render.add_argument("--out", dest="out_dir", required=True, help="output directory")
    args = parser.parse_args(argv)
    try:
        for path in render(args.input, args.out_dir):
            print(path)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
