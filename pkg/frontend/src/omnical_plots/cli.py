"""CLI: omnical-plots render --in <table> --out <dir>.

Exit codes: 0 on success, 2 on table schema mismatch.
"""

from __future__ import annotations

import argparse
import sys

from .render import render_table
from .tables import SchemaMismatch


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="omnical-plots")
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render figures from a sweep or metrics table")
    p_render.add_argument("--in", dest="table", required=True)
    p_render.add_argument("--out", dest="out_dir", required=True)
    args = parser.parse_args(argv)

    try:
        written = render_table(args.table, args.out_dir)
    except SchemaMismatch as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 2
    for path, info in written.items():
        print(f"wrote {path}" + (f" (slope {info:.2f})" if isinstance(info, float) else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
