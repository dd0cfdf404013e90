"""Command-line figure rendering.

``render`` draws a single figure from explicit inputs; ``report`` walks an
ipslab artifact directory (as written by ``ipslab demo``) and renders every
applicable figure kind next to the data, mirroring the batch-report habit
of dropping images alongside the delimited output.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURE_KINDS, FigureSpec, render
from .readers import SchemaMismatch


def cmd_render(args) -> int:
    spec = FigureSpec(
        kind=args.kind,
        inputs=tuple(args.input),
        out=args.out,
        options={"logy": args.logy},
    )
    out = render(spec)
    print(f"wrote {out}")
    return 0


#: filename -> (figure kind, output stem) mapping for demo artifact dirs.
REPORT_MAP = (
    ("trace_clock.csv", "trace-h", "fig_trace_clock_h"),
    ("trace_clock.csv", "trace-g", "fig_trace_clock_g"),
    ("trace_stationary.csv", "trace-h", "fig_trace_stationary_h"),
    ("trace_stationary.csv", "trace-g", "fig_trace_stationary_g"),
    ("trace_softfa2d.csv", "trace-h", "fig_trace_softfa2d_h"),
    ("site_tables_softfa2d.json", "site-heatmap", "fig_sites_softfa2d"),
    ("site_tables_clock.json", "site-heatmap", "fig_sites_clock"),
    ("mass_floor.csv", "mass-floor", "fig_mass_floor"),
    ("mass_floor_frozen.csv", "mass-floor", "fig_mass_floor_frozen"),
    ("shell_table_d3.csv", "shell-decay", "fig_shell_decay"),
)


def cmd_report(args) -> int:
    artifacts = Path(args.artifacts)
    out_dir = Path(args.out_dir) if args.out_dir else artifacts
    rendered = 0
    kinds_seen = set()
    for filename, kind, stem in REPORT_MAP:
        src = artifacts / filename
        if not src.exists():
            continue
        out = out_dir / f"{stem}.{args.format}"
        render(FigureSpec(kind=kind, inputs=(str(src),), out=str(out)))
        print(f"wrote {out}")
        rendered += 1
        kinds_seen.add(kind)
    if rendered == 0:
        print(f"no renderable artifacts found in {artifacts}", file=sys.stderr)
        return 1
    print(f"{rendered} figures ({len(kinds_seen)} kinds) from {artifacts}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipslab-plots",
        description="Render static figures from ipslab artifact files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_render = sub.add_parser("render", help="one figure from explicit inputs")
    p_render.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    p_render.add_argument("--input", required=True, action="append",
                          help="artifact path (repeatable for trace-h overlays)")
    p_render.add_argument("--out", required=True, help="output image (.png or .svg)")
    p_render.add_argument("--logy", action="store_true")

    p_report = sub.add_parser("report", help="all figures from an artifact directory")
    p_report.add_argument("--artifacts", required=True)
    p_report.add_argument("--out-dir", default=None,
                          help="default: alongside the artifacts")
    p_report.add_argument("--format", choices=("png", "svg"), default="png")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return {"render": cmd_render, "report": cmd_report}[args.command](args)
    except SchemaMismatch as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
