"""flowviz: render figures and extract metrics from mmflow snapshots.

    flowviz render --spec spec.toml
    flowviz metrics --glob 'out/*.snap' --csv metrics.csv
"""
from __future__ import annotations

import argparse
import sys

from .metrics import write_metrics_csv
from .render import load_figure_spec, render


def main(argv=None):
    ap = argparse.ArgumentParser(prog="flowviz", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    rp = sub.add_parser("render", help="render a figure from a TOML spec")
    rp.add_argument("--spec", required=True)

    mp = sub.add_parser("metrics", help="bubble metrics to CSV")
    mp.add_argument("--glob", required=True)
    mp.add_argument("--csv", required=True)

    args = ap.parse_args(argv)
    try:
        if args.command == "render":
            out = render(load_figure_spec(args.spec))
            print(f"wrote {out}")
        else:
            n = write_metrics_csv(args.glob, args.csv)
            print(f"wrote {args.csv} ({n} rows)")
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
