"""Command line: ``bsvylab run --config s.toml`` and ``bsvylab sweep --config s.toml --axis lambda``."""
from __future__ import annotations

import argparse
import sys

from .harness import SWEEP_AXES, run_cli


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bsvylab", description="Run level-set functional verification scenarios.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        sp = sub.add_parser(name, help="run a scenario" if name == "run" else "tabulate along one axis")
        sp.add_argument("--config", required=True, help="scenario TOML file")
        sp.add_argument("--out-dir", default="bsvylab-out", help="directory for report.json and CSV tables")
        sp.add_argument("--strict", action="store_true", help="boundary argmax in a lambda scan is an error")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: BSVYLAB_THREADS or 1)")
        sp.add_argument("--resolution-scale", type=float, default=1.0,
                        help="multiply every quadrature resolution")
        if name == "sweep":
            sp.add_argument("--axis", required=True, choices=SWEEP_AXES)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run_cli(args.config, args.out_dir, axis=getattr(args, "axis", None), strict=args.strict,
                   threads=args.threads, resolution=args.resolution_scale)


if __name__ == "__main__":
    sys.exit(main())
