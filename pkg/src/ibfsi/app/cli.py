"""``ibfsi`` command line: run, sweep, list, kernel-table.

Exit codes: 0 success, 2 configuration error, 3 solver error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .. import io
from ..errors import ConfigError, IBFSIError
from ..kernels import DeltaKernel, kernel_table
from .runner import convergence_harness, list_scenarios, output_root, resolve, run_scenario

log = logging.getLogger("ibfsi")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="ibfsi", description="Immersed-body flow solvers on a 2D MAC grid.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one configuration (TOML file or built-in scenario name)")
    r.add_argument("config")
    r.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    r.add_argument("--out", help="output directory (default: $IBFSI_OUTPUT_ROOT/<scenario>)")

    s = sub.add_parser("sweep", help="grid-convergence table over grid.nx values")
    s.add_argument("config")
    s.add_argument("--grids", nargs="+", type=int, required=True)
    s.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--out")

    ls = sub.add_parser("list", help="list built-in scenarios")
    ls.add_argument("--json", action="store_true", help="machine-readable output")

    k = sub.add_parser("kernel-table", help="dump 1D delta-kernel weights as CSV")
    k.add_argument("--family", default="peskin4")
    k.add_argument("--offsets", nargs="+", type=float, default=[0.0, 0.25, 0.5])
    k.add_argument("--out", help="CSV path (default: stdout)")
    return p


def _summary(metrics):
    out = {}
    for k, v in metrics.items():
        a = np.asarray(v) if not isinstance(v, list) else None
        if a is not None and a.ndim == 0:
            out[k] = a.item()
    return out


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            result, out = run_scenario(args.config, args.overrides, args.out)
            print(json.dumps({"output": str(out), "metrics": _summary(result.metrics)}, indent=2, default=str))
        elif args.command == "sweep":
            sc, cfg = resolve(args.config, args.overrides)
            out = Path(args.out) if args.out else output_root() / f"{cfg.output.dir or sc.name}_sweep"
            rows = convergence_harness(args.config, args.grids, args.overrides, out)
            for r in rows:
                o = "n/a" if r["order"] is None else f"{r['order']:.3f}"
                e = "n/a" if r["error"] is None else f"{r['error']:.6e}"
                print(f"nx={r['nx']:5d}  h={r['h']:.5g}  error={e}  order={o}  ({r['reference']})")
            print(f"table: {out / 'convergence.csv'}")
        elif args.command == "list":
            items = list_scenarios()
            if args.json:
                print(json.dumps(items, indent=2))
            else:
                for it in items:
                    print(f"{it['name']:32s} {it['description']}")
        elif args.command == "kernel-table":
            rows = kernel_table(DeltaKernel(args.family), args.offsets)
            if args.out:
                io.write_csv(args.out, ["offset", "node", "weight"], rows)
            else:
                print("offset,node,weight")
                for r in rows:
                    print(",".join(io.fmt(v) for v in r))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except IBFSIError as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
