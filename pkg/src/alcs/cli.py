"""Command-line interface.

Subcommands:
  run      simulate one configuration, writing energy.csv and snapshots
  check    run the invariant suite and print a pass/fail table
  twin     run two configurations from shared initial data, write twin.csv
  sweep    batch runs along one parameter axis with a summary table
  lp-norm  Sobolev norm of a snapshot's fields
  info     print a snapshot header
"""

import argparse
import sys

from .config import ConfigError, load_config
from .experiments import execute_check, execute_run, execute_sweep, \
    execute_twin
from .littlewood_paley import build_partition, sobolev_norm, split_low_high
from .snapshots import SnapshotError, read_header, read_snapshot


def _load(path):
    try:
        return load_config(path)
    except ConfigError as err:
        print(err)
        raise SystemExit(1)
    except OSError as err:
        print(f"cannot read config: {err}")
        raise SystemExit(3)


def cmd_run(args):
    cfg = _load(args.config)
    code, _ = execute_run(cfg, out_dir=args.out_dir)
    return code


def cmd_check(args):
    cfg = _load(args.config)
    return execute_check(cfg)


def cmd_twin(args):
    cfg_a = _load(args.config_a)
    cfg_b = _load(args.config_b)
    code, _ = execute_twin(cfg_a, cfg_b, out_dir=args.out_dir)
    return code


def cmd_sweep(args):
    cfg = _load(args.config)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if not values:
        print("no sweep values given")
        return 1
    code, _ = execute_sweep(cfg, args.axis, values, out_dir=args.out_dir)
    return code


def cmd_lp_norm(args):
    try:
        state = read_snapshot(args.snapshot)
    except (SnapshotError, OSError) as err:
        print(f"cannot read snapshot: {err}")
        return 1
    part = build_partition(state.q.grid)
    for name, field in (("q11", state.q.q11), ("q12", state.q.q12),
                        ("ux", state.u.ux), ("uy", state.u.uy)):
        print(f"H^{args.s:g}[{name}] = "
              f"{sobolev_norm(part, field, args.s):.12e}")
    phi1, phi2, phi = split_low_high(part, state.q, state.u, args.s)
    print(f"phi = {phi:.12e} (low {phi1:.12e}, high {phi2:.12e})")
    return 0


def cmd_info(args):
    try:
        header = read_header(args.snapshot)
    except (SnapshotError, OSError) as err:
        print(f"cannot read snapshot: {err}")
        return 1
    for key in ("d", "N", "L", "t", "nfields"):
        print(f"{key} = {header[key]}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="alcs",
        description="Pseudo-spectral active nematic simulator and "
                    "verification lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one configuration")
    p.add_argument("config")
    p.add_argument("--out-dir", default=None,
                   help="override the configured output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="run the invariant suite")
    p.add_argument("config")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("twin", help="compare two runs from shared data")
    p.add_argument("config_a")
    p.add_argument("config_b")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_twin)

    p = sub.add_parser("sweep", help="batch runs along one axis")
    p.add_argument("config")
    p.add_argument("axis", choices=("kappa", "eps", "n_trunc"))
    p.add_argument("values", help="comma-separated axis values")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("lp-norm", help="Sobolev norm of a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--s", type=float, default=1.0)
    p.set_defaults(func=cmd_lp_norm)

    p = sub.add_parser("info", help="print a snapshot header")
    p.add_argument("snapshot")
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
