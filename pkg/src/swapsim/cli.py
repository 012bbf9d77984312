"""Command-line entry point: run, compare and replay."""

import argparse
import os
import sys

from .config import load_config
from .metrics import ReplayMismatch, replay, replay_check
from .scenario import compare, run_scenario
from .vmm import InvariantViolation
from .workload import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2

HEADLINE = ["tabs_before_discard", "switch_mean_us", "switch_p99_us", "swapin_device_bytes",
            "swapout_device_bytes", "zswap_hit_rate", "energy_total_pj", "lifetime_optimistic_years"]


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.check_invariants:
        cfg.check_invariants = True
    cfg.validate()
    out = args.out or os.path.join("runs", f"{cfg.name}-seed{cfg.seed}")
    report = run_scenario(cfg, out_dir=out)
    for k in HEADLINE:
        print(f"{k:28s} {_fmt(report.value(k))}")
    print(f"outputs written to {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfgs = [load_config(p) for p in args.configs]
    reports, rows = compare(cfgs, seed=args.seed)
    names = [r.config.name for r in reports]
    ratio_names = [f"{n}/{names[0]}" for n in names[1:]]
    vw = max(16, *(len(n) + 2 for n in names))
    rw = max(12, *(len(n) + 2 for n in ratio_names))
    print("metric".ljust(28) + "".join(n.rjust(vw) for n in names) + "".join(n.rjust(rw) for n in ratio_names))
    for field, vals, ratios in rows:
        line = field.ljust(28) + "".join(_fmt(v).rjust(vw) for v in vals)
        line += "".join(_fmt(r).rjust(rw) for r in ratios[1:])
        print(line)
    return EXIT_OK


def cmd_replay(args) -> int:
    if not os.path.exists(args.trace):
        raise ConfigError("<trace>", f"no such trace file: {args.trace}")
    if args.check:
        diffs = replay_check(args.trace)
        if diffs:
            for d in diffs:
                print(d, file=sys.stderr)
            raise ReplayMismatch(f"{len(diffs)} aggregate(s) differ from the stored summary")
        print("replay check passed: every aggregate matches")
        return EXIT_OK
    for k, v in replay(args.trace).items():
        print(f"{k:28s} {v}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swapsim", description="Swap-subsystem memory pressure simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario and write its outputs")
    r.add_argument("config", help="JSON scenario file or preset name")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="output directory (default runs/<name>-seed<N>)")
    r.add_argument("--check-invariants", action="store_true", help="check ledgers after every event (slow)")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run several scenarios on one seed and print ratios")
    c.add_argument("configs", nargs="+")
    c.add_argument("--seed", type=int, required=True)
    c.set_defaults(func=cmd_compare)

    rp = sub.add_parser("replay", help="recompute aggregates from a trace")
    rp.add_argument("trace", help="path to trace.tsv inside a run directory")
    rp.add_argument("--check", action="store_true", help="compare against the stored summary")
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantViolation, ReplayMismatch) as e:
        print(f"invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
