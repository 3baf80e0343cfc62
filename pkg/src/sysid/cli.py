"""Command-line harness: simulate, identify, ensemble, fit-perf."""

import argparse
import csv
import sys
from dataclasses import replace

import numpy as np

from . import harness
from .system import simulate


def _add_common(p):
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p.add_argument("--workers", type=int, default=1, help="parallel trial workers")
    p.add_argument(
        "--no-timestamp", action="store_true",
        help="suppress the timestamp header line for byte-stable output",
    )
    p.add_argument("--qp-tol", default=None, help="sphere-QP solver tolerance")
    p.add_argument("--eta", default=None, help="gradient step size (default auto)")
    p.add_argument("--n-grad", default=None, help="gradient iterations per segment")
    p.add_argument("--batch", default=None, help="Monte-Carlo batch size")
    p.add_argument("--schedule", default=None, help="replanning breakpoints, e.g. 0,10,T/2,T")


def _overrides(args):
    out = {}
    for key, attr in (
        ("qp_tol", "qp_tol"), ("eta", "eta"), ("n_grad", "n_grad"),
        ("batch", "batch"), ("schedule", "schedule"),
    ):
        value = getattr(args, attr)
        if value is not None:
            out[key] = value
    return out


def _open_out(args):
    if args.out:
        return open(args.out, "w", encoding="utf-8", newline="")
    return sys.stdout


def _cmd_simulate(args) -> int:
    cfg = harness.load_config(args.config, _overrides(args))
    sys_ = harness.build_system(cfg, cfg.seed_base)
    rng_inputs = (cfg.gamma / np.sqrt(sys_.m)) * harness.stream_rng(
        cfg.seed_base, harness.STREAM_SYSTEM_DRAW + 100
    ).standard_normal((cfg.horizon, sys_.m))
    traj = simulate(sys_, rng_inputs, cfg.seed_base)
    out = _open_out(args)
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            ["t"]
            + [f"x{i}" for i in range(sys_.d)]
            + [f"u{i}" for i in range(sys_.m)]
            + [f"w{i}" for i in range(sys_.d)]
        )
        for t in range(cfg.horizon + 1):
            row = [str(t)] + [repr(float(v)) for v in traj.states[t]]
            if t < cfg.horizon:
                row += [repr(float(v)) for v in traj.inputs[t]]
                row += [repr(float(v)) for v in traj.noises[t]]
            else:
                row += [""] * (sys_.m + sys_.d)
            writer.writerow(row)
    finally:
        if out is not sys.stdout:
            out.close()
    return harness.EXIT_OK


def _cmd_identify(args) -> int:
    cfg = harness.load_config(args.config, _overrides(args))
    cfg = replace(cfg, seeds=1)
    out = _open_out(args)
    try:
        return harness.run_ensemble(cfg, out, workers=1, timestamp=not args.no_timestamp)
    finally:
        if out is not sys.stdout:
            out.close()


def _cmd_ensemble(args) -> int:
    cfg = harness.load_config(args.config, _overrides(args))
    out = _open_out(args)
    try:
        return harness.run_ensemble(
            cfg, out, workers=max(1, args.workers), timestamp=not args.no_timestamp
        )
    finally:
        if out is not sys.stdout:
            out.close()


def _cmd_fit_perf(args) -> int:
    summaries = []
    for path in args.records:
        summaries.extend(harness.read_records(path))
    fits, grid_rows = harness.fit_performance_model(summaries)
    out = _open_out(args)
    try:
        harness.write_grid_csv(grid_rows, out)
    finally:
        if out is not sys.stdout:
            out.close()
    for fit in fits:
        print(
            f"policy={fit.policy} n_grad={fit.n_grad} c={fit.c:.3e} "
            f"eta={fit.eta:.6g} slope={fit.slope:+.4f}",
            file=sys.stderr,
        )
    return harness.EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sysid", description="active identification of LTI systems"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate one trajectory to CSV")
    _add_common(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_id = sub.add_parser("identify", help="run one identification trial")
    _add_common(p_id)
    p_id.set_defaults(func=_cmd_identify)

    p_ens = sub.add_parser("ensemble", help="run a seeded ensemble")
    _add_common(p_ens)
    p_ens.set_defaults(func=_cmd_ensemble)

    p_fit = sub.add_parser("fit-perf", help="fit eps = eta(c)/T from run CSVs")
    p_fit.add_argument("records", nargs="+", help="harness CSV files")
    p_fit.add_argument("--out", default=None, help="grid CSV output path")
    p_fit.set_defaults(func=_cmd_fit_perf)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return harness.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
