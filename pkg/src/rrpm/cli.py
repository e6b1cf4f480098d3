"""Command line front end: run, sweep, plot.

Exit codes: 0 success, 2 configuration or validation problem, 3 I/O
failure.  Scenario files are ``key = value`` text; see the README for the
key list and the sweep range syntax.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from rrpm.harness import (
    SweepSpec,
    emit_results,
    plot_rows,
    read_sweep_csv,
    run_simulation,
    run_sweep,
)
from rrpm.metrics import MetricsError
from rrpm.model import ScenarioError, load_scenario

_EXIT_CONFIG = 2
_EXIT_IO = 3


def _parse_int_range(text: str) -> list[int]:
    """'a:b' inclusive, 'a:step:b' inclusive, or a single integer."""
    parts = text.split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError as exc:
        raise ScenarioError(f"bad integer range {text!r}") from exc
    if len(nums) == 1:
        return nums
    if len(nums) == 2:
        lo, hi = nums
        step = 1
    elif len(nums) == 3:
        lo, step, hi = nums
    else:
        raise ScenarioError(f"bad integer range {text!r}")
    if step <= 0 or hi < lo:
        raise ScenarioError(f"bad integer range {text!r}")
    return list(range(lo, hi + 1, step))


def _parse_float_range(text: str) -> list[float]:
    """'start:step:stop' inclusive (values snapped to 9 decimals), or one value."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError as exc:
        raise ScenarioError(f"bad numeric range {text!r}") from exc
    if len(nums) == 1:
        return [round(nums[0], 9)]
    if len(nums) != 3:
        raise ScenarioError(f"bad numeric range {text!r} (want start:step:stop)")
    lo, step, hi = nums
    if step <= 0 or hi < lo:
        raise ScenarioError(f"bad numeric range {text!r}")
    out = []
    value = lo
    while value <= hi + 1e-9:
        out.append(round(value, 9))
        value += step
    return out


def _parse_vary(args_vary: Optional[Sequence[str]]) -> tuple[Optional[list[int]],
                                                             Optional[list[float]]]:
    patients = participation = None
    for item in args_vary or ():
        if "=" not in item:
            raise ScenarioError(f"--vary wants axis=range, got {item!r}")
        axis, _, rng = item.partition("=")
        axis = axis.strip()
        if axis == "patients":
            patients = _parse_int_range(rng.strip())
        elif axis == "participation":
            participation = _parse_float_range(rng.strip())
        else:
            raise ScenarioError(f"unknown sweep axis {axis!r}")
    return patients, participation


def _cmd_run(args: argparse.Namespace) -> int:
    spec = load_scenario(args.config)
    result = run_simulation(spec, args.seed, trace_path=args.trace,
                            events_path=args.events)
    mean = f"{result.mean_latency:.1f}" if result.mean_latency is not None else "n/a"
    zmax = str(result.z_max) if result.z_max is not None else "n/a"
    print(f"seed {result.seed}: delivered {result.delivered}/"
          f"{result.total_messages} "
          f"(p={result.delivery_probability:.2f}), "
          f"mean latency {mean} min, max {zmax} min")
    if args.out:
        payload = {
            "seed": result.seed,
            "fingerprint": result.fingerprint,
            "patients": result.patients,
            "participation": result.participation,
            "total_messages": result.total_messages,
            "delivered": result.delivered,
            "delivery_probability": result.delivery_probability,
            "latencies_min": list(result.latencies),
            "max_latency_min": result.z_max,
            "mean_latency_min": result.mean_latency,
        }
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n",
                                  encoding="utf-8")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = load_scenario(args.config)
    patients, participation = _parse_vary(args.vary)
    seeds = _parse_int_range(args.seeds)
    sweep = SweepSpec.over(spec, patients=patients,
                           participation=participation, seeds=seeds)
    table = run_sweep(sweep, jobs=args.jobs)
    if args.out:
        emit_results(table, csv_path=args.out, plots_dir=args.plots)
        print(f"wrote {args.out} ({len(table.rows)} points, "
              f"{len(seeds)} seeds each)")
    else:
        from rrpm.harness import SWEEP_CSV_COLUMNS, _fmt

        print(",".join(SWEEP_CSV_COLUMNS))
        for row in table.rows:
            print(",".join(_fmt(v) for v in (
                row.patients, row.participation, row.n_seeds,
                row.mean_delivery, row.sem_delivery, row.mean_latency_min,
                row.sem_latency_min, row.max_latency_min,
                row.seeds_no_delivery)))
        if args.plots:
            emit_results(table, plots_dir=args.plots)
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    rows = read_sweep_csv(args.infile)
    plot_rows(rows, args.metric, args.x, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rrpm",
        description="Opportunistic store-and-forward delivery simulator "
                    "for rural patient monitoring.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario instance")
    p_run.add_argument("--config", required=True, help="scenario file")
    p_run.add_argument("--seed", type=int, default=0, help="run seed")
    p_run.add_argument("--out", help="write run metrics as JSON")
    p_run.add_argument("--trace", help="write a mobility trace CSV")
    p_run.add_argument("--events", help="write a contact/transfer event CSV")
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a seed sweep over one or "
                                           "two population axes")
    p_sweep.add_argument("--config", required=True, help="scenario file")
    p_sweep.add_argument("--vary", action="append", metavar="AXIS=RANGE",
                         help="patients=lo:step:hi or participation="
                              "lo:step:hi; may repeat")
    p_sweep.add_argument("--seeds", default="0:99",
                         help="seed range lo:hi inclusive (default 0:99)")
    p_sweep.add_argument("--out", help="write the sweep table CSV here")
    p_sweep.add_argument("--plots", help="directory for SVG plots")
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="worker processes (default 1)")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_plot = sub.add_parser("plot", help="plot a sweep table CSV")
    p_plot.add_argument("--in", dest="infile", required=True,
                        help="sweep CSV from rrpm sweep")
    p_plot.add_argument("--metric", choices=("delivery", "latency"),
                        required=True)
    p_plot.add_argument("--x", choices=("patients", "participation"),
                        required=True)
    p_plot.add_argument("--out", required=True, help="output SVG path")
    p_plot.set_defaults(fn=_cmd_plot)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ScenarioError, MetricsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return _EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
