"""Command-line benchmark harness.

Example::

    ellipcenter-bench --instance diag --n 1000 --seed 7 --eps 1e-8 \
        --eps-mode rel --out report.csv

Exit code 0 means every cell stopped at the gradient tolerance.  When --out
is given, per-instance metadata is written next to it as JSON lines
(<out>.instances.jsonl).
"""

from __future__ import annotations

import argparse
import sys

from .bench import (
    DEFAULT_METHODS,
    METHODS,
    BenchConfig,
    all_converged,
    emit_report,
    run_benchmark,
)
from .generators import InstanceFamily, InstanceSpec, write_instance_metadata
from .solver import EpsilonMode


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="ellipcenter-bench",
        description="Run quadratic-minimization solvers over generated or "
        "file-based instances and emit a report.",
    )
    parser.add_argument(
        "--instance",
        action="append",
        required=True,
        metavar="{diag,dense,file:PATH}",
        help="instance family to generate, or file:PATH to load; repeatable",
    )
    parser.add_argument(
        "--n",
        default="100",
        help="comma-separated sizes for generated instances (default 100)",
    )
    parser.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")
    parser.add_argument(
        "--b-scale", type=float, default=1000.0,
        help="b entries are uniform on [0, B_SCALE] (default 1000)",
    )
    parser.add_argument(
        "--methods",
        default=",".join(DEFAULT_METHODS),
        help=f"comma-separated subset of {','.join(METHODS)} "
        "(default: all but grad-wolfe)",
    )
    parser.add_argument("--eps", type=float, default=1e-8, help="gradient tolerance")
    parser.add_argument(
        "--eps-mode", choices=["abs", "rel"], default="rel",
        help="absolute threshold, or relative to the initial gradient norm",
    )
    parser.add_argument(
        "--max-iters", type=int, default=1_000_000, help="iteration cap per solve"
    )
    parser.add_argument(
        "--fast-cap", type=int, default=None,
        help="iteration cap for the fast-gradient method "
        "(default: 1000 on dense instances, otherwise --max-iters)",
    )
    parser.add_argument(
        "--reps", type=int, default=1,
        help="timing repetitions per cell; the minimum time is reported",
    )
    parser.add_argument("--out", default=None, help="report file (default: stdout)")
    parser.add_argument(
        "--format", choices=["csv", "markdown"], default="csv", help="report format"
    )
    parser.add_argument(
        "--trace-dir", default=None,
        help="write per-cell iteration traces as CSV into this directory",
    )
    return parser.parse_args(argv)


def _build_instances(args):
    try:
        sizes = [int(part) for part in str(args.n).split(",") if part.strip()]
    except ValueError:
        raise SystemExit(f"--n must be a comma-separated list of integers, got {args.n!r}")
    instances = []
    for item in args.instance:
        if item == "diag":
            family = InstanceFamily.DIAGONAL_ILL_CONDITIONED
        elif item == "dense":
            family = InstanceFamily.DENSE_RANK_ONE
        elif item.startswith("file:"):
            instances.append(item[len("file:"):])
            continue
        else:
            raise SystemExit(
                f"unknown --instance {item!r}; expected diag, dense or file:PATH"
            )
        for n in sizes:
            instances.append(
                InstanceSpec(family=family, n=n, seed=args.seed, b_scale=args.b_scale)
            )
    return instances


def main(argv=None) -> int:
    args = _parse_args(argv)
    methods = tuple(m for m in args.methods.split(",") if m)
    mode = EpsilonMode.ABSOLUTE if args.eps_mode == "abs" else EpsilonMode.RELATIVE_TO_INITIAL
    try:
        cfg = BenchConfig(
            instances=tuple(_build_instances(args)),
            methods=methods,
            epsilon=args.eps,
            epsilon_mode=mode,
            max_iterations=args.max_iters,
            fast_cap=args.fast_cap,
            repetitions=args.reps,
            trace_dir=args.trace_dir,
        )
    except ValueError as exc:
        raise SystemExit(f"invalid configuration: {exc}")

    metadata = []
    report = run_benchmark(cfg, metadata_sink=metadata)
    text = emit_report(report, format=args.format, path=args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        write_instance_metadata(f"{args.out}.instances.jsonl", metadata)
    return 0 if all_converged(report) else 1


if __name__ == "__main__":
    sys.exit(main())
