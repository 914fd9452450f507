"""Command-line surface: run, sweep, verify, plot.

Exit codes: 0 success; 1 verify failure or internal error; 2 invalid
config/override (argparse usage errors also exit 2); 3 missing input file;
4 unwritable output; 5 every repetition diverged.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from pskip.algorithms import METRIC_NAMES, DivergenceError
from pskip.harness import ConfigError, ExperimentConfig, ExperimentResult, run_experiment, sweep

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID_CONFIG = 2
EXIT_MISSING_FILE = 3
EXIT_UNWRITABLE = 4
EXIT_DIVERGED = 5


def _load_config(path: str) -> ExperimentConfig:
    if not os.path.exists(path):
        print(f"error: config file not found: {path}", file=sys.stderr)
        sys.exit(EXIT_MISSING_FILE)
    try:
        return ExperimentConfig.load(path)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        sys.exit(EXIT_INVALID_CONFIG)


def _apply_overrides(cfg: ExperimentConfig, pairs) -> None:
    for pair in pairs or []:
        if "=" not in pair:
            print(f"error: override must be key=value, got {pair!r}",
                  file=sys.stderr)
            sys.exit(EXIT_INVALID_CONFIG)
        key, value = pair.split("=", 1)
        try:
            cfg.override(key, value)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            sys.exit(EXIT_INVALID_CONFIG)


def _check_out_dir(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
        probe = os.path.join(path, ".write_probe")
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        print(f"error: output directory not writable: {exc}", file=sys.stderr)
        sys.exit(EXIT_UNWRITABLE)


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    _apply_overrides(cfg, args.set)
    _check_out_dir(args.out)
    try:
        result = run_experiment(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except DivergenceError as exc:
        print(f"error: every repetition diverged ({exc})", file=sys.stderr)
        return EXIT_DIVERGED
    csv_path, cfg_path = result.save(args.out)
    print(csv_path)
    print(cfg_path)
    if result.diverged:
        print(f"note: {result.diverged} of {result.diverged + result.run_count} "
              "repetitions diverged and were excluded", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    _apply_overrides(cfg, args.set)
    _check_out_dir(args.out)
    values = [v for v in args.values.split(",") if v]
    try:
        results = sweep(cfg, args.axis, [float(v) for v in values])
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except DivergenceError as exc:
        print(f"error: every repetition diverged ({exc})", file=sys.stderr)
        return EXIT_DIVERGED
    for res in results:
        csv_path, _ = res.save(args.out)
        print(csv_path)
    return EXIT_OK


def cmd_verify(args) -> int:
    from pskip.verify import run_all

    ok = run_all(seed=args.seed, inject_fault=args.inject_fault)
    return EXIT_OK if ok else EXIT_FAIL


def _label_for(path: str) -> str:
    echo_path = path.replace("_result.csv", "_config.json")
    if os.path.exists(echo_path):
        with open(echo_path) as fh:
            echo = json.load(fh)
        cfg = echo.get("config", {})
        label = cfg.get("label")
        if label:
            return label
        alg = cfg.get("algorithm", {})
        bits = [str(alg.get("name", "?"))]
        if alg.get("p") is not None:
            bits.append(f"p={alg['p']}")
        prob = cfg.get("problem", {})
        if prob.get("n") is not None:
            bits.append(f"n={prob['n']}")
        return " ".join(bits)
    return os.path.basename(path).replace("_result.csv", "")


def cmd_plot(args) -> int:
    from pskip.svgplot import render_lines

    paths = [p for p in args.inputs.split(",") if p]
    for p in paths:
        if not os.path.exists(p):
            print(f"error: input not found: {p}", file=sys.stderr)
            return EXIT_MISSING_FILE
    if args.y not in METRIC_NAMES:
        print(f"error: unknown metric {args.y!r}; have {METRIC_NAMES}",
              file=sys.stderr)
        return EXIT_INVALID_CONFIG
    series = []
    try:
        for p in paths:
            res = ExperimentResult.from_csv(p)
            x = res.t if args.x == "iters" else res.comms_mean
            series.append((_label_for(p), x, res.mean(args.y)))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    svg = render_lines(series,
                       xlabel="iteration" if args.x == "iters"
                       else "communication rounds",
                       ylabel=args.y, logy=not args.linear)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(args.out, "w") as fh:
            fh.write(svg)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_UNWRITABLE
    print(args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pskip",
        description="Distributed optimization simulator with communication "
                    "skipping.")
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment config")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dotted-path config override (repeatable)")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.set_defaults(fn=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a one-axis parameter sweep")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--axis", required=True,
                         choices=["n", "p", "varsigma2", "sigma2", "iota"])
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated axis values")
    sweep_p.add_argument("--set", action="append", metavar="KEY=VALUE")
    sweep_p.add_argument("--out", required=True)
    sweep_p.set_defaults(fn=cmd_sweep)

    ver_p = sub.add_parser("verify", help="run the invariant suite")
    ver_p.add_argument("--seed", type=int, default=0)
    ver_p.add_argument("--inject-fault", default="",
                       choices=["", "equivalence-y0"],
                       help=argparse.SUPPRESS)
    ver_p.set_defaults(fn=cmd_verify)

    plot_p = sub.add_parser("plot", help="render result CSVs as an SVG chart")
    plot_p.add_argument("--in", dest="inputs", required=True,
                        help="comma-separated result CSV paths")
    plot_p.add_argument("--x", choices=["iters", "comms"], default="iters")
    plot_p.add_argument("--y", default="rel_error")
    plot_p.add_argument("--linear", action="store_true",
                        help="linear y axis (default log)")
    plot_p.add_argument("--out", required=True, help="output SVG path")
    plot_p.set_defaults(fn=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
