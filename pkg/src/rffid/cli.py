"""Command line entry points: gen, run, analyze and plot subcommands."""

from __future__ import annotations

import argparse
import sys

from . import experiment, plotting
from .analysis import select_scheme, xi_table


def _add_gen(sub):
    p = sub.add_parser("gen", help="synthesize a capture dataset to JSON-lines files")
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config master seed")


def _add_run(sub):
    p = sub.add_parser("run", help="run an identification accuracy sweep")
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--out", required=True, help="results CSV path")
    p.add_argument("--scheme", action="append", default=None,
                   help="restrict to a scheme (repeatable): ORS, UWS, MIWS, DFS, GDFWS")
    p.add_argument("--feature", choices=("itd", "lms"), default=None,
                   help="override the feature extraction method")
    p.add_argument("--trials", type=int, default=None, help="override the trial count")
    p.add_argument("--workers", type=int, default=1,
                   help="worker processes (does not affect the output bytes)")


def _add_analyze(sub):
    p = sub.add_parser("analyze", help="print the accuracy/antenna-count table")
    p.add_argument("--alpha", type=float, required=True, help="confidence level in (0, 1)")
    p.add_argument("--snr", type=float, required=True, help="SNR in dB")
    p.add_argument("--n", required=True,
                   help="comma-separated ascending antenna counts, e.g. 4,8,16")


def _add_plot(sub):
    p = sub.add_parser("plot", help="render mean accuracy curves from a results CSV")
    p.add_argument("--results", required=True, help="results CSV path")
    p.add_argument("--x", required=True, help="column for the x axis")
    p.add_argument("--y", required=True, help="column for the y axis")
    p.add_argument("--series", required=True, help="column that separates the curves")
    p.add_argument("--out", required=True, help="output SVG path")


def _cmd_gen(args) -> int:
    config = experiment.load_config(args.config)
    manifest = experiment.gen_dataset(config, args.out, seed=args.seed)
    print(f"wrote {manifest['records']} capture records to {args.out}")
    return 0


def _cmd_run(args) -> int:
    config = experiment.load_config(args.config)
    records = experiment.run_experiment(
        config,
        workers=args.workers,
        schemes_override=args.scheme,
        feature_override=args.feature,
        trials_override=args.trials,
    )
    experiment.write_records_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _cmd_analyze(args) -> int:
    n_list = [int(v) for v in args.n.split(",") if v.strip()]
    rows = xi_table(args.alpha, args.snr, n_list)
    cols = [("N", [str(n) for n, _, _ in rows]),
            ("xi", [f"{v:.4f}" for _, v, _ in rows]),
            ("d_xi", ["-" if d is None else f"{d:.4f}" for _, _, d in rows]),
            ("scheme", [select_scheme(n, args.snr).scheme for n, _, _ in rows])]
    label_w = max(len(name) for name, _ in cols)
    widths = [max(len(cols[i][1][j]) for i in range(len(cols))) for j in range(len(rows))]
    print(f"alpha={args.alpha:g} snr={args.snr:g} dB")
    for (name, vals) in cols:
        cells = "  ".join(v.rjust(w) for v, w in zip(vals, widths))
        print(f"{name.ljust(label_w)}  {cells}")
    return 0


def _cmd_plot(args) -> int:
    plotting.plot_results(args.results, args.x, args.y, args.series, args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rffid",
        description="Multi-antenna radio-frequency fingerprint simulation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_gen(sub)
    _add_run(sub)
    _add_analyze(sub)
    _add_plot(sub)
    args = parser.parse_args(argv)
    handlers = {"gen": _cmd_gen, "run": _cmd_run, "analyze": _cmd_analyze, "plot": _cmd_plot}
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
