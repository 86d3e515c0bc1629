"""Command-line entry point.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 run did not
finish before the configured horizon.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from contextlib import nullcontext
from pathlib import Path

from .predictor import feature_study
from .scenario import (
    ConfigError,
    ScenarioConfig,
    format_time,
    run_experiment,
    sweep,
    write_results_csv,
)
from .usecase import render_trace, run_usecase

EXIT_OK, EXIT_CONFIG, EXIT_INCOMPLETE = 0, 2, 3

AXES = {
    "N_T": ("n_total", int),
    "alpha": ("alpha", float),
    "beta": ("beta", float),
    "capacity": ("leaf_capacity_bytes", lambda s: int(float(s))),
}
# provision-time axes compare all frameworks; storage axes concern only HNDAF
AXIS_FRAMEWORKS = {
    "N_T": ("HNDAF", "CONV", "MULTI"),
    "alpha": ("HNDAF", "CONV", "MULTI"),
    "beta": ("HNDAF",),
    "capacity": ("HNDAF",),
}
MEANS_COLUMNS = ["framework", "axis", "value", "reps", "mean_provision_time_s"]
PREDICT_COLUMNS = ["feature_set", "seed", "mse", "mae", "rmse"]


def _open_out(path: str | None):
    if path is None or path == "-":
        return nullcontext(sys.stdout)
    return open(path, "w", newline="")


def _load(args) -> ScenarioConfig:
    config = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    if getattr(args, "seed", None) is not None:
        config = config.with_(seed=args.seed)
    return config


def cmd_validate(args) -> int:
    config = _load(args)
    print(f"ok: {config.framework} n_nfs={config.n_nfs} N_T={config.n_total}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _load(args)
    log_ctx = open(args.log, "w", encoding="utf-8", newline="\n") if args.log else nullcontext(None)
    with log_ctx as log_file:
        report = run_experiment(config, log=log_file)
    if args.out:
        with _open_out(args.out) as out:
            write_results_csv([report.csv_row()], out)
    print(f"provision_time_s={format_time(report.provision_time_s)}")
    if not report.complete:
        answered = sum(r.first_response_time is not None for r in report.records)
        print(
            f"incomplete: {answered}/{len(report.records)} events answered "
            f"before horizon {config.horizon_s}",
            file=sys.stderr,
        )
        return EXIT_INCOMPLETE
    return EXIT_OK


def _parse_values(axis: str, text: str) -> list:
    conv = AXES[axis][1]
    try:
        values = [conv(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError("values", str(exc)) from None
    if not values:
        raise ConfigError("values", "need at least one value")
    return values


def cmd_sweep(args) -> int:
    base = _load(args)
    field_name, _ = AXES[args.axis]
    values = _parse_values(args.axis, args.values)
    configs = []
    for fw in AXIS_FRAMEWORKS[args.axis]:
        for v in values:
            configs.append(base.with_(framework=fw, **{field_name: v}).validate())
    rows, summary = sweep(configs, args.reps, jobs=args.jobs)
    with _open_out(args.out) as out:
        write_results_csv([r.report_row for r in rows], out)
    means_path = args.means or (str(Path(args.out).with_suffix(".means.csv")) if args.out else None)
    with _open_out(means_path) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(MEANS_COLUMNS)
        for config, mean, _ in summary:
            writer.writerow(
                [config.framework, args.axis, getattr(config, field_name), args.reps, format_time(mean)]
            )
    incomplete = sum(r.provision_time_s == float("inf") for r in rows)
    return EXIT_INCOMPLETE if incomplete else EXIT_OK


def cmd_predict(args) -> int:
    rows = feature_study(args.n, range(args.seed or 0, (args.seed or 0) + args.seeds), args.ridge_lambda)
    with _open_out(args.out) as out:
        writer = csv.DictWriter(out, fieldnames=PREDICT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{v:.9f}" if isinstance(v, float) else v) for k, v in row.items()})
    return EXIT_OK


def cmd_usecase(args) -> int:
    sys.stdout.write(render_trace(run_usecase(seed=args.seed or 0)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hndaf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", metavar="PATH", help="scenario JSON (defaults if omitted)")
        p.add_argument("--seed", type=int, metavar="N")

    p = sub.add_parser("run", help="run one experiment")
    common(p)
    p.add_argument("--log", metavar="PATH", help="event log output")
    p.add_argument("--out", metavar="PATH", help="results CSV output")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep one parameter over repetitions")
    common(p)
    p.add_argument("--axis", choices=sorted(AXES), required=True)
    p.add_argument("--values", metavar="CSV-list", required=True)
    p.add_argument("--reps", type=int, default=20, metavar="N")
    p.add_argument("--jobs", type=int, default=1, metavar="N")
    p.add_argument("--out", metavar="PATH", help="results CSV (default stdout)")
    p.add_argument("--means", metavar="PATH", help="means CSV (default <out>.means.csv)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("predict", help="D5 vs D3 predictor study")
    common(p, config=False)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seeds", type=int, default=20, metavar="COUNT")
    p.add_argument("--ridge-lambda", type=float, default=1e-6)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("usecase", help="scripted UE throughput prediction walkthrough")
    common(p, config=False)
    p.set_defaults(func=cmd_usecase)

    p = sub.add_parser("validate", help="check a scenario config")
    p.add_argument("--config", metavar="PATH", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "reps", 1) < 1:
        print("error: reps: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
