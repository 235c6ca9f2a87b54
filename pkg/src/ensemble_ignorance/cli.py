"""Command-line front end.

Exit codes: 0 success, 2 validation failure, 3 numeric failure (degenerate
ensemble without ``--skip-degenerate``).
"""
import argparse
import csv
import io
import sys

import numpy as np

from .ensemble import inject_bias, load_series, synthesize_series, to_anomalies, write_series
from .exceptions import DegenerateEnsembleError, ValidationError
from .experiments import RUNNERS, ExperimentSpec, Kind, run_subsample_compare
from .scores import Estimator, GaussianParams, ScoreReport, score_ensembles
from .validation import UNITS

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


def _open_in(path):
    if path == "-":
        return io.StringIO(sys.stdin.read())
    return open(path, newline="", encoding="utf-8")


def _emit(text, path):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)


def _fmt(value):
    return format(float(value), ".17g")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ensemble-ignorance",
        description="Ignorance scores for Normal-approximated ensemble forecasts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    score = sub.add_parser("score", help="score a verification CSV")
    score.add_argument("--input", default="-", help="CSV path or - for stdin")
    score.add_argument("--output", default="-", help="CSV path or - for stdout")
    score.add_argument(
        "--estimator", default="corrected",
        choices=[e.value for e in (Estimator.POPULATION, Estimator.STANDARD,
                                   Estimator.BIAS_CORRECTED, Estimator.EXTRAPOLATED)],
    )
    score.add_argument("--mean", type=float, help="forecast mean (population estimator)")
    score.add_argument("--variance", type=float, help="forecast variance (population estimator)")
    score.add_argument("--target-m", type=int, help="target ensemble size (extrapolated estimator)")
    score.add_argument("--units", default="nats", choices=sorted(UNITS))
    score.add_argument("--skip-degenerate", action="store_true",
                       help="drop zero-spread rows from the mean instead of aborting")

    exp = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    exp.add_argument("kind", choices=[k.value for k in Kind])
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--replicates", type=int)
    exp.add_argument("--output", default="-", help="result CSV; a .json sidecar is written next to it")
    exp.add_argument("--m", type=int, nargs="+", dest="m_values")
    exp.add_argument("--sigma", type=float, nargs="+", dest="sigma_values")
    exp.add_argument("--theta", type=float, nargs="+", dest="theta_values")
    exp.add_argument("--family", choices=["t", "gamma", "bimodal"])
    exp.add_argument("--sizes", type=int, nargs="+", help="subensemble sizes (subsample)")
    exp.add_argument("--input", help="forecast series CSV (subsample)")
    exp.add_argument("--input-b", help="second series CSV; default is the leave-one-out climatology")
    exp.add_argument("--bias", type=float,
                     help="compare anomalies of --input against a copy biased by this many climatological SDs")
    exp.add_argument("--threads", "--workers", type=int, default=1, dest="workers")

    synth = sub.add_parser("synth", help="write a synthetic verification series")
    synth.add_argument("--n", type=int, required=True)
    synth.add_argument("--m", type=int, required=True)
    synth.add_argument("--rho", type=float, required=True)
    synth.add_argument("--bias", type=float, default=0.0)
    synth.add_argument("--trend", type=float, default=0.0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--units", default="")
    synth.add_argument("--output", default="-")
    return parser


def cmd_score(args):
    estimator = Estimator(args.estimator)
    with _open_in(args.input) as fh:
        series = load_series(fh)
    params = None
    if estimator is Estimator.POPULATION:
        if args.mean is None or args.variance is None:
            raise ValidationError("population estimator requires --mean and --variance")
        params = GaussianParams(args.mean, args.variance)
    if estimator is Estimator.EXTRAPOLATED and args.target_m is None:
        raise ValidationError("extrapolated estimator requires --target-m")

    try:
        scores = score_ensembles(
            series.members, series.observations, estimator,
            target_size=args.target_m, params=params, skip_degenerate=args.skip_degenerate,
        )
    except DegenerateEnsembleError as exc:
        times = ", ".join(series.times[i] for i in exc.rows[:10])
        raise DegenerateEnsembleError(
            f"degenerate ensemble (zero spread) at time(s) {times}; "
            "rerun with --skip-degenerate to exclude them", exc.rows,
        ) from None
    skipped = tuple(t for t, s in zip(series.times, scores) if np.isnan(s))
    for t in skipped:
        print(f"warning: degenerate ensemble at time {t} excluded from the mean", file=sys.stderr)
    report = ScoreReport(
        estimator, scores, times=series.times, skipped=skipped, ensemble_size=series.m,
        target_size=args.target_m,
    ).in_units(args.units)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time", "score", "status"])
    for t, s in zip(report.times, report.scores):
        if np.isnan(s):
            writer.writerow([t, "", "degenerate"])
        else:
            writer.writerow([t, _fmt(s), "ok"])
    writer.writerow(["mean", _fmt(report.mean), "ok"])
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def cmd_experiment(args):
    kind = Kind(args.kind)
    output = None if args.output == "-" else args.output
    spec = ExperimentSpec.default(
        kind,
        m_values=args.m_values,
        sigma_values=args.sigma_values,
        theta_values=args.theta_values,
        family=args.family,
        sizes=args.sizes,
        replicates=args.replicates,
        seed=args.seed,
        output=output,
    )
    if kind is Kind.SUBSAMPLE:
        if not args.input:
            raise ValidationError("subsample experiment requires --input")
        series_a = load_series(args.input)
        if args.bias is not None:
            series_a = to_anomalies(series_a)
            series_b = inject_bias(series_a, args.bias)
        elif args.input_b:
            series_b = load_series(args.input_b)
        else:
            series_b = None
        result = run_subsample_compare(series_a, series_b, spec, workers=args.workers)
    else:
        result = RUNNERS[kind](spec, workers=args.workers)
    if output is None:
        sys.stdout.write(result.to_csv())
    return EXIT_OK


def cmd_synth(args):
    series = synthesize_series(args.n, args.m, args.rho, args.bias, args.trend, args.seed, args.units)
    if args.output == "-":
        write_series(series, sys.stdout)
    else:
        write_series(series, args.output)
    return EXIT_OK


COMMANDS = {"score": cmd_score, "experiment": cmd_experiment, "synth": cmd_synth}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except DegenerateEnsembleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
