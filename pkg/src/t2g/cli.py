"""``t2g`` command line: ingest, train, evaluate, sweep, synth.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error. Failures
print one line to stderr: ``t2g: error: <ErrorClass>: <message>``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from datetime import date
from pathlib import Path

from . import data_ingest, experiment, preprocess, synth
from .config import CONFIG_ENV, load_config
from .errors import T2GError
from .model import load_model, save_model
from .svgplot import write_station_plots

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("t2g")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> list[float]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated, non-empty list")
    try:
        return [float(t) for t in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def _int_list(text: str) -> list[int]:
    values = _float_list(text)
    if any(v != int(v) for v in values):
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")
    return [int(v) for v in values]


def _add_config(p):
    p.add_argument("--config", help=f"flat 'key = value' config file (default: ${CONFIG_ENV}, "
                                    "then built-in defaults); flags override it")
    p.add_argument("--seed", type=int, help="seed for the split and the categorical encoding "
                                            "permutation (config key split.seed)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="t2g", description="Estimate ground NO2 from satellite tropospheric "
                                             "columns with boosted oblivious trees.")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="logging verbosity")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("ingest", help="parse raw files into an aligned daily table CSV")
    p.add_argument("--ground-dir", required=True, help="directory of ARPAE-format hourly CSVs")
    p.add_argument("--satellite", required=True, help="satellite CSV station_code,date,no2_mol_m2")
    p.add_argument("--registry", help="optional station registry CSV station_code,lat,lon,name")
    p.add_argument("--out", required=True, help="output daily table CSV")
    p.add_argument("--height-km", type=float, help="column height for the converted column "
                                                   "(config key conversion.height_km)")
    p.add_argument("--collect-errors", action="store_true",
                   help="report malformed rows on stderr and continue instead of stopping")
    _add_config(p)

    p = sub.add_parser("train", help="fit a model on a daily table CSV")
    p.add_argument("--data", required=True, help="daily table CSV written by 'ingest'")
    p.add_argument("--out-model", required=True, help="model file to write")
    p.add_argument("--height-km", type=float, help="column height in km, 8 to 20")
    p.add_argument("--max-depth", type=int, help="tree depth, 1 to 16")
    _add_config(p)

    p = sub.add_parser("evaluate", help="score a model on its held-out split and plot")
    p.add_argument("--model", required=True, help="model file written by 'train'")
    p.add_argument("--data", required=True, help="daily table CSV the model was trained from")
    p.add_argument("--out-report", required=True, help="output directory for CSVs and SVG plots")

    p = sub.add_parser("sweep", help="grid over tree depth and column height")
    p.add_argument("--data", required=True, help="daily table CSV written by 'ingest'")
    p.add_argument("--grid-depths", required=True, type=_int_list, help="comma-separated depths, e.g. 3,6,12")
    p.add_argument("--grid-heights", required=True, type=_float_list,
                   help="comma-separated heights in km, e.g. 8,13,20")
    p.add_argument("--out", required=True, help="summary CSV max_depth,height_km,avg_rmse_norm,avg_rmse_ugm3")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="worker processes (default: logical CPU count)")
    _add_config(p)

    p = sub.add_parser("synth", help="write a synthetic fixture with a known mapping")
    d = synth.SynthSpec()
    p.add_argument("--out-dir", required=True, help="fixture directory")
    p.add_argument("--n-stations", type=int, default=d.n_stations, help="number of stations")
    p.add_argument("--n-days", type=int, default=d.n_days, help="number of days")
    p.add_argument("--seed", type=int, default=d.seed, help="generator seed")
    p.add_argument("--mapping", choices=synth.MAPPINGS, default=d.mapping,
                   help="satellite-to-ground mapping family")
    p.add_argument("--noise-std", type=float, default=d.noise_std,
                   help="noise level in normalized target units")
    p.add_argument("--missing-hour-rate", type=float, default=d.missing_hour_rate,
                   help="probability that an hourly row is dropped")
    p.add_argument("--incomplete-stations", type=int, default=d.incomplete_station_count,
                   help="stations given a gap that fails the completeness filter")
    p.add_argument("--start-date", type=date.fromisoformat, default=d.start_date,
                   help="first day, yyyy-mm-dd")
    p.add_argument("--linear-slope", type=float, default=d.linear_slope,
                   help="slope a in g = a*s + b (ug/m3 per mol/m2)")
    p.add_argument("--linear-intercept", type=float, default=d.linear_intercept,
                   help="intercept b in ug/m3")
    return parser


def _overrides(args, **extra) -> dict:
    out = {}
    if getattr(args, "seed", None) is not None:
        out["split.seed"] = args.seed
    if getattr(args, "height_km", None) is not None:
        out["conversion.height_km"] = args.height_km
    if getattr(args, "max_depth", None) is not None:
        out["model.max_depth"] = args.max_depth
    out.update(extra)
    return out


def cmd_ingest(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    registry = data_ingest.parse_registry(args.registry) if args.registry else None
    errors = [] if args.collect_errors else None
    result = experiment.load_tables(args.ground_dir, args.satellite, cfg, registry, errors)
    for exc in errors or ():
        print(f"t2g: warning: {type(exc).__name__}: {exc}", file=sys.stderr)
    preprocess.write_daily_tables(result.tables, args.out)
    print(f"ingest: {len(result.kept)} stations kept, {len(result.dropped)} dropped"
          f"{' ' + ','.join(map(str, result.dropped)) if result.dropped else ''}; "
          f"{sum(len(t) for t in result.tables)} daily rows -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    tables = preprocess.read_daily_tables(args.data)
    model, train, test = experiment.train_tables(tables, cfg)
    save_model(model, args.out_model)
    print(f"train: {len(model.trees)} trees, depth {cfg.model.max_depth}, h={cfg.conversion.height_km} km, "
          f"{len(train)} train / {len(test)} test samples -> {args.out_model}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    cfg = experiment.config_from_metadata(model.metadata)
    tables = preprocess.read_daily_tables(args.data)
    dataset = experiment.build_dataset(tables, cfg.conversion, cfg.sg)
    _, test = experiment.shuffle_split(dataset, cfg.split)
    stations = [t.station_code for t in tables if len(t)]
    report = experiment.evaluate_model(model, test, stations, cfg.split.weighted_average)
    out = Path(args.out_report)
    experiment.write_report(report, out)
    write_station_plots(report.series, out / "plots")
    excl = f"; excluded (no test samples): {','.join(map(str, report.excluded))}" if report.excluded else ""
    print(f"evaluate: {len(report.per_station)} stations, avg RMSE {report.averaged_rmse_normalized:.5f} "
          f"(normalized), {report.averaged_rmse_ugm3:.4f} ug/m3{excl} -> {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    grid = experiment.SweepGrid(tuple(args.grid_depths), tuple(args.grid_heights))
    tables = preprocess.read_daily_tables(args.data)
    rows = experiment.run_sweep(grid, tables, cfg, jobs=max(1, args.jobs))
    experiment.write_sweep(rows, args.out)
    for r in rows:
        if r.report is None:
            print(f"t2g: warning: cell depth={r.max_depth} h={r.height_km}: {r.error}", file=sys.stderr)
        else:
            print(f"depth={r.max_depth:>2} h={r.height_km:g} km  avg RMSE {r.report.averaged_rmse_normalized:.5f}")
    return EXIT_OK if any(r.report is not None for r in rows) else EXIT_DATA


def cmd_synth(args) -> int:
    spec = synth.SynthSpec(n_stations=args.n_stations, n_days=args.n_days, seed=args.seed,
                           mapping=args.mapping, noise_std=args.noise_std,
                           missing_hour_rate=args.missing_hour_rate,
                           incomplete_station_count=args.incomplete_stations,
                           start_date=args.start_date, linear_slope=args.linear_slope,
                           linear_intercept=args.linear_intercept)
    fx = synth.generate(spec, args.out_dir)
    print(f"synth: {spec.n_stations} stations x {spec.n_days} days ({spec.mapping}) -> {fx.root}")
    return EXIT_OK


COMMANDS = {"ingest": cmd_ingest, "train": cmd_train, "evaluate": cmd_evaluate,
            "sweep": cmd_sweep, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"t2g: error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except T2GError as exc:
        msg = " ".join(str(exc).split())
        print(f"t2g: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the internal exit code
        log.debug("internal error", exc_info=True)
        print(f"t2g: error: internal: {type(exc).__name__}: {' '.join(str(exc).split())}",
              file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
