"""``locfuse`` command line.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, dumps_scenario, load_experiment, load_scenario
from .csvio import load_dataset_csv, save_dataset_csv
from .evaluation import ExperimentConfig
from .forest import ForestKind, ForestParams, fit_forest, predict_classes, predict_positions
from .model import LocfuseError, Selector, feature_matrix, feature_rows, validate_dataset, zones_of
from .modelfile import load_model, save_model
from .propagation import generate_dataset, reference_scenario

log = logging.getLogger("locfuse")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
SEED_ENV = "LOCFUSE_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(args, default: int = 0) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV, "").strip()
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return default


def _scenario(args):
    return load_scenario(args.scenario) if getattr(args, "scenario", None) else reference_scenario()


def _dataset(args, scenario):
    ds = load_dataset_csv(args.dataset, scenario.roster, scenario.zones)
    problems = validate_dataset(ds)
    if problems:
        raise LocfuseError("invalid-dataset", "; ".join(map(str, problems[:10])))
    return ds


def cmd_scenario(args) -> int:
    if args.validate:
        sc = load_scenario(args.validate)
        print(f"ok: {len(sc.roster)} access points, {len(sc.zones)} zones, {len(sc.walls)} walls")
        return EXIT_OK
    text = dumps_scenario(reference_scenario() if args.reference or not args.scenario else load_scenario(args.scenario))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_generate(args) -> int:
    sc = _scenario(args)
    ds = generate_dataset(sc, args.n, _seed(args, 0), with_ranges=args.ranges)
    save_dataset_csv(ds, args.out)
    log.info("wrote %d samples to %s", len(ds), args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    sc = _scenario(args)
    ds = _dataset(args, sc)
    selector = Selector.parse(args.tech)
    fm = feature_matrix(ds, selector)
    params = ForestParams(
        n_trees=args.trees,
        max_depth=args.max_depth,
        min_samples_leaf=args.min_samples_leaf,
        features_per_split=args.features_per_split,
        seed=_seed(args, 0),
    )
    if args.kind == "classify":
        forest = fit_forest(fm.rows, ds.labels(), params, fm.columns, ForestKind.CLASSIFIER)
    else:
        forest = fit_forest(fm.rows, ds.positions(), params, fm.columns, ForestKind.REGRESSOR_2D)
    save_model(args.out, forest, ds.zones)
    log.info("trained %s forest on %d samples x %d features", forest.kind.value, len(ds), fm.width)
    return EXIT_OK


def cmd_locate(args) -> int:
    forest, zones = load_model(args.model)
    sc = _scenario(args)
    known = {ap.ap_id for ap in sc.roster}
    missing = [c for c in forest.columns if c not in known]
    if missing:
        raise LocfuseError("unknown-ap", f"model columns not in scenario roster: {missing}")
    ds = load_dataset_csv(args.sample, sc.roster, sc.zones)
    X = feature_rows(ds.samples, forest.columns)
    out = sys.stdout
    if forest.kind is ForestKind.CLASSIFIER:
        out.write("sample_id,zone\n")
        for s, z in zip(ds.samples, predict_classes(forest, X)):
            out.write(f"{s.sample_id},{z}\n")
    else:
        est = predict_positions(forest, X)
        labels = zones_of(est, zones)
        out.write("sample_id,x_m,y_m,zone\n")
        for s, (x, y), z in zip(ds.samples, est, labels):
            out.write(f"{s.sample_id},{x:.3f},{y:.3f},{z}\n")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluation import run_experiment
    from .report import write_report

    sc = _scenario(args)
    ds = _dataset(args, sc)
    cfg = load_experiment(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.iterations is not None:
        overrides["n_iterations"] = args.iterations
    if args.seed is not None or os.environ.get(SEED_ENV, "").strip():
        overrides["master_seed"] = _seed(args)
    if overrides:
        cfg = ExperimentConfig(**{**cfg.__dict__, **overrides})
    report = run_experiment(ds, cfg, workers=args.workers)
    paths = write_report(report, args.out, figures=not args.no_figures)
    for r in report.summary_rows():
        cdf = f" cdf80={r['cdf80_m']:.2f} m" if r["cdf80_m"] is not None else ""
        print(f"{r['technology']:>6} {r['method']:>8} accuracy={100 * r['mean_accuracy']:.1f}%{cdf}")
    log.info("report written to %s (%d files)", args.out, len(paths))
    return EXIT_OK


def cmd_serve(args) -> int:
    from .ingest import SampleStore, make_server

    sc = _scenario(args)
    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise UsageError(f"--bind must be HOST:PORT, got {args.bind!r}")
    store = SampleStore(args.store, sc.roster, sc.zones)
    try:
        server = make_server(host, int(port), store)
    except OSError as exc:
        raise LocfuseError("bind-failure", str(exc)) from None
    log.info("listening on %s:%d, %d samples in %s", host, server.server_address[1], store.count(), args.store)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="locfuse", description="RSSI-based 5G/WiFi localization toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("scenario", help="emit the reference scenario or validate a scenario file")
    s.add_argument("--reference", action="store_true", help="emit the reference scenario (default)")
    s.add_argument("--scenario", help="re-emit this scenario file in canonical form")
    s.add_argument("--validate", metavar="PATH")
    s.add_argument("--out")
    s.set_defaults(func=cmd_scenario)

    s = sub.add_parser("generate", help="simulate a dataset CSV from a scenario")
    s.add_argument("--scenario")
    s.add_argument("--n", type=int, default=250)
    s.add_argument("--seed", type=int)
    s.add_argument("--ranges", action="store_true", help="also simulate ranging")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("train", help="train a forest on a dataset")
    s.add_argument("--dataset", required=True)
    s.add_argument("--scenario")
    s.add_argument("--kind", choices=("classify", "regress"), required=True)
    s.add_argument("--tech", choices=("5g", "wifi", "fusion"), default="fusion")
    s.add_argument("--trees", type=int, default=100)
    s.add_argument("--max-depth", type=int)
    s.add_argument("--min-samples-leaf", type=int, default=2)
    s.add_argument("--features-per-split", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("locate", help="locate the samples of a CSV with a trained model")
    s.add_argument("--model", required=True)
    s.add_argument("--sample", required=True, help="CSV in dataset format")
    s.add_argument("--scenario")
    s.set_defaults(func=cmd_locate)

    s = sub.add_parser("eval", help="Monte Carlo evaluation; writes a report directory")
    s.add_argument("--dataset", required=True)
    s.add_argument("--scenario")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--iterations", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("serve", help="run the sample ingestion service")
    s.add_argument("--scenario")
    s.add_argument("--store", required=True, help="append-only record log")
    s.add_argument("--bind", default="127.0.0.1:8080")
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"locfuse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LocfuseError, ConfigError, OSError) as exc:
        print(f"locfuse: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
