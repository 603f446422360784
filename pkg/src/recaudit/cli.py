"""Command-line interface.

Verbs map to pipeline stages: prepare, tune, train, recommend, evaluate,
report, export-fig, plus `run` for the whole chain. Exit codes: 0 success,
1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from recaudit import pipeline
from recaudit.config import ExperimentConfig, parse_config
from recaudit.errors import DataError, NumericalError, UsageError
from recaudit.kernels import get_backend
from recaudit.recommend import canonical_algorithm

log = logging.getLogger("recaudit")

_STAGE_VERBS = ("prepare", "tune", "train", "recommend", "evaluate",
                "report", "export-fig", "run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recaudit",
        description="Audit popularity bias and calibration of top-n "
                    "recommenders over a ratings dataset.")
    parser.add_argument("--verbose", action="store_true",
                        help="log at DEBUG level")
    sub = parser.add_subparsers(dest="verb", required=True)

    def stage(verb: str, help_text: str):
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("config", help="experiment config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed (split and training)")
        p.add_argument("--output-dir", default=None,
                       help="override the config output directory")
        p.add_argument("--algorithms", default=None,
                       help="comma-separated subset of configured algorithms")
        return p

    stage("prepare", "parse, filter, and split the dataset")
    p = stage("tune", "grid-search hyperparameters on an inner split")
    p.add_argument("--grid", required=True,
                   help="grid file: algo.field = v1,v2,... per line")
    p.add_argument("--kernel", choices=("auto", "compiled", "python"),
                   default=None, help="SGD kernel backend")
    p = stage("train", "fit the configured recommenders")
    p.add_argument("--kernel", choices=("auto", "compiled", "python"),
                   default=None, help="SGD kernel backend")
    stage("recommend", "produce top-n lists for every train user")
    stage("evaluate", "accuracy, per-user metrics, and cohorts")
    stage("report", "assemble report.json/report.txt from stage outputs")
    p = stage("export-fig", "write one figure's plot data as CSV")
    p.add_argument("figure", help=f"one of: {', '.join(pipeline.FIGURE_IDS)}")
    p.add_argument("--dest", default=None, help="output CSV path")
    p = stage("run", "run every stage in order")
    p.add_argument("--kernel", choices=("auto", "compiled", "python"),
                   default=None, help="SGD kernel backend")
    return parser


def _load_config(args) -> ExperimentConfig:
    config = parse_config(args.config)
    if args.seed is not None:
        config = config.replace(
            seed=args.seed,
            algo_configs=tuple(c.with_overrides(seed=args.seed)
                               for c in config.algo_configs))
    if args.output_dir is not None:
        config = config.replace(output_dir=os.path.abspath(args.output_dir))
    if args.algorithms is not None:
        names = tuple(canonical_algorithm(a.strip())
                      for a in args.algorithms.split(",") if a.strip())
        if not names:
            raise UsageError("--algorithms got an empty list")
        subset = tuple(config.algo_config(n) for n in names)  # validates
        config = config.replace(algorithms=names, algo_configs=subset)
    return config


def _dispatch(args) -> int:
    config = _load_config(args)
    backend = getattr(args, "kernel", None)

    if args.verb == "prepare":
        prepared = pipeline.prepare(config)
        print(f"prepared: {prepared.train.n_ratings} train / "
              f"{prepared.test.n_ratings} test ratings "
              f"({prepared.dataset.n_users} users, "
              f"{prepared.dataset.n_items} items)")
    elif args.verb == "tune":
        grid = pipeline.parse_grid(args.grid)
        best = pipeline.tune(config, grid, backend=backend)
        for name in config.algorithms:
            print(f"{name}: {best[name]}")
        print(f"wrote {os.path.join(config.output_dir, 'tuned.json')}")
    elif args.verb == "train":
        _, kind = get_backend(backend)
        log.info("SGD kernel backend: %s", kind)
        pipeline.train_models(config, backend=backend)
        print(f"wrote models to {os.path.join(config.output_dir, 'models')}")
    elif args.verb == "recommend":
        pipeline.generate_recommendations(config)
        print(f"wrote lists to {os.path.join(config.output_dir, 'recs')}")
    elif args.verb == "evaluate":
        summary = pipeline.evaluate_models(config)
        for name in sorted(summary["algorithms"]):
            entry = summary["algorithms"][name]
            print(f"{name}: precision@{entry['n']} = {entry['precision']:.4f}")
    elif args.verb == "report":
        report = pipeline.build_report(config)
        print(pipeline.render_report(report))
    elif args.verb == "export-fig":
        report = pipeline.load_report(config.output_dir)
        dest = pipeline.export_figure_data(report, args.figure, args.dest)
        print(dest)
    else:  # run
        report = pipeline.run_experiment(config, backend=backend)
        print(pipeline.render_report(report))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; remap to this tool's code 1
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
