"""Experiment pipeline: ingest -> split -> train -> recommend -> evaluate ->
cohorts -> stats -> report.

Each stage persists its outputs under the experiment's output directory so
later stages (and reruns) can start from disk:

    manifest.csv              train/test assignment per record
    prepare.json              dataset, filter, and split summary
    models/<algo>.npz         trained model dumps
    recs/<algo>.csv           top-n lists
    metrics/<algo>_users.csv  per-user popularity/calibration rows
    metrics/<algo>_items.csv  per-item rated vs recommended counts
    cohorts.csv               popularity and gender partitions
    evaluation.json           precision and exclusion counts
    report.json / report.txt  the full audit report
    figures/<id>.csv          per-figure plot data

The report stage reads only the persisted files, so every reported number
is reproducible from the intermediates by construction.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from recaudit import cohorts as cohorts_mod
from recaudit import metrics as metrics_mod
from recaudit.config import (ExperimentConfig, _ALGO_FIELDS,
                             _coerce_algo_value, config_echo)
from recaudit.dataset import (RatingsDataset, TrainTestSplit, apply_manifest,
                              core_filter, parse_demographics,
                              parse_item_catalog, parse_ratings, split)
from recaudit.errors import DataError, NumericalError, RecauditError, UsageError
from recaudit.recommend import (AlgoConfig, RecommendationSet,
                                canonical_algorithm, fit, load_model,
                                precision_at_n, recommend_all, save_model)
from recaudit.stats import TestResult, pearson_correlation, t_test

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
FIGURE_IDS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9")


# ---------------------------------------------------------------------------
# Stage plumbing
# ---------------------------------------------------------------------------

def _run_stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except RecauditError as exc:
        if str(exc).startswith("[stage "):
            raise
        raise type(exc)(f"[stage {name}] {exc}") from exc


def _outpath(config: ExperimentConfig, *parts) -> str:
    path = os.path.join(config.output_dir, *parts)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    return path


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _test_dict(result: TestResult) -> dict:
    out = dataclasses.asdict(result)
    out["significant_at"] = list(result.significant_at)
    return out


# ---------------------------------------------------------------------------
# prepare
# ---------------------------------------------------------------------------

@dataclass
class PreparedData:
    dataset: RatingsDataset
    train: RatingsDataset
    test: RatingsDataset
    split: TrainTestSplit
    catalog: object
    demographics: object  # UserDemographics or None


def prepare(config: ExperimentConfig, write: bool = True) -> PreparedData:
    """Parse, core-filter, and split the data. An existing manifest.csv is
    replayed instead of resplitting, so downstream stages always see the
    same partition."""
    for label, path in (("ratings", config.ratings), ("items", config.items),
                        ("demographics", config.demographics)):
        if path is not None and not os.path.exists(path):
            raise UsageError(f"{label} file not found: {path}")

    dataset = parse_ratings(config.ratings, config.format,
                            delimiter=config.delimiter,
                            rating_scale=config.rating_scale)
    raw_count = dataset.n_ratings
    if config.min_user_ratings > 1 or config.min_item_ratings > 1:
        # a threshold of 1 is vacuous, so <= 1 means "filter off"
        dataset = core_filter(dataset, max(config.min_user_ratings, 1),
                              max(config.min_item_ratings, 1))
    catalog = parse_item_catalog(config.items, config.format,
                                 delimiter=config.delimiter)
    demographics = None
    if config.demographics is not None:
        demographics = parse_demographics(config.demographics)

    manifest = os.path.join(config.output_dir, "manifest.csv")
    if os.path.exists(manifest):
        parts = apply_manifest(dataset, manifest)
    else:
        parts = split(dataset, config.split_ratio, config.seed)
        if write:
            os.makedirs(config.output_dir, exist_ok=True)
            parts.write_manifest(manifest)

    if write:
        _write_json({
            "schema_version": REPORT_SCHEMA_VERSION,
            "dataset": {
                "ratings_file": os.path.basename(config.ratings),
                "format": config.format,
                "ratings_before_filter": raw_count,
                "ratings": dataset.n_ratings,
                "users": dataset.n_users,
                "items": dataset.n_items,
                "rating_scale": list(dataset.rating_scale),
                "fingerprint": dataset.fingerprint,
            },
            "filter": {"min_user_ratings": config.min_user_ratings,
                       "min_item_ratings": config.min_item_ratings},
            "split": {
                "ratio": config.split_ratio,
                "seed": config.seed,
                "train_ratings": parts.train.n_ratings,
                "test_ratings": parts.test.n_ratings,
                "train_users": parts.train.n_users,
                "test_users": parts.test.n_users,
            },
            "catalog": {"items": len(catalog.features),
                        "genres": list(catalog.vocabulary)},
            "demographics": None if demographics is None else {
                "users": len(demographics.gender),
                "unknown": demographics.unknown_count,
            },
        }, _outpath(config, "prepare.json"))
        log.info("prepared %d ratings (%d users, %d items); train %d / test %d",
                 dataset.n_ratings, dataset.n_users, dataset.n_items,
                 parts.train.n_ratings, parts.test.n_ratings)
    return PreparedData(dataset, parts.train, parts.test, parts,
                        catalog, demographics)


# ---------------------------------------------------------------------------
# train / recommend
# ---------------------------------------------------------------------------

def _algo_subset(config: ExperimentConfig, algorithms) -> tuple:
    if algorithms is None:
        return config.algorithms
    subset = tuple(config.algo_config(name).algorithm for name in algorithms)
    return subset


def train_models(config: ExperimentConfig, prepared: PreparedData | None = None,
                 algorithms=None, backend: str | None = None) -> dict:
    """Fit the configured algorithms on the train partition and dump each
    model to models/<algo>.npz."""
    prepared = prepared or prepare(config)
    models = {}
    for name in _algo_subset(config, algorithms):
        cfg = config.algo_config(name)
        kwargs = {"backend": backend} if name in ("BMF", "SVDpp") else {}
        model = fit(prepared.train, cfg, **kwargs)
        save_model(model, _outpath(config, "models", f"{name}.npz"))
        models[name] = model
        log.info("trained %s", name)
    return models


def load_models(config: ExperimentConfig, prepared: PreparedData | None = None,
                algorithms=None) -> dict:
    prepared = prepared or prepare(config)
    models = {}
    for name in _algo_subset(config, algorithms):
        path = os.path.join(config.output_dir, "models", f"{name}.npz")
        if not os.path.exists(path):
            raise UsageError(f"no trained model for {name} at {path}; "
                             f"run the train stage first")
        models[name] = load_model(path, prepared.train)
    return models


def generate_recommendations(config: ExperimentConfig,
                             prepared: PreparedData | None = None,
                             models: dict | None = None,
                             algorithms=None) -> dict:
    """Produce top-n lists for every train user and write recs/<algo>.csv."""
    prepared = prepared or prepare(config)
    models = models or load_models(config, prepared, algorithms)
    recsets = {}
    for name, model in models.items():
        recs = recommend_all(model, prepared.train, config.list_size)
        recs.to_csv(_outpath(config, "recs", f"{name}.csv"))
        recsets[name] = recs
        if recs.short_list_users:
            log.info("%s: %d users got short lists", name,
                     len(recs.short_list_users))
    return recsets


def load_recommendations(config: ExperimentConfig,
                         prepared: PreparedData | None = None,
                         algorithms=None) -> dict:
    prepared = prepared or prepare(config)
    recsets = {}
    for name in _algo_subset(config, algorithms):
        path = os.path.join(config.output_dir, "recs", f"{name}.csv")
        if not os.path.exists(path):
            raise UsageError(f"no recommendations for {name} at {path}; "
                             f"run the recommend stage first")
        recsets[name] = RecommendationSet.from_csv(
            path, config.list_size, fingerprint=prepared.train.fingerprint,
            algorithm=name)
    return recsets


# ---------------------------------------------------------------------------
# evaluate: accuracy + per-user metrics + cohorts
# ---------------------------------------------------------------------------

def _build_cohorts(config: ExperimentConfig, prepared: PreparedData,
                   popularity) -> tuple:
    """Cohorts over the base population: train users with a usable profile
    genre distribution. Returns ({partition: [Cohort]}, scores)."""
    train = prepared.train
    _, cataloged = prepared.catalog.feature_matrix(train.items)
    order, ptr = train.by_user()
    items_of = train.item_codes[order]
    prof_theta = metrics_mod._profile_avg_theta(train, popularity)

    base, scores = [], {}
    for ucode, user in enumerate(train.users.tolist()):
        seg = items_of[ptr[ucode]:ptr[ucode + 1]]
        if cataloged[seg].any():
            base.append(user)
            scores[user] = float(prof_theta[ucode])

    partitions = {"popularity": cohorts_mod.group_by_popularity(
        base, scores, config.n_groups, config.grouping)}
    if prepared.demographics is not None:
        partitions["gender"] = cohorts_mod.group_by_gender(
            base, prepared.demographics, scores)
    return partitions, scores


def evaluate_models(config: ExperimentConfig,
                    prepared: PreparedData | None = None,
                    recsets: dict | None = None, algorithms=None) -> dict:
    """Accuracy and per-user audit metrics for each algorithm; persists the
    user/item CSVs, the cohort partition, and evaluation.json."""
    prepared = prepared or prepare(config)
    recsets = recsets or load_recommendations(config, prepared, algorithms)
    popularity = metrics_mod.item_popularity(prepared.train)
    partitions, _ = _build_cohorts(config, prepared, popularity)
    cohorts_mod.write_cohorts(partitions, _outpath(config, "cohorts.csv"))
    labels = cohorts_mod.cohort_labels(partitions["popularity"])

    summary = {"schema_version": REPORT_SCHEMA_VERSION, "algorithms": {}}
    for name in sorted(recsets):
        recs = recsets[name]
        accuracy = precision_at_n(recs, prepared.test,
                                  threshold=config.relevance_threshold)
        rows, exclusions = metrics_mod.user_metrics(
            prepared.train, recs, prepared.catalog, popularity)
        metrics_mod.write_user_metrics(
            rows, labels, _outpath(config, "metrics", f"{name}_users.csv"))
        metrics_mod.write_scatter(
            metrics_mod.rated_vs_recommended(prepared.train, recs),
            _outpath(config, "metrics", f"{name}_items.csv"))
        summary["algorithms"][name] = {
            "precision": accuracy.precision,
            "n": accuracy.n,
            "evaluated_users": accuracy.n_evaluated,
            "excluded_users_no_test": accuracy.n_excluded,
            "metric_rows": len(rows),
            "metric_exclusions": exclusions,
        }
        log.info("%s: precision@%d = %.4f over %d users "
                 "(%d without test ratings); %d metric rows, exclusions %s",
                 name, accuracy.n, accuracy.precision, accuracy.n_evaluated,
                 accuracy.n_excluded, len(rows), exclusions)
    _write_json(summary, _outpath(config, "evaluation.json"))
    return summary


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

@dataclass
class AuditReport:
    """Aggregated audit results; ``data`` is the JSON-ready report body."""

    data: dict
    output_dir: str

    def algorithms(self) -> list:
        return sorted(self.data["algorithms"])

    def algo(self, name: str) -> dict:
        return self.data["algorithms"][name]

    def precision(self, name: str) -> float:
        return self.algo(name)["precision"]

    def total_pl(self, name: str) -> float:
        return self.algo(name)["total"]["pl"]

    def total_mc(self, name: str) -> float:
        return self.algo(name)["total"]["mc"]

    def group_rows(self, name: str, partition: str = "popularity") -> list:
        return self.algo(name)[f"{partition}_groups"]

    def group_row(self, name: str, label: str) -> dict:
        for partition in ("popularity", "gender"):
            for row in self.algo(name).get(f"{partition}_groups", []):
                if row["label"] == label:
                    return row
        raise KeyError(label)


def _aggregate(rows) -> dict:
    """Eq-style aggregates over a set of per-user rows: two-level GAP means,
    their lift, and mean miscalibration."""
    if not rows:
        return {"users": 0, "gap_p": None, "gap_q": None, "pl": None,
                "mc": None}
    gap_p = sum(r.profile_avg_popularity for r in rows) / len(rows)
    gap_q = sum(r.rec_avg_popularity for r in rows) / len(rows)
    pl = metrics_mod.popularity_lift(gap_p, gap_q) if gap_p > 0 else None
    mc = sum(r.miscalibration for r in rows) / len(rows)
    return {"users": len(rows), "gap_p": gap_p, "gap_q": gap_q,
            "pl": pl, "mc": mc}


def _paired_test(rows_a, rows_b, field) -> dict | None:
    a = [getattr(r, field) for r in rows_a]
    b = [getattr(r, field) for r in rows_b]
    if len(a) < 2 or len(b) < 2:
        return None
    return _test_dict(t_test(a, b))


def build_report(config: ExperimentConfig,
                 prepared: PreparedData | None = None) -> AuditReport:
    """Assemble the audit report purely from the persisted stage outputs."""
    for name in ("prepare.json", "evaluation.json", "cohorts.csv"):
        if not os.path.exists(os.path.join(config.output_dir, name)):
            raise UsageError(f"missing {name} in {config.output_dir}; "
                             f"run the earlier stages first")
    prep = _read_json(os.path.join(config.output_dir, "prepare.json"))
    evaluation = _read_json(os.path.join(config.output_dir, "evaluation.json"))
    partitions = cohorts_mod.read_cohorts(
        os.path.join(config.output_dir, "cohorts.csv"))

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": config_echo(config),
        "dataset": prep["dataset"],
        "split": prep["split"],
        "cohorts": {
            partition: [{"label": c.label, "users": len(c)}
                        for c in cohort_list]
            for partition, cohort_list in partitions.items()
        },
        "algorithms": {},
    }

    for name in sorted(evaluation["algorithms"]):
        path = os.path.join(config.output_dir, "metrics", f"{name}_users.csv")
        if not os.path.exists(path):
            raise UsageError(f"missing per-user metrics for {name} at {path}")
        rows, labels = metrics_mod.read_user_metrics(path)
        by_user = {r.user_id: r for r in rows}

        entry = dict(evaluation["algorithms"][name])
        entry["total"] = _aggregate(rows)
        tests = {}

        group_rows = {}
        pop_rows = []
        for cohort in partitions["popularity"]:
            members = [by_user[u] for u in cohort.sorted_members()
                       if u in by_user]
            group_rows[cohort.label] = members
            agg = _aggregate(members)
            agg["label"] = cohort.label
            agg["mean_profile_popularity"] = (
                None if not members else
                sum(r.profile_avg_popularity for r in members) / len(members))
            pop_rows.append(agg)
        entry["popularity_groups"] = pop_rows

        n_groups = len(partitions["popularity"])
        lo = partitions["popularity"][0].label
        hi = partitions["popularity"][n_groups - 1].label
        tests["pl_extreme_groups"] = _paired_test(
            group_rows.get(lo, []), group_rows.get(hi, []), "lift")
        tests["mc_extreme_groups"] = _paired_test(
            group_rows.get(lo, []), group_rows.get(hi, []), "miscalibration")

        if "gender" in partitions:
            gender_rows = []
            samples = {}
            for cohort in partitions["gender"]:
                members = [by_user[u] for u in cohort.sorted_members()
                           if u in by_user]
                samples[cohort.label] = members
                agg = _aggregate(members)
                agg["label"] = cohort.label
                gender_rows.append(agg)
            entry["gender_groups"] = gender_rows
            tests["pl_women_vs_men"] = _paired_test(
                samples.get("women", []), samples.get("men", []), "lift")
            tests["mc_women_vs_men"] = _paired_test(
                samples.get("women", []), samples.get("men", []),
                "miscalibration")

        entry["tests"] = tests
        report["algorithms"][name] = entry

    points = {name: [report["algorithms"][name]["total"]["pl"],
                     report["algorithms"][name]["total"]["mc"]]
              for name in sorted(report["algorithms"])}
    usable = {k: v for k, v in points.items()
              if v[0] is not None and v[1] is not None}
    corr = None
    if len(usable) >= 2:
        xs = [usable[k][0] for k in sorted(usable)]
        ys = [usable[k][1] for k in sorted(usable)]
        try:
            corr = pearson_correlation(xs, ys)
        except DataError:
            corr = None
    report["pl_mc_correlation"] = {"pearson_r": corr, "points": points}

    audit = AuditReport(report, config.output_dir)
    _write_json(report, _outpath(config, "report.json"))
    with open(_outpath(config, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(render_report(audit))
    return audit


def _fmt(x, width=10, prec=4) -> str:
    if x is None:
        return "-".rjust(width)
    return f"{x:{width}.{prec}f}"


def render_report(report: AuditReport) -> str:
    """Fixed-width text rendering of the report."""
    data = report.data
    lines = []
    ds = data["dataset"]
    lines.append("popularity bias and calibration audit")
    lines.append("=" * 53)
    lines.append(f"dataset: {ds['ratings_file']} ({ds['format']}) | "
                 f"{ds['ratings']} ratings, {ds['users']} users, "
                 f"{ds['items']} items")
    sp = data["split"]
    lines.append(f"split: {sp['ratio']:.2f} train ratio, seed {sp['seed']} | "
                 f"train {sp['train_ratings']} / test {sp['test_ratings']}")
    lines.append("")

    for name in sorted(data["algorithms"]):
        entry = data["algorithms"][name]
        lines.append(name)
        lines.append("-" * len(name))
        lines.append(f"precision@{entry['n']}: {entry['precision']:.4f} "
                     f"({entry['evaluated_users']} users, "
                     f"{entry['excluded_users_no_test']} without test ratings)")
        total = entry["total"]
        lines.append(f"total: GAP_p {_fmt(total['gap_p'], 8)}  "
                     f"GAP_q {_fmt(total['gap_q'], 8)}  "
                     f"PL {_fmt(total['pl'], 8)}  MC {_fmt(total['mc'], 8)}  "
                     f"({total['users']} users)")
        excl = entry["metric_exclusions"]
        lines.append("exclusions: " + ", ".join(
            f"{k}={excl[k]}" for k in sorted(excl)))
        lines.append("")
        lines.append(f"{'group':>8} {'users':>7} {'GAP_p':>10} {'GAP_q':>10} "
                     f"{'PL':>10} {'MC':>10}")
        for row in entry["popularity_groups"] + entry.get("gender_groups", []):
            lines.append(f"{row['label']:>8} {row['users']:>7} "
                         f"{_fmt(row['gap_p'])} {_fmt(row['gap_q'])} "
                         f"{_fmt(row['pl'])} {_fmt(row['mc'])}")
        lines.append("")
        for label, test in sorted(entry["tests"].items()):
            if test is None:
                lines.append(f"{label}: not testable (too few samples)")
                continue
            flags = ",".join(f"p<{t}" for t in test["significant_at"]) or "ns"
            lines.append(f"{label}: t={test['statistic']:.3f} "
                         f"p={test['p_value']:.3g} dof={test['dof']:.1f} "
                         f"(n={test['n_a']}/{test['n_b']}) [{flags}]")
        lines.append("")

    corr = data["pl_mc_correlation"]
    r = corr["pearson_r"]
    lines.append("lift vs miscalibration across algorithms: "
                 + ("r undefined" if r is None else f"pearson r = {r:.4f}"))
    for name in sorted(corr["points"]):
        pl, mc = corr["points"][name]
        lines.append(f"  {name:>12}: PL {_fmt(pl, 9)}  MC {_fmt(mc, 9)}")
    lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# full run + tune
# ---------------------------------------------------------------------------

def run_experiment(config: ExperimentConfig,
                   backend: str | None = None) -> AuditReport:
    """Run every stage in order and return the final report. A status.json
    marker tracks progress so aborted runs are recognizable."""
    os.makedirs(config.output_dir, exist_ok=True)
    status_path = os.path.join(config.output_dir, "status.json")

    def status(state, stage=None, error=None):
        _write_json({"state": state, "stage": stage, "error": error},
                    status_path)

    stage = "prepare"
    try:
        status("running", stage)
        prepared = _run_stage("prepare", prepare, config)
        stage = "train"
        status("running", stage)
        models = _run_stage("train", train_models, config, prepared,
                            backend=backend)
        stage = "recommend"
        status("running", stage)
        recsets = _run_stage("recommend", generate_recommendations, config,
                             prepared, models)
        stage = "evaluate"
        status("running", stage)
        _run_stage("evaluate", evaluate_models, config, prepared, recsets)
        stage = "report"
        status("running", stage)
        report = _run_stage("report", build_report, config, prepared)
    except Exception as exc:
        status("failed", stage, str(exc))
        raise
    status("complete")
    return report


def parse_grid(path) -> dict:
    """Hyperparameter grid file: ``algo.field = v1,v2,...`` per line.
    Candidates are the cross-product of each algorithm's fields, expanded
    in file order."""
    per_algo: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped or "." not in stripped.split("=")[0]:
                raise UsageError(f"{path}:{lineno}: expected "
                                 f"'algo.field = v1,v2,...'")
            key, _, raw = stripped.partition("=")
            algo, _, field = key.strip().partition(".")
            algo = canonical_algorithm(algo)
            if field not in _ALGO_FIELDS:
                raise UsageError(f"{path}:{lineno}: unknown option {field!r}")
            try:
                values = [_coerce_algo_value(field, v.strip())
                          for v in raw.split(",") if v.strip()]
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
            if not values:
                raise UsageError(f"{path}:{lineno}: empty value list")
            per_algo.setdefault(algo, {})[field] = values

    grid = {}
    for algo, fields in per_algo.items():
        names = list(fields)
        combos = [dict(zip(names, combo))
                  for combo in itertools.product(*(fields[n] for n in names))]
        grid[algo] = combos
    return grid


def tune(config: ExperimentConfig, grid: dict,
         backend: str | None = None) -> dict:
    """Grid-search each algorithm for the best precision@n on an inner
    validation split of the train partition. Ties keep the earliest grid
    entry; candidates that diverge are skipped."""
    if not grid:
        raise UsageError("empty hyperparameter grid")
    prepared = prepare(config, write=False)
    inner = split(prepared.train, config.split_ratio, config.seed + 1)

    best = {}
    results = {}
    for name in config.algorithms:
        candidates = grid.get(name, [{}])
        if not candidates:
            raise UsageError(f"empty grid for {name}")
        scored = []
        for idx, overrides in enumerate(candidates):
            cfg = config.algo_config(name).with_overrides(**overrides)
            kwargs = {"backend": backend} if name in ("BMF", "SVDpp") else {}
            try:
                model = fit(inner.train, cfg, **kwargs)
            except NumericalError as exc:
                log.info("tune %s candidate %d diverged: %s", name, idx, exc)
                continue
            recs = recommend_all(model, inner.train, config.list_size)
            res = precision_at_n(recs, inner.test,
                                 threshold=config.relevance_threshold)
            scored.append((res.precision, -idx, cfg, overrides))
            log.info("tune %s candidate %d: precision %.4f (%s)",
                     name, idx, res.precision, overrides)
        if not scored:
            raise NumericalError(f"every grid candidate for {name} diverged")
        precision, neg_idx, cfg, overrides = max(scored)
        best[name] = cfg
        results[name] = {"precision": precision, "candidate": -neg_idx,
                         "overrides": overrides,
                         "config": dataclasses.asdict(cfg)}
    _write_json({"schema_version": REPORT_SCHEMA_VERSION,
                 "validation_ratio": config.split_ratio,
                 "algorithms": results},
                _outpath(config, "tuned.json"))
    return best


# ---------------------------------------------------------------------------
# figure data
# ---------------------------------------------------------------------------

def _read_items_csv(output_dir: str, name: str):
    import pandas as pd
    path = os.path.join(output_dir, "metrics", f"{name}_items.csv")
    if not os.path.exists(path):
        raise UsageError(f"missing {path}; run the evaluate stage first")
    return pd.read_csv(path)


def _read_users_csv(output_dir: str, name: str):
    path = os.path.join(output_dir, "metrics", f"{name}_users.csv")
    if not os.path.exists(path):
        raise UsageError(f"missing {path}; run the evaluate stage first")
    return metrics_mod.read_user_metrics(path)


def export_figure_data(report: AuditReport, which: str,
                       dest: str | None = None) -> str:
    """Write one figure's plot data as CSV and return the path.

    fig2: long-tail curve (items by descending rating count, cumulative
    share). fig3: users by ascending profile popularity. fig4/fig5: per-item
    rated vs recommended counts per algorithm (same schema; the two ids
    exist because the analysis is usually run on two datasets). fig6: cohort
    histogram. fig7: total PL per algorithm. fig8: group popularity vs PL.
    fig9: total PL vs total MC per algorithm.
    """
    import pandas as pd

    if which not in FIGURE_IDS:
        raise UsageError(f"unknown figure id {which!r}; "
                         f"valid: {', '.join(FIGURE_IDS)}")
    outdir = report.output_dir
    if dest is None:
        dest = os.path.join(outdir, "figures", f"{which}.csv")
    os.makedirs(os.path.dirname(dest), exist_ok=True)
    algos = report.algorithms()

    if which == "fig2":
        items = _read_items_csv(outdir, algos[0])
        items = items.sort_values(["times_rated", "item_id"],
                                  ascending=[False, True], kind="mergesort")
        items = items.reset_index(drop=True)
        total = items["times_rated"].sum()
        frame = pd.DataFrame({
            "rank": np.arange(1, len(items) + 1),
            "item_id": items["item_id"],
            "times_rated": items["times_rated"],
            "cumulative_share": items["times_rated"].cumsum() / total,
        })
    elif which == "fig3":
        rows, _ = _read_users_csv(outdir, algos[0])
        rows = sorted(rows, key=lambda r: (r.profile_avg_popularity, str(r.user_id)))
        frame = pd.DataFrame({
            "rank": np.arange(1, len(rows) + 1),
            "user_id": [r.user_id for r in rows],
            "profile_avg_pop": [r.profile_avg_popularity for r in rows],
        })
    elif which in ("fig4", "fig5"):
        parts = []
        for name in algos:
            items = _read_items_csv(outdir, name)
            items.insert(0, "algorithm", name)
            parts.append(items[["algorithm", "item_id", "times_rated",
                                "times_recommended"]])
        frame = pd.concat(parts, ignore_index=True)
    elif which == "fig6":
        rows = report.group_rows(algos[0])
        total_users = sum(r["users"] for r in rows)
        frame = pd.DataFrame({
            "label": [r["label"] for r in rows],
            "mean_profile_popularity": [r["mean_profile_popularity"]
                                        for r in rows],
            "users": [r["users"] for r in rows],
            "pct_users": [100.0 * r["users"] / total_users for r in rows],
        })
    elif which == "fig7":
        frame = pd.DataFrame({
            "algorithm": algos,
            "total_pl": [report.total_pl(a) for a in algos],
        })
    elif which == "fig8":
        records = []
        for name in algos:
            for row in report.group_rows(name):
                records.append({"algorithm": name, "label": row["label"],
                                "mean_profile_popularity":
                                    row["mean_profile_popularity"],
                                "pl": row["pl"]})
        frame = pd.DataFrame(records)
    else:  # fig9
        frame = pd.DataFrame({
            "algorithm": algos,
            "total_pl": [report.total_pl(a) for a in algos],
            "total_mc": [report.total_mc(a) for a in algos],
        })

    frame.to_csv(dest, index=False)
    return dest


def load_report(output_dir: str) -> AuditReport:
    path = os.path.join(output_dir, "report.json")
    if not os.path.exists(path):
        raise UsageError(f"no report at {path}; run the report stage first")
    return AuditReport(_read_json(path), output_dir)
