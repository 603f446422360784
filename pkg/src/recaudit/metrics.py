"""Popularity and calibration metrics.

Item popularity theta(i) is the share of training users who rated item i.
Each user gets two genre distributions: p_u over the rated profile and q_u
over the recommendation list, both built from per-item uniform genre mass
with unit weights. Miscalibration is their Hellinger distance; GAP/lift
compare average profile popularity against average recommended popularity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import pandas as pd

from recaudit.dataset import ItemCatalog, RatingsDataset
from recaudit.errors import DataError, UsageError
from recaudit.recommend.base import RecommendationSet

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class ItemPopularity:
    """theta per training item: distinct raters / training users."""

    items: np.ndarray  # sorted item vocabulary
    theta: np.ndarray  # aligned with items, each in [0, 1]

    def of(self, item_id) -> float:
        """theta for one item; items unseen in training have theta 0."""
        pos = np.searchsorted(self.items, item_id)
        if pos < len(self.items) and self.items[pos] == item_id:
            return float(self.theta[pos])
        return 0.0

    def lookup(self, item_ids) -> np.ndarray:
        ids = np.asarray(item_ids)
        pos = np.searchsorted(self.items, ids)
        pos = np.clip(pos, 0, len(self.items) - 1)
        hit = self.items[pos] == ids
        return np.where(hit, self.theta[pos], 0.0)


def item_popularity(train: RatingsDataset) -> ItemPopularity:
    counts = np.bincount(train.item_codes, minlength=train.n_items)
    return ItemPopularity(items=train.items, theta=counts / train.n_users)


@dataclass(frozen=True)
class CategoricalDistribution:
    """Probability mass over the genre vocabulary; ``empty`` marks an
    unusable distribution (no cataloged items to build it from)."""

    labels: tuple
    mass: np.ndarray
    empty: bool = False

    def __post_init__(self):
        if self.empty:
            return
        if len(self.mass) != len(self.labels):
            raise DataError("distribution mass does not match its vocabulary")
        if np.any(self.mass < 0) or abs(float(self.mass.sum()) - 1.0) > _NORM_TOL:
            raise DataError("distribution is not normalized")

    def as_dict(self) -> dict:
        return {} if self.empty else dict(zip(self.labels, self.mass.tolist()))

    @classmethod
    def empty_over(cls, labels) -> "CategoricalDistribution":
        return cls(tuple(labels), np.zeros(len(labels)), empty=True)


def _mean_mass(labels, rows) -> CategoricalDistribution:
    mass = rows.mean(axis=0)
    total = float(mass.sum())
    if total <= 0:
        return CategoricalDistribution.empty_over(labels)
    return CategoricalDistribution(tuple(labels), mass / total)


def item_feature_distribution(item_id, catalog: ItemCatalog) -> CategoricalDistribution:
    """Uniform mass over the item's genres."""
    rows, cataloged = catalog.feature_matrix([item_id])
    if not cataloged[0]:
        raise DataError(f"item {item_id!r} not in catalog")
    return CategoricalDistribution(catalog.vocabulary, rows[0])


def profile_distribution(user_id, train: RatingsDataset,
                         catalog: ItemCatalog) -> CategoricalDistribution:
    """p_u: mean genre mass over the user's rated items (unit weights).
    Users with no cataloged profile items get a marked-empty result."""
    try:
        ucode = train.user_code(user_id)
    except KeyError:
        return CategoricalDistribution.empty_over(catalog.vocabulary)
    profile = train.items[train.profile_item_codes(ucode)]
    rows, cataloged = catalog.feature_matrix(profile)
    if not cataloged.any():
        return CategoricalDistribution.empty_over(catalog.vocabulary)
    return _mean_mass(catalog.vocabulary, rows[cataloged])


def recommendation_distribution(user_id, recs: RecommendationSet,
                                catalog: ItemCatalog) -> CategoricalDistribution:
    """q_u: mean genre mass over the user's recommendation list (unit weights)."""
    items = recs.lists.get(user_id)
    if items is None or len(items) == 0:
        return CategoricalDistribution.empty_over(catalog.vocabulary)
    rows, cataloged = catalog.feature_matrix(items)
    if not cataloged.any():
        return CategoricalDistribution.empty_over(catalog.vocabulary)
    return _mean_mass(catalog.vocabulary, rows[cataloged])


def _hellinger_arrays(p: np.ndarray, q: np.ndarray) -> float:
    h = float(np.sqrt(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2) / 2.0))
    return min(max(h, 0.0), 1.0)


def hellinger(p: CategoricalDistribution, q: CategoricalDistribution) -> float:
    """H(p, q) = ||sqrt(p) - sqrt(q)||_2 / sqrt(2), in [0, 1]."""
    if p.empty or q.empty:
        raise DataError("hellinger distance of an empty distribution")
    if p.labels != q.labels:
        raise DataError("distributions are over different vocabularies")
    return _hellinger_arrays(p.mass, q.mass)


def user_miscalibration(user_id, train: RatingsDataset, recs: RecommendationSet,
                        catalog: ItemCatalog) -> float:
    p = profile_distribution(user_id, train, catalog)
    q = recommendation_distribution(user_id, recs, catalog)
    if p.empty or q.empty:
        raise DataError(f"user {user_id!r} has no usable profile or list distribution")
    return hellinger(p, q)


def group_miscalibration(users, per_user_mc: dict) -> float:
    """Mean miscalibration over the group members present in per_user_mc."""
    vals = [per_user_mc[u] for u in users if u in per_user_mc]
    if not vals:
        raise DataError("group has no members with a miscalibration value")
    return float(sum(vals) / len(vals))


def _profile_avg_theta(train: RatingsDataset, popularity: ItemPopularity) -> np.ndarray:
    """Per-user mean theta over the training profile, indexed by user code."""
    theta_of_rating = popularity.theta[train.item_codes]
    counts = np.bincount(train.user_codes, minlength=train.n_users)
    sums = np.bincount(train.user_codes, weights=theta_of_rating,
                       minlength=train.n_users)
    return sums / counts


def gap_profile(group, train: RatingsDataset, popularity: ItemPopularity) -> float:
    """Mean over members of (mean theta over their training profile)."""
    if not group:
        raise DataError("empty group")
    by_code = _profile_avg_theta(train, popularity)
    total = 0.0
    for user in group:
        try:
            total += float(by_code[train.user_code(user)])
        except KeyError:
            raise DataError(f"user {user!r} has no training ratings") from None
    return total / len(group)


def gap_recs(group, recs: RecommendationSet, popularity: ItemPopularity) -> float:
    """Mean over members of (mean theta over their recommendation list)."""
    if not group:
        raise DataError("empty group")
    total = 0.0
    for user in group:
        items = recs.lists.get(user)
        if items is None or len(items) == 0:
            raise DataError(f"user {user!r} has no recommendation list")
        total += float(popularity.lookup(items).mean())
    return total / len(group)


def popularity_lift(gap_p: float, gap_q: float) -> float:
    """(GAP_q - GAP_p) / GAP_p; positive means amplification."""
    if gap_p <= 0:
        raise DataError("popularity lift is undefined for GAP_p = 0")
    return (gap_q - gap_p) / gap_p


def rated_vs_recommended(train: RatingsDataset, recs: RecommendationSet) -> pd.DataFrame:
    """Per-item scatter data: training rating count, recommendation count
    across all lists, and mean training rating."""
    times_rated = np.bincount(train.item_codes, minlength=train.n_items)
    sums = np.bincount(train.item_codes, weights=train.values,
                       minlength=train.n_items)
    times_rec = np.zeros(train.n_items, dtype=np.int64)
    for user, items in recs.lists.items():
        ids = np.asarray(items)
        pos = np.searchsorted(train.items, ids)
        pos_c = np.clip(pos, 0, train.n_items - 1)
        if not np.all(train.items[pos_c] == ids):
            bad = ids[train.items[pos_c] != ids][0]
            raise DataError(
                f"recommended item {bad!r} for user {user!r} is not a "
                f"training item")
        np.add.at(times_rec, pos_c, 1)
    return pd.DataFrame({
        "item_id": train.items,
        "times_rated": times_rated,
        "times_recommended": times_rec,
        "mean_rating": sums / times_rated,
    })


def kl_miscalibration(p: CategoricalDistribution, q: CategoricalDistribution,
                      epsilon: float = 1e-6) -> float:
    """Diagnostic KL(p || q~) with q~ = (1 - eps) q + eps * uniform, so zero
    cells in q stay finite. Reported alongside Hellinger, never in its place."""
    if epsilon <= 0:
        raise UsageError("epsilon must be > 0")
    if p.empty or q.empty:
        raise DataError("KL divergence of an empty distribution")
    if p.labels != q.labels:
        raise DataError("distributions are over different vocabularies")
    q_s = (1.0 - epsilon) * q.mass + epsilon / len(q.mass)
    live = p.mass > 0
    return float(np.sum(p.mass[live] * np.log(p.mass[live] / q_s[live])))


@dataclass(frozen=True)
class UserMetricRow:
    """Per-user audit values: Eq-level inputs for every aggregate."""

    user_id: object
    profile_avg_popularity: float
    rec_avg_popularity: float
    miscalibration: float

    @property
    def lift(self) -> float:
        return (self.rec_avg_popularity - self.profile_avg_popularity) \
            / self.profile_avg_popularity


def user_metrics(train: RatingsDataset, recs: RecommendationSet,
                 catalog: ItemCatalog, popularity: ItemPopularity):
    """Per-user rows for every user with a usable profile, list, and both
    genre distributions, plus exclusion counts for the rest.

    Users are processed in ascending id order so aggregation is bit-stable.
    """
    F, cataloged = catalog.feature_matrix(train.items)
    order, ptr = train.by_user()
    items_of = train.item_codes[order]
    prof_theta = _profile_avg_theta(train, popularity)

    rows = []
    exclusions = {"no_recommendation_list": 0, "no_cataloged_profile_items": 0,
                  "no_cataloged_recommended_items": 0}
    for ucode, user in enumerate(train.users.tolist()):
        items = recs.lists.get(user)
        if items is None or len(items) == 0:
            exclusions["no_recommendation_list"] += 1
            continue
        seg = items_of[ptr[ucode]:ptr[ucode + 1]]
        prof = seg[cataloged[seg]]
        if len(prof) == 0:
            exclusions["no_cataloged_profile_items"] += 1
            continue
        rcodes = np.searchsorted(train.items, np.asarray(items))
        rec = rcodes[cataloged[rcodes]]
        if len(rec) == 0:
            exclusions["no_cataloged_recommended_items"] += 1
            continue
        p = F[prof].mean(axis=0)
        p /= p.sum()
        q = F[rec].mean(axis=0)
        q /= q.sum()
        rows.append(UserMetricRow(
            user_id=user,
            profile_avg_popularity=float(prof_theta[ucode]),
            rec_avg_popularity=float(popularity.theta[rcodes].mean()),
            miscalibration=_hellinger_arrays(p, q)))
    return rows, exclusions


def write_user_metrics(rows, groups: dict, path) -> None:
    """CSV export; ``groups`` maps user id to cohort label (may be sparse)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "group", "profile_avg_pop", "rec_avg_pop",
                         "miscalibration"])
        for row in rows:
            writer.writerow([row.user_id, groups.get(row.user_id, ""),
                             repr(row.profile_avg_popularity),
                             repr(row.rec_avg_popularity),
                             repr(row.miscalibration)])


def read_user_metrics(path):
    """Inverse of :func:`write_user_metrics`: (rows, groups)."""
    rows, groups = [], {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            raw = rec["user_id"]
            try:
                user = int(raw)
            except ValueError:
                user = raw
            rows.append(UserMetricRow(user, float(rec["profile_avg_pop"]),
                                      float(rec["rec_avg_pop"]),
                                      float(rec["miscalibration"])))
            if rec["group"]:
                groups[user] = rec["group"]
    return rows, groups


def write_scatter(frame: pd.DataFrame, path) -> None:
    frame.to_csv(path, index=False)
