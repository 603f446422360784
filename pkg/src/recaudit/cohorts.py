"""User cohorts for group-level analysis.

Users are partitioned by the average training popularity of their profile
into n ordered groups (G1 lowest ... Gn highest), or by gender. Group
assignment uses training data only.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from recaudit.dataset import RatingsDataset, UserDemographics
from recaudit.errors import DataError, UsageError
from recaudit.metrics import ItemPopularity, _profile_avg_theta

log = logging.getLogger(__name__)

GROUPING_SCHEMES = ("equal-width", "equal-count")


@dataclass(frozen=True)
class Cohort:
    label: str
    members: frozenset
    mean_profile_popularity: float

    def __len__(self) -> int:
        return len(self.members)

    def sorted_members(self) -> list:
        return sorted(self.members)


def profile_avg_popularity(user_id, train: RatingsDataset,
                           popularity: ItemPopularity) -> float:
    """Mean theta over the user's training profile."""
    try:
        ucode = train.user_code(user_id)
    except KeyError:
        raise DataError(f"user {user_id!r} has no training ratings") from None
    return float(_profile_avg_theta(train, popularity)[ucode])


def _cohort(label: str, members, scores: dict | None) -> Cohort:
    members = frozenset(members)
    if scores and members:
        mean = sum(scores[u] for u in members) / len(members)
    else:
        mean = math.nan
    return Cohort(label, members, float(mean))


def group_by_popularity(users, scores: dict, n_groups: int = 10,
                        scheme: str = "equal-width") -> list:
    """Partition users into n cohorts by their profile-popularity score.

    equal-width slices [min, max] into n same-width intervals (last one
    closed); equal-count splits the score-sorted users into n contiguous
    blocks, keeping tied scores together in the lower block. Labels G1..Gn
    are ordered by ascending mean score either way.
    """
    if n_groups < 2:
        raise UsageError("n_groups must be at least 2")
    if scheme not in GROUPING_SCHEMES:
        raise UsageError(f"unknown grouping scheme {scheme!r}; "
                         f"expected one of {GROUPING_SCHEMES}")
    users = sorted(users)
    if not users:
        raise DataError("empty user set")
    missing = [u for u in users if u not in scores]
    if missing:
        raise DataError(f"user {missing[0]!r} has no popularity score")
    vals = np.array([scores[u] for u in users], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise DataError("popularity scores must be finite")

    buckets: list = [[] for _ in range(n_groups)]
    if scheme == "equal-width":
        lo, hi = float(vals.min()), float(vals.max())
        width = (hi - lo) / n_groups
        if width == 0:
            idx = np.zeros(len(users), dtype=int)
        else:
            idx = np.minimum(((vals - lo) / width).astype(int), n_groups - 1)
        for user, g in zip(users, idx):
            buckets[g].append(user)
    else:
        order = np.lexsort((np.arange(len(users)), vals))
        sorted_vals = vals[order]
        n = len(users)
        bounds = [0]
        for g in range(1, n_groups):
            b = g * n // n_groups
            while 0 < b < n and sorted_vals[b] == sorted_vals[b - 1]:
                b += 1  # ties stay with the lower block
            bounds.append(max(b, bounds[-1]))
        bounds.append(n)
        for g in range(n_groups):
            buckets[g] = [users[j] for j in order[bounds[g]:bounds[g + 1]]]

    if any(len(b) == 0 for b in buckets):
        log.warning("grouping produced %d empty cohorts (fewer distinct "
                    "scores than groups?)", sum(1 for b in buckets if not b))
    cohorts = [_cohort(f"G{g + 1}", members, scores)
               for g, members in enumerate(buckets)]
    return cohorts


def group_by_gender(users, demographics: UserDemographics,
                    scores: dict | None = None) -> list:
    """Cohorts {women, men}; users with unknown gender land in neither."""
    women, men = [], []
    for user in sorted(users):
        code = demographics.gender.get(user, "unknown")
        if code == "F":
            women.append(user)
        elif code == "M":
            men.append(user)
    if not women and not men:
        log.warning("no demographics rows matched the user set")
    return [_cohort("women", women, scores), _cohort("men", men, scores)]


def cohort_labels(cohorts) -> dict:
    """user id -> cohort label, for metric exports."""
    out = {}
    for cohort in cohorts:
        for user in cohort.members:
            out[user] = cohort.label
    return out


def write_cohorts(partitions: dict, path) -> None:
    """CSV export of one or more partitions: {partition_name: [Cohort, ...]}."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "partition", "label"])
        for partition in sorted(partitions):
            for cohort in partitions[partition]:
                for user in cohort.sorted_members():
                    writer.writerow([user, partition, cohort.label])


def read_cohorts(path) -> dict:
    """Inverse of :func:`write_cohorts`; cohort means are not persisted."""
    grouped: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            raw = rec["user_id"]
            try:
                user = int(raw)
            except ValueError:
                user = raw
            grouped.setdefault(rec["partition"], {}) \
                   .setdefault(rec["label"], []).append(user)
    def order(label: str):
        # G2 before G10; non-G labels keep write order via a stable fallback
        if label.startswith("G") and label[1:].isdigit():
            return (0, int(label[1:]), label)
        return (1, 0, "")

    return {partition: [_cohort(label, members, None)
                        for label, members in
                        sorted(labels.items(), key=lambda kv: order(kv[0]))]
            for partition, labels in grouped.items()}
