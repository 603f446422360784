"""Top-n accuracy evaluation.

Precision@n over users who have both a recommendation list and at least one
test rating; the denominator is always n, even for short lists. Users with
no test ratings are excluded from the average and counted.
"""

from __future__ import annotations

from dataclasses import dataclass

from recaudit.dataset import RatingsDataset
from recaudit.errors import DataError
from recaudit.recommend.base import RecommendationSet


@dataclass(frozen=True)
class EvaluationResult:
    algorithm: str
    n: int
    precision: float
    per_user: dict
    n_evaluated: int
    n_excluded: int


def _relevant_sets(test: RatingsDataset, threshold: float | None) -> dict:
    relevant: dict = {}
    for u, i, v in zip(test.user_ids, test.item_ids, test.values):
        if threshold is None or v >= threshold:
            relevant.setdefault(u, set()).add(i)
    return relevant


def precision_at_n(recs: RecommendationSet, test: RatingsDataset,
                   threshold: float | None = None) -> EvaluationResult:
    """Mean fraction of each user's top-n list that appears in their test
    ratings (>= threshold when given). Raises when no user is evaluable."""
    relevant = _relevant_sets(test, threshold)
    test_users = set(test.user_ids)
    per_user = {}
    excluded = 0
    for user, items in recs.lists.items():
        if user not in test_users:
            excluded += 1
            continue
        hits = len(set(items) & relevant.get(user, set()))
        per_user[user] = hits / recs.n
    if not per_user:
        raise DataError("no users have both recommendations and test ratings")
    precision = sum(per_user.values()) / len(per_user)
    return EvaluationResult(algorithm=recs.algorithm, n=recs.n,
                            precision=precision, per_user=per_user,
                            n_evaluated=len(per_user), n_excluded=excluded)
