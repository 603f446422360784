"""Shared recommender machinery: configs, trained-model base, top-N selection,
recommendation sets, and model persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from recaudit.dataset import RatingsDataset
from recaudit.errors import DataError, UsageError

ALGORITHMS = ("UserKNN", "ItemKNN", "BMF", "SVDpp", "MostPopular")
_CANONICAL = {name.lower(): name for name in ALGORITHMS}
_MODEL_FORMAT_VERSION = 1


def canonical_algorithm(name: str) -> str:
    try:
        return _CANONICAL[name.lower().replace("-", "").replace("_", "").replace("+", "p")]
    except KeyError:
        raise UsageError(f"unknown algorithm {name!r}; expected one of {ALGORITHMS}") from None


@dataclass(frozen=True)
class AlgoConfig:
    """Hyperparameters for one algorithm run.

    KNN models read ``neighborhood_size``, ``similarity``, ``center`` and
    ``shrinkage``; factorization models read ``factors``, ``learning_rate``,
    ``regularization`` and ``epochs``; MostPopular reads nothing but the seed
    and list size.
    """

    algorithm: str
    neighborhood_size: int = 50
    similarity: str = "cosine"  # cosine | pearson (pearson forces centering)
    center: bool = True
    shrinkage: float = 0.0
    factors: int = 50
    learning_rate: float = 0.005
    regularization: float = 0.02
    epochs: int = 20
    seed: int = 0
    list_size: int = 10

    def __post_init__(self):
        object.__setattr__(self, "algorithm", canonical_algorithm(self.algorithm))
        if self.similarity not in ("cosine", "pearson"):
            raise UsageError(f"similarity must be cosine or pearson, got {self.similarity!r}")
        if self.similarity == "pearson":
            object.__setattr__(self, "center", True)
        for name in ("neighborhood_size", "factors", "learning_rate",
                     "regularization", "epochs"):
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be strictly positive")
        if self.shrinkage < 0:
            raise UsageError("shrinkage must be >= 0")
        if self.list_size < 1:
            raise UsageError("list_size must be >= 1")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "AlgoConfig":
        return cls(**json.loads(text))

    def with_overrides(self, **kwargs) -> "AlgoConfig":
        return replace(self, **kwargs)


class TrainedModel:
    """Base for trained recommenders.

    Subclasses score any (user, item) pair from the training vocabulary
    deterministically, and expose vectorized scoring over the item axis for
    top-N generation. ``fingerprint`` ties the model to its training data.
    """

    algorithm: str = ""

    def __init__(self, train: RatingsDataset, config: AlgoConfig):
        self.config = config
        self.fingerprint = train.fingerprint
        self.users = train.users
        self.items = train.items
        self.n_users = train.n_users
        self.n_items = train.n_items

    def user_code(self, user_id):
        pos = np.searchsorted(self.users, user_id)
        if pos < self.n_users and self.users[pos] == user_id:
            return int(pos)
        return None

    def item_code(self, item_id):
        pos = np.searchsorted(self.items, item_id)
        if pos < self.n_items and self.items[pos] == item_id:
            return int(pos)
        return None

    # -- scoring, to be provided by subclasses ---------------------------

    def score_items(self, ucode: int) -> np.ndarray:
        """Scores for every training item for one user code."""
        raise NotImplementedError

    def score_block(self, ucodes: np.ndarray) -> np.ndarray:
        """Scores for a block of user codes, shape (len(ucodes), n_items)."""
        return np.vstack([self.score_items(int(u)) for u in ucodes])

    def score(self, user_id, item_id) -> float:
        """Score one (user, item) pair by raw ids (cold fallback per model)."""
        raise NotImplementedError

    # -- persistence ------------------------------------------------------

    def _arrays(self) -> dict:
        raise NotImplementedError

    @classmethod
    def _from_arrays(cls, arrays: dict, config: AlgoConfig, train: RatingsDataset):
        raise NotImplementedError


class RecommendationSet:
    """Per-user ordered top-N lists from one trained model.

    ``lists`` maps user id -> item ids ordered by descending score with the
    ascending-id tie-break; ``scores`` holds the matching score arrays.
    Users whose candidate pool ran out before N items are in
    ``short_list_users``.
    """

    def __init__(self, lists: dict, scores: dict, n: int, fingerprint: str,
                 algorithm: str, short_list_users=frozenset()):
        self.lists = lists
        self.scores = scores
        self.n = n
        self.fingerprint = fingerprint
        self.algorithm = algorithm
        self.short_list_users = frozenset(short_list_users)

    @property
    def user_ids(self) -> list:
        return list(self.lists.keys())

    def __len__(self) -> int:
        return len(self.lists)

    def items_for(self, user_id) -> np.ndarray:
        return self.lists[user_id]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("user_id,rank,item_id,score\n")
            for user, items in self.lists.items():
                scores = self.scores[user]
                for rank, (item, s) in enumerate(zip(items, scores), start=1):
                    # repr of a Python float round-trips exactly
                    fh.write(f"{user},{rank},{item},{float(s)!r}\n")

    @classmethod
    def from_csv(cls, path, n: int, fingerprint: str = "", algorithm: str = ""):
        lists, scores = {}, {}
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "user_id,rank,item_id,score":
                raise DataError(f"{path}: unexpected header {header!r}")
            for line in fh:
                user_s, _, item_s, score_s = line.rstrip("\n").split(",")
                user = int(user_s) if user_s.lstrip("-").isdigit() else user_s
                item = int(item_s) if item_s.lstrip("-").isdigit() else item_s
                lists.setdefault(user, []).append(item)
                scores.setdefault(user, []).append(float(score_s))
        lists = {u: np.array(v) for u, v in lists.items()}
        scores = {u: np.array(v) for u, v in scores.items()}
        short = frozenset(u for u, v in lists.items() if len(v) < n)
        return cls(lists, scores, n, fingerprint, algorithm, short)


def top_n_codes(scores: np.ndarray, exclude_codes: np.ndarray, n: int):
    """Select the n highest-scoring item codes outside ``exclude_codes``.

    Descending score; ties broken by ascending code (== ascending item id,
    the item vocabulary being sorted). Returns (codes, scores).
    """
    s = scores.astype(np.float64, copy=True)
    if len(exclude_codes):
        s[exclude_codes] = -np.inf
    eligible = len(s) - len(exclude_codes)
    take = min(n, eligible)
    if take <= 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    threshold = np.partition(s, len(s) - take)[len(s) - take]
    cand = np.flatnonzero(s >= threshold)
    order = np.lexsort((cand, -s[cand]))[:take]
    chosen = cand[order]
    return chosen.astype(np.int64), scores[chosen]


def recommend_top_n(model: TrainedModel, train: RatingsDataset, user_id,
                    n: int) -> np.ndarray:
    """The n highest-scoring items the user has not rated in training.

    Returns fewer than n ids when the candidate pool is exhausted (the
    short-list case); callers can compare against n or use
    :func:`recommend_all`, which flags short lists.
    """
    if n < 1:
        raise UsageError("n must be >= 1")
    ucode = model.user_code(user_id)
    if ucode is None:
        raise DataError(f"user {user_id!r} not in training data")
    profile = train.profile_item_codes(ucode)
    codes, _ = top_n_codes(model.score_items(ucode), profile, n)
    return model.items[codes]


def recommend_all(model: TrainedModel, train: RatingsDataset, n: int,
                  block_size: int = 512) -> RecommendationSet:
    """Top-N lists for every training user, in ascending user-id order."""
    if train.fingerprint != model.fingerprint:
        raise DataError("model fingerprint does not match the supplied training data")
    order, ptr = train.by_user()
    lists, scores, short = {}, {}, set()
    for start in range(0, train.n_users, block_size):
        ucodes = np.arange(start, min(start + block_size, train.n_users))
        block = model.score_block(ucodes)
        for row, u in enumerate(ucodes):
            profile = train.item_codes[order[ptr[u]:ptr[u + 1]]]
            codes, s = top_n_codes(block[row], profile, n)
            user = train.users[u]
            user = user.item() if hasattr(user, "item") else user
            lists[user] = train.items[codes]
            scores[user] = s
            if len(codes) < n:
                short.add(user)
    return RecommendationSet(lists, scores, n, model.fingerprint,
                             model.algorithm, short)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_model(model: TrainedModel, path) -> None:
    """Versioned binary dump carrying the training-data fingerprint."""
    payload = {k: np.asarray(v) for k, v in model._arrays().items()}
    np.savez_compressed(
        path,
        format_version=np.array(_MODEL_FORMAT_VERSION),
        algorithm=np.array(model.algorithm),
        fingerprint=np.array(model.fingerprint),
        config=np.array(model.config.to_json()),
        **payload)


def load_model(path, train: RatingsDataset) -> TrainedModel:
    """Load a model dump; a fingerprint mismatch with ``train`` is an error."""
    from recaudit.recommend import MODEL_CLASSES

    with np.load(path, allow_pickle=False) as npz:
        version = int(npz["format_version"])
        if version != _MODEL_FORMAT_VERSION:
            raise DataError(f"{path}: unsupported model format version {version}")
        fingerprint = str(npz["fingerprint"])
        if fingerprint != train.fingerprint:
            raise DataError(
                f"{path}: model was trained on different data "
                f"(fingerprint {fingerprint[:12]}..., dataset {train.fingerprint[:12]}...)")
        algorithm = str(npz["algorithm"])
        config = AlgoConfig.from_json(str(npz["config"]))
        arrays = {k: npz[k] for k in npz.files
                  if k not in ("format_version", "algorithm", "fingerprint", "config")}
    cls = MODEL_CLASSES[algorithm]
    return cls._from_arrays(arrays, config, train)
