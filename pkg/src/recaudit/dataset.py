"""Rating-data ingestion: parsing, validation, filtering, and splitting.

File formats
------------
``movielens-1m``
    The published MovieLens 1M layout, bit-exact:
    ratings ``UserID::MovieID::Rating::Timestamp``, items
    ``MovieID::Title::Genre1|Genre2|...``, users
    ``UserID::Gender::Age::Occupation::Zip``.
``delimited-generic``
    A configurable flat file: caller-declared delimiter, column order, and
    rating scale. Covers e.g. the Yahoo Movies export without shipping it.

All produced objects are immutable after construction (numpy buffers are
frozen) and safe to share across threads.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from recaudit.errors import DataError, UsageError

MOVIELENS_1M = "movielens-1m"
DELIMITED_GENERIC = "delimited-generic"

FORMATS = (MOVIELENS_1M, DELIMITED_GENERIC)


def _coerce_ids(raw: list) -> np.ndarray:
    """Return ids as int64 when every id parses as an integer, else as str.

    Integer ids keep numeric ordering for the ascending-id tie-break;
    anything else falls back to lexicographic ordering.
    """
    try:
        return np.array([int(x) for x in raw], dtype=np.int64)
    except (ValueError, TypeError):
        return np.array([str(x) for x in raw])


def _id_bytes(arr: np.ndarray) -> bytes:
    if arr.dtype.kind in "iu":
        return arr.astype("<i8").tobytes()
    return "\x00".join(str(x) for x in arr).encode("utf-8")


class RatingsDataset:
    """User/item/rating triples with uniqueness and scale guarantees.

    Ratings are stored as parallel arrays in file order. ``users`` and
    ``items`` are the sorted unique id vocabularies; ``user_codes`` and
    ``item_codes`` are positions into them (the contiguous indices every
    model and metric works with).
    """

    def __init__(self, user_ids, item_ids, values, timestamps=None,
                 rating_scale=(1.0, 5.0)):
        values = np.asarray(values, dtype=np.float64)
        n = len(values)
        if n == 0:
            raise DataError("empty dataset")
        user_ids = np.asarray(user_ids)
        item_ids = np.asarray(item_ids)
        if len(user_ids) != n or len(item_ids) != n:
            raise DataError("user/item/value arrays have mismatched lengths")

        lo, hi = float(rating_scale[0]), float(rating_scale[1])
        if not lo <= hi:
            raise UsageError(f"invalid rating scale ({lo}, {hi})")
        if not np.all(np.isfinite(values)):
            raise DataError("non-finite rating value")
        if values.min() < lo or values.max() > hi:
            bad = int(np.argmax((values < lo) | (values > hi)))
            raise DataError(
                f"rating {values[bad]} outside scale [{lo}, {hi}] "
                f"for pair ({user_ids[bad]}, {item_ids[bad]})")

        self.users, self.user_codes = np.unique(user_ids, return_inverse=True)
        self.items, self.item_codes = np.unique(item_ids, return_inverse=True)
        self.user_ids = user_ids
        self.item_ids = item_ids
        self.values = values
        if timestamps is not None:
            timestamps = np.asarray(timestamps, dtype=np.int64)
            if len(timestamps) != n:
                raise DataError("timestamp array has mismatched length")
        self.timestamps = timestamps
        self.rating_scale = (lo, hi)

        keys = self.user_codes.astype(np.int64) * len(self.items) + self.item_codes
        uniq, counts = np.unique(keys, return_counts=True)
        if len(uniq) < n:
            key = uniq[np.argmax(counts > 1)]
            u = self.users[key // len(self.items)]
            i = self.items[key % len(self.items)]
            raise DataError(f"duplicate rating pair ({u}, {i})")

        for arr in (self.user_ids, self.item_ids, self.values, self.users,
                    self.items, self.user_codes, self.item_codes):
            arr.flags.writeable = False
        if self.timestamps is not None:
            self.timestamps.flags.writeable = False
        self._by_user = None
        self._fingerprint = None

    # -- basic shape ---------------------------------------------------

    @property
    def n_ratings(self) -> int:
        return len(self.values)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_items(self) -> int:
        return len(self.items)

    def __len__(self) -> int:
        return self.n_ratings

    def __repr__(self) -> str:
        return (f"RatingsDataset({self.n_ratings} ratings, "
                f"{self.n_users} users, {self.n_items} items)")

    # -- lookups -------------------------------------------------------

    def user_code(self, user_id) -> int:
        pos = np.searchsorted(self.users, user_id)
        if pos == self.n_users or self.users[pos] != user_id:
            raise KeyError(f"unknown user {user_id!r}")
        return int(pos)

    def item_code(self, item_id) -> int:
        pos = np.searchsorted(self.items, item_id)
        if pos == self.n_items or self.items[pos] != item_id:
            raise KeyError(f"unknown item {item_id!r}")
        return int(pos)

    def by_user(self):
        """Rating positions grouped by user.

        Returns ``(order, ptr)``: ``order[ptr[u]:ptr[u+1]]`` are the
        positions of user-code ``u``'s ratings, item codes ascending.
        """
        if self._by_user is None:
            order = np.lexsort((self.item_codes, self.user_codes))
            counts = np.bincount(self.user_codes, minlength=self.n_users)
            ptr = np.concatenate(([0], np.cumsum(counts)))
            order.flags.writeable = False
            ptr.flags.writeable = False
            self._by_user = (order, ptr)
        return self._by_user

    def profile_item_codes(self, ucode: int) -> np.ndarray:
        order, ptr = self.by_user()
        return self.item_codes[order[ptr[ucode]:ptr[ucode + 1]]]

    def csr(self):
        """Ratings as a scipy CSR matrix of shape (n_users, n_items)."""
        from scipy.sparse import csr_matrix
        return csr_matrix(
            (self.values, (self.user_codes, self.item_codes)),
            shape=(self.n_users, self.n_items))

    # -- derivation ----------------------------------------------------

    def select(self, mask: np.ndarray) -> "RatingsDataset":
        """New dataset from the ratings where ``mask`` is True."""
        ts = self.timestamps[mask] if self.timestamps is not None else None
        return RatingsDataset(self.user_ids[mask], self.item_ids[mask],
                              self.values[mask], ts, self.rating_scale)

    def equals(self, other: "RatingsDataset") -> bool:
        return (self.rating_scale == other.rating_scale
                and self.n_ratings == other.n_ratings
                and bool(np.all(self.user_ids == other.user_ids))
                and bool(np.all(self.item_ids == other.item_ids))
                and bool(np.all(self.values == other.values)))

    @property
    def fingerprint(self) -> str:
        """Order-independent SHA-256 over (user, item, value) and the scale."""
        if self._fingerprint is None:
            order = np.lexsort((self.item_codes, self.user_codes))
            h = hashlib.sha256()
            h.update(repr(self.rating_scale).encode())
            h.update(_id_bytes(self.users))
            h.update(_id_bytes(self.items))
            h.update(self.user_codes[order].astype("<i8").tobytes())
            h.update(self.item_codes[order].astype("<i8").tobytes())
            h.update(self.values[order].astype("<f8").tobytes())
            self._fingerprint = h.hexdigest()
        return self._fingerprint


@dataclass(frozen=True)
class ItemCatalog:
    """Item -> non-empty genre set, plus the global genre vocabulary."""

    features: dict
    vocabulary: tuple

    def __post_init__(self):
        union = set()
        for item, genres in self.features.items():
            if not genres:
                raise DataError(f"item {item!r} has no genres")
            union.update(genres)
        if tuple(sorted(union)) != self.vocabulary:
            raise DataError("vocabulary is not the union of per-item genre sets")

    @property
    def vocab_index(self) -> dict:
        return {label: j for j, label in enumerate(self.vocabulary)}

    def feature_matrix(self, item_ids) -> tuple[np.ndarray, np.ndarray]:
        """Rows of uniform genre mass (1/|genres|) for the given items.

        Returns ``(matrix, cataloged)`` where ``cataloged`` marks items
        present in the catalog; uncataloged rows are all-zero.
        """
        index = self.vocab_index
        mat = np.zeros((len(item_ids), len(self.vocabulary)))
        cataloged = np.zeros(len(item_ids), dtype=bool)
        for row, item in enumerate(item_ids):
            genres = self.features.get(item)
            if genres is None:
                # Integer-coded ids may arrive as numpy scalars.
                genres = self.features.get(item.item() if hasattr(item, "item") else item)
            if genres:
                cataloged[row] = True
                w = 1.0 / len(genres)
                for g in genres:
                    mat[row, index[g]] = w
        return mat, cataloged


@dataclass(frozen=True)
class UserDemographics:
    """Gender map with values in {M, F, unknown}."""

    gender: dict
    unknown_count: int = 0


@dataclass(frozen=True)
class TrainTestSplit:
    train: RatingsDataset
    test: RatingsDataset
    ratio: float
    seed: int | None
    assignment: np.ndarray  # True -> train, aligned with the source dataset

    def write_manifest(self, path) -> None:
        """Persist record index -> {train|test} so the split replays without the seed."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("record_index,partition\n")
            for idx, is_train in enumerate(self.assignment):
                fh.write(f"{idx},{'train' if is_train else 'test'}\n")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _check_format(format: str) -> None:
    if format not in FORMATS:
        raise UsageError(f"unknown format {format!r}; expected one of {FORMATS}")


def _read_lines(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if line:
                yield lineno, line


def parse_ratings(path, format: str = MOVIELENS_1M, *, delimiter: str = "\t",
                  columns=("user", "item", "rating", "timestamp"),
                  rating_scale=(1.0, 5.0)) -> RatingsDataset:
    """Parse a ratings file into a validated :class:`RatingsDataset`.

    ``delimiter``/``columns``/``rating_scale`` apply to the
    ``delimited-generic`` format only; ``columns`` names each field position
    and must include ``user``, ``item`` and ``rating`` (use ``-`` to skip a
    field; ``timestamp`` is optional and unused downstream).
    """
    _check_format(format)
    if format == MOVIELENS_1M:
        delimiter, columns, rating_scale = "::", ("user", "item", "rating", "timestamp"), (1.0, 5.0)
    for name in ("user", "item", "rating"):
        if name not in columns:
            raise UsageError(f"columns must include {name!r}")
    col = {name: i for i, name in enumerate(columns) if name != "-"}
    want_ts = "timestamp" in col
    n_fields = len(columns)

    users, items, values, stamps = [], [], [], []
    for lineno, line in _read_lines(path):
        fields = line.split(delimiter)
        if len(fields) < n_fields:
            raise DataError(f"{path}:{lineno}: expected {n_fields} fields, got {len(fields)}")
        try:
            values.append(float(fields[col["rating"]]))
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad rating {fields[col['rating']]!r}") from None
        if want_ts:
            try:
                stamps.append(int(fields[col["timestamp"]]))
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad timestamp {fields[col['timestamp']]!r}") from None
        users.append(fields[col["user"]])
        items.append(fields[col["item"]])

    if not values:
        raise DataError("empty dataset")
    return RatingsDataset(_coerce_ids(users), _coerce_ids(items),
                          np.array(values), np.array(stamps) if want_ts else None,
                          rating_scale)


def write_ratings(dataset: RatingsDataset, path, format: str = MOVIELENS_1M, *,
                  delimiter: str = "\t") -> None:
    """Serialize a dataset; ``parse_ratings`` of the result round-trips."""
    _check_format(format)
    sep = "::" if format == MOVIELENS_1M else delimiter
    ts = dataset.timestamps
    with open(path, "w", encoding="latin-1") as fh:
        for k in range(dataset.n_ratings):
            v = dataset.values[k]
            val = str(int(v)) if v == int(v) else repr(float(v))
            stamp = int(ts[k]) if ts is not None else 0
            fh.write(f"{dataset.user_ids[k]}{sep}{dataset.item_ids[k]}{sep}{val}{sep}{stamp}\n")


def parse_item_catalog(path, format: str = MOVIELENS_1M, *, delimiter: str = "\t",
                       genre_separator: str = "|", columns=("item", "genres")) -> ItemCatalog:
    """Parse item metadata into an :class:`ItemCatalog`.

    movielens-1m lines look like ``MovieID::Title::Genre1|Genre2``; the
    generic format takes a declared delimiter, column order, and genre
    separator.
    """
    _check_format(format)
    if format == MOVIELENS_1M:
        delimiter, columns = "::", ("item", "-", "genres")
    col = {name: i for i, name in enumerate(columns) if name != "-"}
    for name in ("item", "genres"):
        if name not in col:
            raise UsageError(f"columns must include {name!r}")

    features = {}
    for lineno, line in _read_lines(path):
        fields = line.split(delimiter)
        if len(fields) < len(columns):
            raise DataError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(fields)}")
        genres = frozenset(g for g in fields[col["genres"]].split(genre_separator) if g)
        if not genres:
            raise DataError(f"{path}:{lineno}: item {fields[col['item']]!r} has no genres")
        raw_item = fields[col["item"]]
        try:
            item = int(raw_item)
        except ValueError:
            item = raw_item
        if item in features:
            raise DataError(f"{path}:{lineno}: duplicate catalog entry for item {item!r}")
        features[item] = genres
    if not features:
        raise DataError("empty item catalog")

    vocabulary = tuple(sorted(set().union(*features.values())))
    return ItemCatalog(features, vocabulary)


def parse_demographics(path) -> UserDemographics:
    """Parse a movielens-1m users file (``UserID::Gender::Age::Occupation::Zip``).

    Unknown gender codes map to ``unknown`` and are tallied in
    ``unknown_count`` rather than failing the parse.
    """
    gender = {}
    unknown = 0
    for lineno, line in _read_lines(path):
        fields = line.split("::")
        if len(fields) < 2:
            raise DataError(f"{path}:{lineno}: expected UserID::Gender::...")
        try:
            user = int(fields[0])
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad user id {fields[0]!r}") from None
        code = fields[1]
        if code not in ("M", "F"):
            code = "unknown"
            unknown += 1
        gender[user] = code
    return UserDemographics(gender, unknown)


# ---------------------------------------------------------------------------
# Filtering and splitting
# ---------------------------------------------------------------------------

def core_filter(dataset: RatingsDataset, min_user_ratings: int,
                min_item_ratings: int) -> RatingsDataset:
    """Iteratively drop users/items below the thresholds until a fixed point.

    Removing a user can push an item below its threshold and vice versa, so
    the passes repeat until nothing changes; every surviving user and item
    then has at least its threshold of ratings.
    """
    if min_user_ratings < 1 or min_item_ratings < 1:
        raise UsageError("core filter thresholds must be >= 1")
    mask = np.ones(dataset.n_ratings, dtype=bool)
    while True:
        ucounts = np.bincount(dataset.user_codes[mask], minlength=dataset.n_users)
        icounts = np.bincount(dataset.item_codes[mask], minlength=dataset.n_items)
        keep = (mask
                & (ucounts[dataset.user_codes] >= min_user_ratings)
                & (icounts[dataset.item_codes] >= min_item_ratings))
        if keep.sum() == mask.sum():
            break
        mask = keep
    if not mask.any():
        raise DataError("filter removed all data")
    if mask.all():
        return dataset
    return dataset.select(mask)


def split(dataset: RatingsDataset, ratio: float, seed: int,
          stratified: bool = False) -> TrainTestSplit:
    """Random train/test split over rating records, deterministic given seed.

    ``stratified=True`` splits each user's records at the ratio instead of
    splitting globally (off by default; global record-level is the primary
    contract).
    """
    if not 0.0 < ratio < 1.0:
        raise UsageError(f"split ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    n = dataset.n_ratings
    assignment = np.zeros(n, dtype=bool)
    if stratified:
        order, ptr = dataset.by_user()
        for u in range(dataset.n_users):
            rows = order[ptr[u]:ptr[u + 1]]
            k = int(round(ratio * len(rows)))
            assignment[rng.permutation(rows)[:k]] = True
    else:
        k = int(round(ratio * n))
        assignment[rng.permutation(n)[:k]] = True
    if not assignment.any() or assignment.all():
        raise DataError("split produced an empty partition")
    return TrainTestSplit(train=dataset.select(assignment),
                          test=dataset.select(~assignment),
                          ratio=ratio, seed=seed, assignment=assignment)


def apply_manifest(dataset: RatingsDataset, path) -> TrainTestSplit:
    """Replay a persisted split manifest against the same dataset."""
    assignment = np.zeros(dataset.n_ratings, dtype=bool)
    seen = 0
    for lineno, line in _read_lines(path):
        if lineno == 1 and line.startswith("record_index"):
            continue
        idx_s, _, part = line.partition(",")
        try:
            idx = int(idx_s)
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad record index {idx_s!r}") from None
        if part not in ("train", "test"):
            raise DataError(f"{path}:{lineno}: bad partition {part!r}")
        if not 0 <= idx < dataset.n_ratings:
            raise DataError(f"{path}:{lineno}: record index {idx} out of range")
        assignment[idx] = part == "train"
        seen += 1
    if seen != dataset.n_ratings:
        raise DataError(f"manifest covers {seen} records, dataset has {dataset.n_ratings}")
    ratio = assignment.mean()
    return TrainTestSplit(train=dataset.select(assignment),
                          test=dataset.select(~assignment),
                          ratio=float(ratio), seed=None, assignment=assignment)
