import os

import numpy as np
import pytest

from recaudit.config import parse_config
from recaudit.dataset import ItemCatalog, RatingsDataset
from recaudit.recommend import RecommendationSet

SYNTH50 = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data", "synth50")

# Paths for the optional full-scale dataset: RECAUDIT_ML1M or <repo>/data/ml-1m.
ML1M_DIR = os.environ.get(
    "RECAUDIT_ML1M",
    os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                 "data", "ml-1m"))


def ml1m_available() -> bool:
    return all(os.path.exists(os.path.join(ML1M_DIR, name))
               for name in ("ratings.dat", "movies.dat", "users.dat"))


def synth50_config_text(output_dir, algorithms="MostPopular", n_groups=5,
                        seed=13, extra="") -> str:
    return (
        "schema_version = 1\n"
        f"ratings = {os.path.join(SYNTH50, 'ratings.dat')}\n"
        f"items = {os.path.join(SYNTH50, 'movies.dat')}\n"
        f"demographics = {os.path.join(SYNTH50, 'users.dat')}\n"
        "format = movielens-1m\n"
        "split_ratio = 0.8\n"
        f"seed = {seed}\n"
        f"algorithms = {algorithms}\n"
        f"n_groups = {n_groups}\n"
        f"output_dir = {output_dir}\n"
        + extra)


@pytest.fixture
def synth50_config(tmp_path):
    """Parsed config for a MostPopular-only run on the bundled fixture."""
    cfg_path = tmp_path / "exp.cfg"
    cfg_path.write_text(synth50_config_text(tmp_path / "out"))
    return parse_config(cfg_path)


@pytest.fixture
def synth50_config_factory(tmp_path):
    def make(algorithms="MostPopular", **kwargs):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(synth50_config_text(tmp_path / "out",
                                                algorithms=algorithms,
                                                **kwargs))
        return parse_config(cfg_path)
    return make


def _tiny_world(n_users=20, n_items=30, seed=99):
    """Small skewed rating world plus random top-10 lists, in both package
    objects and the plain structures the oracle consumes."""
    rng = np.random.default_rng(seed)
    genre_pool = ["Action", "Comedy", "Drama", "Horror", "Romance", "SciFi"]
    genres_by_item = {}
    for i in range(1, n_items + 1):
        k = int(rng.integers(1, 4))
        genres_by_item[i] = frozenset(rng.choice(genre_pool, size=k,
                                                 replace=False).tolist())
    vocab = tuple(sorted(set().union(*genres_by_item.values())))

    weights = 1.0 / np.arange(1, n_items + 1) ** 1.1
    weights /= weights.sum()
    rows = []
    for u in range(1, n_users + 1):
        size = int(rng.integers(6, 15))
        chosen = rng.choice(np.arange(1, n_items + 1), size=size,
                            replace=False, p=weights)
        for i in sorted(int(x) for x in chosen):
            rows.append((u, i, float(rng.integers(1, 6))))

    train = RatingsDataset(
        np.array([r[0] for r in rows]),
        np.array([r[1] for r in rows]),
        np.array([r[2] for r in rows]))
    catalog = ItemCatalog(genres_by_item, vocab)

    rated = {}
    for u, i, _r in rows:
        rated.setdefault(u, set()).add(i)
    # draw lists from items somebody rated, like a real recommender would
    trained_items = sorted(set(i for _u, i, _r in rows))
    lists, scores = {}, {}
    for u in range(1, n_users + 1):
        pool = [i for i in trained_items if i not in rated[u]]
        picked = rng.choice(pool, size=10, replace=False)
        lists[u] = np.sort(picked)
        scores[u] = np.linspace(1.0, 0.1, 10)
    recs = RecommendationSet(lists, scores, 10, train.fingerprint, "fixture")

    return {"rows": rows, "train": train, "catalog": catalog,
            "genres_by_item": genres_by_item, "vocab": vocab,
            "lists": {u: [int(i) for i in lst] for u, lst in lists.items()},
            "recs": recs, "users": list(range(1, n_users + 1))}


@pytest.fixture(scope="session")
def tiny_world():
    return _tiny_world()
