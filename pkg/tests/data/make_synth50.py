"""Regenerate the synth50 fixture (deterministic; the outputs are committed).

    python tests/data/make_synth50.py

50 users, 40 items, 6 genres. Item draws follow a squared-rank weighting so
popularity is skewed like real rating data; users 5k (k=1..16) are coded F.
"""

import os

import numpy as np

HERE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "synth50")
N_USERS, N_ITEMS = 50, 40
GENRES = ["Action", "Comedy", "Documentary", "Drama", "Horror", "Romance"]


def main() -> None:
    os.makedirs(HERE, exist_ok=True)
    rng = np.random.default_rng(20240501)

    movie_lines = []
    for i in range(1, N_ITEMS + 1):
        k = int(rng.integers(1, 4))
        gs = sorted(rng.choice(GENRES, size=k, replace=False))
        movie_lines.append(f"{i}::Synthetic Movie {i} (2001)::{'|'.join(gs)}")

    # skewed item attractiveness: a few head items, a long tail
    ranks = np.arange(1, N_ITEMS + 1, dtype=float)
    weights = 1.0 / ranks**1.2
    weights /= weights.sum()
    item_order = rng.permutation(N_ITEMS)  # decouple id from popularity

    rating_lines = []
    for u in range(1, N_USERS + 1):
        size = int(rng.integers(15, 26))
        chosen = rng.choice(N_ITEMS, size=size, replace=False, p=weights)
        for pos in np.sort(chosen):
            item = int(item_order[pos]) + 1
            noise = rng.normal(0.0, 1.0)
            base = 3.5 + 0.8 * weights[pos] * N_ITEMS / 4.0
            r = int(np.clip(round(base + noise), 1, 5))
            stamp = 978300000 + u * 1000 + int(pos)
            rating_lines.append(f"{u}::{item}::{r}::{stamp}")

    user_lines = []
    for u in range(1, N_USERS + 1):
        g = "F" if u % 5 == 0 or u % 7 == 0 else "M"
        age = int(rng.choice([18, 25, 35, 45, 50]))
        user_lines.append(f"{u}::{g}::{age}::{int(rng.integers(0, 21))}::55414")

    for name, lines in (("ratings.dat", rating_lines),
                        ("movies.dat", movie_lines),
                        ("users.dat", user_lines)):
        with open(os.path.join(HERE, name), "w", encoding="latin-1") as fh:
            fh.write("\n".join(lines) + "\n")
    print(f"wrote {len(rating_lines)} ratings, {len(movie_lines)} movies, "
          f"{len(user_lines)} users to {HERE}")


if __name__ == "__main__":
    main()
