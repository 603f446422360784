"""Neighborhood recommenders: user-based and item-based collaborative filtering.

Similarities are cosine over (by default) mean-centered rating vectors with
optional shrinkage in the denominator; only the top-k positive similarities
per entity are kept. Predictions are similarity-weighted averages of
neighbor ratings, with the entity mean added back when centering is on.
(user, item) pairs with no neighborhood evidence fall back to the item's
training popularity, which ranks them below any real prediction.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix

from recaudit.dataset import RatingsDataset
from recaudit.recommend.base import AlgoConfig, TrainedModel


def topk_cosine(M, k: int, shrinkage: float = 0.0, block_size: int = 256):
    """Top-k cosine similarity between the rows of sparse matrix ``M``.

    sim(a, b) = <a, b> / (||a|| ||b|| + shrinkage). Self-similarities are
    excluded and only strictly positive similarities are kept; ties break
    toward the lower column index. Returns CSR of shape (rows, rows).
    """
    n = M.shape[0]
    k = min(k, n - 1)
    M = M.tocsr()
    norms = np.sqrt(np.asarray(M.multiply(M).sum(axis=1)).ravel())
    MT = M.T.tocsr()

    rows, cols, vals = [], [], []
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        dots = (M[start:stop] @ MT).toarray()
        denom = norms[start:stop, None] * norms[None, :] + shrinkage
        with np.errstate(divide="ignore", invalid="ignore"):
            sims = np.where(denom > 0, dots / np.where(denom > 0, denom, 1.0), 0.0)
        sims[np.arange(stop - start), np.arange(start, stop)] = 0.0
        for local in range(stop - start):
            row = sims[local]
            pos = np.flatnonzero(row > 0)
            if len(pos) > k:
                thr = np.partition(row[pos], len(pos) - k)[len(pos) - k]
                cand = pos[row[pos] >= thr]
                order = np.lexsort((cand, -row[cand]))[:k]
                pos = cand[order]
            if len(pos):
                rows.append(np.full(len(pos), start + local, dtype=np.int64))
                cols.append(pos.astype(np.int64))
                vals.append(row[pos])
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
    return csr_matrix((vals, (rows, cols)), shape=(n, n))


def _entity_means(codes: np.ndarray, values: np.ndarray, n: int) -> np.ndarray:
    counts = np.bincount(codes, minlength=n)
    sums = np.bincount(codes, weights=values, minlength=n)
    return np.divide(sums, counts, out=np.zeros(n), where=counts > 0)


class _KNNModel(TrainedModel):
    """Shared fit/score machinery; subclasses fix the similarity axis."""

    axis = ""  # "user" or "item"

    def __init__(self, train: RatingsDataset, config: AlgoConfig, W=None):
        super().__init__(train, config)
        n_axis = train.n_users if self.axis == "user" else train.n_items
        axis_codes = train.user_codes if self.axis == "user" else train.item_codes
        self.means_ = _entity_means(axis_codes, train.values, n_axis)
        self.popularity_ = np.bincount(train.item_codes, minlength=train.n_items) / train.n_users

        data = train.values - self.means_[axis_codes] if config.center else train.values
        self._Rc = csr_matrix((data, (train.user_codes, train.item_codes)),
                              shape=(train.n_users, train.n_items))
        self._B = csr_matrix((np.ones(train.n_ratings), (train.user_codes, train.item_codes)),
                             shape=(train.n_users, train.n_items))
        if W is None:
            basis = self._Rc if self.axis == "user" else self._Rc.T.tocsr()
            W = topk_cosine(basis, config.neighborhood_size, config.shrinkage)
        self.W_ = W.tocsr()

    def score_items(self, ucode: int) -> np.ndarray:
        return self.score_block(np.array([ucode]))[0]

    def score(self, user_id, item_id) -> float:
        icode = self.item_code(item_id)
        if icode is None:
            return 0.0
        ucode = self.user_code(user_id)
        if ucode is None:
            return float(self.popularity_[icode])
        return float(self.score_items(ucode)[icode])

    def _arrays(self) -> dict:
        return {"W_data": self.W_.data, "W_indices": self.W_.indices,
                "W_indptr": self.W_.indptr, "W_dim": np.array(self.W_.shape[0])}

    @classmethod
    def _from_arrays(cls, arrays, config, train):
        dim = int(arrays["W_dim"])
        W = csr_matrix((arrays["W_data"], arrays["W_indices"], arrays["W_indptr"]),
                       shape=(dim, dim))
        return cls(train, config, W=W)


class ItemKNNModel(_KNNModel):
    """Item-based KNN: score(u, i) = mean_i + sum_j w_ij (r_uj - mean_j) / sum_j |w_ij|
    over the user's rated items j in i's neighborhood."""

    algorithm = "ItemKNN"
    axis = "item"

    def score_block(self, ucodes: np.ndarray) -> np.ndarray:
        WT = self.W_.T.tocsr()
        num = np.asarray((self._Rc[ucodes] @ WT).todense())
        den = np.asarray((self._B[ucodes] @ WT).todense())
        base = self.means_[None, :] if self.config.center else 0.0
        pred = base + num / np.where(den > 0, den, 1.0)
        return np.where(den > 0, pred, self.popularity_[None, :])


class UserKNNModel(_KNNModel):
    """User-based KNN: score(u, i) = mean_u + sum_v w_uv (r_vi - mean_v) / sum_v |w_uv|
    over neighbors v of u who rated i."""

    algorithm = "UserKNN"
    axis = "user"

    def score_block(self, ucodes: np.ndarray) -> np.ndarray:
        Wu = self.W_[ucodes]
        num = np.asarray((Wu @ self._Rc).todense())
        den = np.asarray((Wu @ self._B).todense())
        base = self.means_[ucodes, None] if self.config.center else 0.0
        pred = base + num / np.where(den > 0, den, 1.0)
        return np.where(den > 0, pred, self.popularity_[None, :])
