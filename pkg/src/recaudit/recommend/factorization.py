"""Latent-factor recommenders trained by SGD.

``BiasedMFModel`` predicts mu + b_u + b_i + p_u . q_i. ``SVDPlusPlusModel``
adds an implicit term: q_i . (p_u + |I_u|^-1/2 sum_{j in I_u} y_j). Both run
their epoch loops through a kernel backend (compiled extension when built,
pure Python otherwise); all randomness stays in this driver so the two
backends see identical shuffles and produce identical parameters.
"""

from __future__ import annotations

import numpy as np

from recaudit.dataset import RatingsDataset
from recaudit.errors import NumericalError
from recaudit.kernels import get_backend
from recaudit.recommend.base import AlgoConfig, TrainedModel

_RMSE_CHUNK = 200_000


def _pair_rmse(mu, bu, bi, P_eff, Q, uc, ic, vals) -> float:
    """RMSE of mu + b_u + b_i + P_eff[u] . Q[i] over the given pairs, chunked
    so the factor gathers stay small."""
    total = 0.0
    n = len(vals)
    for start in range(0, n, _RMSE_CHUNK):
        sl = slice(start, min(start + _RMSE_CHUNK, n))
        u, i = uc[sl], ic[sl]
        pred = mu + bu[u] + bi[i] + np.einsum("ij,ij->i", P_eff[u], Q[i])
        diff = vals[sl] - pred
        total += float(diff @ diff)
    return float(np.sqrt(total / n))


def _check_finite(rmse: float, epoch: int, config: AlgoConfig) -> None:
    if not np.isfinite(rmse):
        raise NumericalError(
            f"{config.algorithm} training diverged at epoch {epoch} "
            f"(non-finite loss); reduce learning_rate={config.learning_rate}")


class BiasedMFModel(TrainedModel):
    """Biased matrix factorization fit by per-rating SGD."""

    algorithm = "BMF"

    def __init__(self, train: RatingsDataset, config: AlgoConfig,
                 params: dict | None = None, backend: str | None = None):
        super().__init__(train, config)
        if params is None:
            params = self._fit(train, config, backend)
        self.mu_ = float(params["mu"])
        self.bu_ = params["bu"]
        self.bi_ = params["bi"]
        self.P_ = params["P"]
        self.Q_ = params["Q"]
        self.loss_curve_ = tuple(float(x) for x in params["loss_curve"])

    @staticmethod
    def _fit(train, config, backend):
        rng = np.random.default_rng(config.seed)
        f = config.factors
        P = rng.normal(0.0, 0.1, (train.n_users, f))
        Q = rng.normal(0.0, 0.1, (train.n_items, f))
        bu = np.zeros(train.n_users)
        bi = np.zeros(train.n_items)
        mu = float(train.values.mean())
        uc = train.user_codes.astype(np.int64)
        ic = train.item_codes.astype(np.int64)
        vals = train.values.copy()

        kernel, _ = get_backend(backend)
        curve = []
        for epoch in range(1, config.epochs + 1):
            order = rng.permutation(train.n_ratings).astype(np.int64)
            kernel.bmf_epoch(uc, ic, vals, order, P, Q, bu, bi, mu,
                             config.learning_rate, config.regularization)
            rmse = _pair_rmse(mu, bu, bi, P, Q, uc, ic, vals)
            _check_finite(rmse, epoch, config)
            curve.append(rmse)
        return {"mu": mu, "bu": bu, "bi": bi, "P": P, "Q": Q, "loss_curve": curve}

    def score_items(self, ucode: int) -> np.ndarray:
        return self.mu_ + self.bu_[ucode] + self.bi_ + self.Q_ @ self.P_[ucode]

    def score_block(self, ucodes: np.ndarray) -> np.ndarray:
        return (self.mu_ + self.bu_[ucodes, None] + self.bi_[None, :]
                + self.P_[ucodes] @ self.Q_.T)

    def score(self, user_id, item_id) -> float:
        ucode = self.user_code(user_id)
        icode = self.item_code(item_id)
        pred = self.mu_
        if ucode is not None:
            pred += self.bu_[ucode]
        if icode is not None:
            pred += self.bi_[icode]
        if ucode is not None and icode is not None:
            pred += float(self.P_[ucode] @ self.Q_[icode])
        return float(pred)

    def _arrays(self) -> dict:
        return {"mu": np.array(self.mu_), "bu": self.bu_, "bi": self.bi_,
                "P": self.P_, "Q": self.Q_,
                "loss_curve": np.array(self.loss_curve_)}

    @classmethod
    def _from_arrays(cls, arrays, config, train):
        return cls(train, config, params=dict(arrays))


def _implicit_profiles(Y, items_by_user, uptr, inv_sqrt, chunk_users=1024):
    """|I_u|^-1/2 * sum_{j in I_u} y_j for every user, chunked over users."""
    n_users = len(uptr) - 1
    out = np.zeros((n_users, Y.shape[1]))
    for start in range(0, n_users, chunk_users):
        stop = min(start + chunk_users, n_users)
        a, b = uptr[start], uptr[stop]
        seg = Y[items_by_user[a:b]]
        bounds = (uptr[start:stop] - a).astype(np.intp)
        out[start:stop] = np.add.reduceat(seg, bounds, axis=0)
    out *= inv_sqrt[:, None]
    return out


class SVDPlusPlusModel(TrainedModel):
    """SVD++ fit by SGD, visiting ratings grouped by user so the implicit
    profile is refreshed once per user per epoch."""

    algorithm = "SVDpp"

    def __init__(self, train: RatingsDataset, config: AlgoConfig,
                 params: dict | None = None, backend: str | None = None):
        super().__init__(train, config)
        if params is None:
            params = self._fit(train, config, backend)
        self.mu_ = float(params["mu"])
        self.bu_ = params["bu"]
        self.bi_ = params["bi"]
        self.P_ = params["P"]
        self.Q_ = params["Q"]
        self.Y_ = params["Y"]
        self.implicit_ = params["implicit"]
        self.loss_curve_ = tuple(float(x) for x in params["loss_curve"])

    @staticmethod
    def _fit(train, config, backend):
        rng = np.random.default_rng(config.seed)
        f = config.factors
        P = rng.normal(0.0, 0.1, (train.n_users, f))
        Q = rng.normal(0.0, 0.1, (train.n_items, f))
        Y = rng.normal(0.0, 0.1, (train.n_items, f))
        bu = np.zeros(train.n_users)
        bi = np.zeros(train.n_items)
        mu = float(train.values.mean())

        order, ptr = train.by_user()
        items_by_user = train.item_codes[order].astype(np.int64)
        vals_by_user = train.values[order].copy()
        uptr = ptr.astype(np.int64)
        counts = np.diff(ptr)
        inv_sqrt = 1.0 / np.sqrt(counts)
        uc = train.user_codes.astype(np.int64)
        ic = train.item_codes.astype(np.int64)

        kernel, _ = get_backend(backend)
        curve = []
        for epoch in range(1, config.epochs + 1):
            user_order = rng.permutation(train.n_users).astype(np.int64)
            kernel.svdpp_epoch(items_by_user, vals_by_user, uptr, user_order,
                               P, Q, Y, bu, bi, mu,
                               config.learning_rate, config.regularization)
            implicit = _implicit_profiles(Y, items_by_user, uptr, inv_sqrt)
            rmse = _pair_rmse(mu, bu, bi, P + implicit, Q, uc, ic, train.values)
            _check_finite(rmse, epoch, config)
            curve.append(rmse)
        implicit = _implicit_profiles(Y, items_by_user, uptr, inv_sqrt)
        return {"mu": mu, "bu": bu, "bi": bi, "P": P, "Q": Q, "Y": Y,
                "implicit": implicit, "loss_curve": curve}

    def score_items(self, ucode: int) -> np.ndarray:
        p_eff = self.P_[ucode] + self.implicit_[ucode]
        return self.mu_ + self.bu_[ucode] + self.bi_ + self.Q_ @ p_eff

    def score_block(self, ucodes: np.ndarray) -> np.ndarray:
        P_eff = self.P_[ucodes] + self.implicit_[ucodes]
        return (self.mu_ + self.bu_[ucodes, None] + self.bi_[None, :]
                + P_eff @ self.Q_.T)

    def score(self, user_id, item_id) -> float:
        ucode = self.user_code(user_id)
        icode = self.item_code(item_id)
        pred = self.mu_
        if ucode is not None:
            pred += self.bu_[ucode]
        if icode is not None:
            pred += self.bi_[icode]
        if ucode is not None and icode is not None:
            pred += float((self.P_[ucode] + self.implicit_[ucode]) @ self.Q_[icode])
        return float(pred)

    def _arrays(self) -> dict:
        return {"mu": np.array(self.mu_), "bu": self.bu_, "bi": self.bi_,
                "P": self.P_, "Q": self.Q_, "Y": self.Y_,
                "implicit": self.implicit_,
                "loss_curve": np.array(self.loss_curve_)}

    @classmethod
    def _from_arrays(cls, arrays, config, train):
        return cls(train, config, params=dict(arrays))
