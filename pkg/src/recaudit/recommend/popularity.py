"""Non-personalized most-popular baseline."""

from __future__ import annotations

import numpy as np

from recaudit.dataset import RatingsDataset
from recaudit.recommend.base import AlgoConfig, TrainedModel


class MostPopularModel(TrainedModel):
    """Ranks every item by the fraction of training users who rated it.

    The score is identical for all users; lists differ only through the
    exclusion of each user's own training profile.
    """

    algorithm = "MostPopular"

    def __init__(self, train: RatingsDataset, config: AlgoConfig,
                 popularity: np.ndarray | None = None):
        super().__init__(train, config)
        if popularity is None:
            counts = np.bincount(train.item_codes, minlength=train.n_items)
            popularity = counts / train.n_users
        self.popularity_ = popularity.astype(np.float64)
        self.popularity_.flags.writeable = False

    def score_items(self, ucode: int) -> np.ndarray:
        return self.popularity_

    def score_block(self, ucodes: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self.popularity_, (len(ucodes), self.n_items))

    def score(self, user_id, item_id) -> float:
        icode = self.item_code(item_id)
        return float(self.popularity_[icode]) if icode is not None else 0.0

    def _arrays(self) -> dict:
        return {"popularity": self.popularity_}

    @classmethod
    def _from_arrays(cls, arrays, config, train):
        return cls(train, config, popularity=arrays["popularity"])
