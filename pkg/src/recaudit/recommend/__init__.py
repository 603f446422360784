"""Recommender models, top-n generation, persistence and evaluation."""

from recaudit.recommend.base import (
    ALGORITHMS,
    AlgoConfig,
    RecommendationSet,
    TrainedModel,
    canonical_algorithm,
    load_model,
    recommend_all,
    recommend_top_n,
    save_model,
    top_n_codes,
)
from recaudit.recommend.evaluate import EvaluationResult, precision_at_n
from recaudit.recommend.factorization import BiasedMFModel, SVDPlusPlusModel
from recaudit.recommend.knn import ItemKNNModel, UserKNNModel
from recaudit.recommend.popularity import MostPopularModel

MODEL_CLASSES = {
    "UserKNN": UserKNNModel,
    "ItemKNN": ItemKNNModel,
    "BMF": BiasedMFModel,
    "SVDpp": SVDPlusPlusModel,
    "MostPopular": MostPopularModel,
}


def fit(train, config, **kwargs):
    """Train the model named by ``config.algorithm`` on ``train``."""
    return MODEL_CLASSES[config.algorithm](train, config, **kwargs)


__all__ = [
    "ALGORITHMS",
    "AlgoConfig",
    "BiasedMFModel",
    "EvaluationResult",
    "ItemKNNModel",
    "MODEL_CLASSES",
    "MostPopularModel",
    "RecommendationSet",
    "SVDPlusPlusModel",
    "TrainedModel",
    "UserKNNModel",
    "canonical_algorithm",
    "fit",
    "load_model",
    "precision_at_n",
    "recommend_all",
    "recommend_top_n",
    "save_model",
    "top_n_codes",
]
