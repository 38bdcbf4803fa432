"""Six supervised classifiers behind one train/predict/probability contract."""

from .base import (
    ALL_VARIANTS,
    Hyperparams,
    ModelSpec,
    TrainedModel,
    derive_rng,
    predict,
    predict_proba,
    predict_values,
    vector_values,
)
from .bayes import NaiveBayesModel, train_naive_bayes
from .ensembles import (
    BaggingModel,
    RandomForestModel,
    VoteModel,
    train_bagging,
    train_random_forest,
    train_vote,
)
from .persist import load_model, save_model
from .trees import (
    C45Model,
    Leaf,
    RandomTreeModel,
    Split,
    TreeModel,
    train_c45,
    train_random_tree,
)

__all__ = [
    "ALL_VARIANTS",
    "Hyperparams",
    "ModelSpec",
    "TrainedModel",
    "derive_rng",
    "predict",
    "predict_proba",
    "predict_values",
    "vector_values",
    "NaiveBayesModel",
    "train_naive_bayes",
    "BaggingModel",
    "RandomForestModel",
    "VoteModel",
    "train_bagging",
    "train_random_forest",
    "train_vote",
    "load_model",
    "save_model",
    "C45Model",
    "Leaf",
    "RandomTreeModel",
    "Split",
    "TreeModel",
    "train_c45",
    "train_random_tree",
    "train_model",
]


def train_model(dataset, spec: ModelSpec, rng=None) -> TrainedModel:
    """Train the classifier named by a ModelSpec on a dataset."""
    hp = spec.hyperparams
    if spec.variant == "j48":
        return train_c45(dataset, hp)
    if spec.variant == "rt":
        return train_random_tree(dataset, hp, rng)
    if spec.variant == "rf":
        return train_random_forest(dataset, hp, rng)
    if spec.variant == "nb":
        return train_naive_bayes(dataset, hp)
    if spec.variant == "bagging":
        return train_bagging(dataset, hp, rng)
    if spec.variant == "vote":
        return train_vote(spec.vote_members, dataset, hp)
    raise ValueError(f"unknown classifier variant {spec.variant!r}")
