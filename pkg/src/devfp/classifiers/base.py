"""Shared classifier machinery: hyperparameters, the model contract, prediction.

All six classifier variants sit behind one contract: a trained model holds
the attribute schema and the ordered class names fixed at training time, and
produces a probability distribution over those classes for any vector that
matches the schema. Trained models are immutable and safe for concurrent
prediction.

Determinism: all randomness is drawn from `random.Random` instances seeded
with strings derived from (seed, role, member index), so identical inputs
give identical models on any platform, and ensemble members could be trained
in parallel without changing the result.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import EmptyDataset, SchemaMismatch, SingleClassDataset
from ..features import Dataset, FeatureVector

VARIANT_C45 = "j48"
VARIANT_RANDOM_TREE = "rt"
VARIANT_RANDOM_FOREST = "rf"
VARIANT_NAIVE_BAYES = "nb"
VARIANT_BAGGING = "bagging"
VARIANT_VOTE = "vote"

ALL_VARIANTS = (
    VARIANT_C45,
    VARIANT_RANDOM_FOREST,
    VARIANT_RANDOM_TREE,
    VARIANT_NAIVE_BAYES,
    VARIANT_BAGGING,
    VARIANT_VOTE,
)


@dataclass(frozen=True)
class Hyperparams:
    """Training knobs with the benchmark-tool defaults; all configurable.

    rt_feature_count defaults to floor(log2(k)) + 1 where k is the number of
    schema attributes at training time.
    """

    seed: int = 1
    forest_trees: int = 100
    rt_feature_count: Optional[int] = None
    bagging_rounds: int = 10
    bag_fraction: float = 1.0
    c45_min_leaf: int = 2
    c45_confidence: float = 0.25
    c45_prune: bool = True
    nb_variance_floor: float = 1e-9

    def __post_init__(self) -> None:
        if self.forest_trees < 1 or self.bagging_rounds < 1 or self.c45_min_leaf < 1:
            raise ValueError("counts must be >= 1")
        if self.rt_feature_count is not None and self.rt_feature_count < 1:
            raise ValueError("rt_feature_count must be >= 1")
        if not 0.0 < self.bag_fraction <= 1.0:
            raise ValueError("bag_fraction must be in (0, 1]")
        if not 0.0 < self.c45_confidence <= 0.5:
            raise ValueError("c45_confidence must be in (0, 0.5]")
        if self.nb_variance_floor <= 0.0:
            raise ValueError("nb_variance_floor must be positive")

    def resolved_rt_feature_count(self, n_attributes: int) -> int:
        if self.rt_feature_count is not None:
            return min(self.rt_feature_count, n_attributes)
        return min(int(math.floor(math.log2(n_attributes))) + 1, n_attributes)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ModelSpec:
    """Which classifier to train, with what knobs."""

    variant: str
    hyperparams: Hyperparams = Hyperparams()
    vote_members: tuple[str, ...] = (VARIANT_C45, VARIANT_BAGGING)

    def __post_init__(self) -> None:
        if self.variant not in ALL_VARIANTS:
            raise ValueError(f"unknown classifier variant {self.variant!r}")


def derive_rng(*parts: object) -> random.Random:
    """Deterministic RNG keyed by a tuple of tags (platform independent)."""
    return random.Random("|".join(str(p) for p in parts))


def resolve_rng(rng: Union[random.Random, int, None], seed: int, *tags: object) -> random.Random:
    """Accept an explicit RNG, an int seed, or None (derive from hyperparams)."""
    if isinstance(rng, random.Random):
        return rng
    if rng is None:
        return derive_rng(seed, *tags)
    return derive_rng(rng, *tags)


def bootstrap_indices(rng: random.Random, n: int, size: Optional[int] = None) -> np.ndarray:
    size = n if size is None else size
    return np.asarray([rng.randrange(n) for _ in range(size)], dtype=np.intp)


def dataset_arrays(dataset: Dataset) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    """Dataset rows as (X, y, class_names); NaN marks Absent feature cells.

    Raises EmptyDataset for fewer than 2 rows and SingleClassDataset when
    fewer than 2 distinct labels are present.
    """
    if len(dataset.rows) == 0:
        raise EmptyDataset("training needs a non-empty dataset")
    if len(dataset.rows) < 2:
        raise EmptyDataset("training needs at least 2 rows")
    targets = dataset.targets()
    if any(t is None for t in targets):
        raise ValueError("training requires every row to be labeled")
    class_names = tuple(sorted(set(targets)))
    if len(class_names) < 2:
        raise SingleClassDataset("training needs at least 2 classes")
    index = {name: i for i, name in enumerate(class_names)}
    n, k = len(dataset.rows), len(dataset.attributes)
    X = np.full((n, k), np.nan, dtype=np.float64)
    for i, row in enumerate(dataset.rows):
        for j, attribute in enumerate(dataset.attributes):
            value = row.value(attribute)
            if value is not None:
                X[i, j] = float(value)
    y = np.asarray([index[t] for t in targets], dtype=np.intp)
    return X, y, class_names


@dataclass(frozen=True)
class TrainedModel:
    """Base of all trained classifiers: schema + ordered class names."""

    schema: tuple[str, ...]
    class_names: tuple[str, ...]
    hyperparams: Hyperparams

    variant: str = field(init=False, default="")

    def distribution(self, values: Sequence[Optional[float]]) -> np.ndarray:
        """Class distribution for schema-aligned feature values (None = Absent)."""
        raise NotImplementedError


def vector_values(model: TrainedModel, vector: FeatureVector) -> tuple[Optional[float], ...]:
    """Pull the model's schema attributes out of a feature vector."""
    try:
        return tuple(vector.value(a) for a in model.schema)
    except KeyError as exc:
        raise SchemaMismatch(f"vector has no attribute {exc.args[0]!r}") from None


def _argmax_lowest(dist: Sequence[float]) -> int:
    best = 0
    for i in range(1, len(dist)):
        if dist[i] > dist[best]:
            best = i
    return best


def predict_proba(model: TrainedModel, vector: FeatureVector) -> dict[str, float]:
    """Probability per class name; entries are >= 0 and sum to 1."""
    dist = model.distribution(vector_values(model, vector))
    return {name: float(p) for name, p in zip(model.class_names, dist)}


def predict(model: TrainedModel, vector: FeatureVector) -> str:
    """Most probable class; ties break toward the lower class index."""
    dist = model.distribution(vector_values(model, vector))
    return model.class_names[_argmax_lowest(dist)]


def predict_values(model: TrainedModel, values: Sequence[Optional[float]]) -> str:
    """predict() for already schema-aligned values (evaluation fast path)."""
    return model.class_names[_argmax_lowest(model.distribution(values))]
