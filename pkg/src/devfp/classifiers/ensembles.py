"""Ensemble classifiers: random forest, bagging, and probability voting.

Each ensemble member trains on its own deterministically derived RNG, so
sequential and (hypothetical) parallel member training produce the same
model. Predictions are the arithmetic mean of member class distributions;
the predicted class is the argmax with ties broken toward the lower class
index.

identity_bootstrap is a diagnostic mode replacing bootstrap sampling with
the identity permutation, which makes an ensemble of one reproduce its base
model exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import DevfpError
from .base import (
    Hyperparams,
    TrainedModel,
    VARIANT_BAGGING,
    VARIANT_C45,
    VARIANT_NAIVE_BAYES,
    VARIANT_RANDOM_FOREST,
    VARIANT_RANDOM_TREE,
    VARIANT_VOTE,
    bootstrap_indices,
    dataset_arrays,
    derive_rng,
)
from .bayes import train_naive_bayes
from .trees import (
    C45Model,
    RandomTreeModel,
    grow_c45_root,
    grow_random_root,
    train_c45,
    train_random_tree,
)


@dataclass(frozen=True)
class EnsembleModel(TrainedModel):
    members: tuple[TrainedModel, ...]

    def distribution(self, values: Sequence[Optional[float]]) -> np.ndarray:
        total = np.zeros(len(self.class_names), dtype=np.float64)
        for member in self.members:
            total += member.distribution(values)
        return total / len(self.members)


@dataclass(frozen=True)
class RandomForestModel(EnsembleModel):
    variant: str = field(init=False, default=VARIANT_RANDOM_FOREST)


@dataclass(frozen=True)
class BaggingModel(EnsembleModel):
    variant: str = field(init=False, default=VARIANT_BAGGING)


@dataclass(frozen=True)
class VoteModel(EnsembleModel):
    variant: str = field(init=False, default=VARIANT_VOTE)


def _base_token(rng: Union[random.Random, int, None], hp: Hyperparams) -> object:
    """Stable token that keys member sub-RNGs."""
    if isinstance(rng, random.Random):
        return rng.getrandbits(64)
    if rng is None:
        return hp.seed
    return rng


def train_random_forest(
    dataset,
    hyperparams: Optional[Hyperparams] = None,
    rng: Union[random.Random, int, None] = None,
    *,
    identity_bootstrap: bool = False,
) -> RandomForestModel:
    """Train forest_trees random trees, each on its own bootstrap sample.

    Member i derives its RNG from (seed, "rf", i); with identity_bootstrap
    the member consumes no draws for sampling, so a forest of one tree
    matches train_random_tree called with that same derived RNG.
    """
    hp = hyperparams or Hyperparams()
    X, y, class_names = dataset_arrays(dataset)
    n = X.shape[0]
    token = _base_token(rng, hp)
    members = []
    for i in range(hp.forest_trees):
        member_rng = derive_rng(token, "rf", i)
        if identity_bootstrap:
            sample = np.arange(n, dtype=np.intp)
        else:
            sample = bootstrap_indices(member_rng, n)
        root = grow_random_root(X[sample], y[sample], len(class_names), hp, member_rng)
        members.append(
            RandomTreeModel(
                schema=tuple(dataset.attributes),
                class_names=class_names,
                hyperparams=hp,
                root=root,
            )
        )
    return RandomForestModel(
        schema=tuple(dataset.attributes),
        class_names=class_names,
        hyperparams=hp,
        members=tuple(members),
    )


def train_bagging(
    dataset,
    hyperparams: Optional[Hyperparams] = None,
    rng: Union[random.Random, int, None] = None,
    *,
    identity_bootstrap: bool = False,
) -> BaggingModel:
    """Train bagging_rounds pruned C4.5 trees on bootstrap samples of size
    bag_fraction * n; prediction averages member distributions."""
    hp = hyperparams or Hyperparams()
    X, y, class_names = dataset_arrays(dataset)
    n = X.shape[0]
    size = max(1, round(hp.bag_fraction * n))
    token = _base_token(rng, hp)
    members = []
    for i in range(hp.bagging_rounds):
        member_rng = derive_rng(token, "bagging", i)
        if identity_bootstrap:
            sample = np.arange(n, dtype=np.intp)
        else:
            sample = bootstrap_indices(member_rng, n, size)
        root = grow_c45_root(X[sample], y[sample], len(class_names), hp)
        members.append(
            C45Model(
                schema=tuple(dataset.attributes),
                class_names=class_names,
                hyperparams=hp,
                root=root,
            )
        )
    return BaggingModel(
        schema=tuple(dataset.attributes),
        class_names=class_names,
        hyperparams=hp,
        members=tuple(members),
    )


def train_vote(
    member_specs: Sequence[str],
    dataset,
    hyperparams: Optional[Hyperparams] = None,
) -> VoteModel:
    """Train each named member on the same dataset and average their votes.

    Member errors propagate annotated with the member name. Nested vote
    members are rejected.
    """
    if not member_specs:
        raise ValueError("vote needs at least one member")
    hp = hyperparams or Hyperparams()
    members: list[TrainedModel] = []
    for i, spec in enumerate(member_specs):
        try:
            members.append(_train_vote_member(spec, dataset, hp, i))
        except DevfpError as exc:
            exc.args = (f"vote member {spec!r}: {exc}",)
            raise
        except ValueError as exc:
            raise ValueError(f"vote member {spec!r}: {exc}") from exc
    first = members[0]
    return VoteModel(
        schema=first.schema,
        class_names=first.class_names,
        hyperparams=hp,
        members=tuple(members),
    )


def _train_vote_member(spec: str, dataset, hp: Hyperparams, index: int) -> TrainedModel:
    if spec == VARIANT_C45:
        return train_c45(dataset, hp)
    if spec == VARIANT_NAIVE_BAYES:
        return train_naive_bayes(dataset, hp)
    if spec == VARIANT_RANDOM_TREE:
        return train_random_tree(dataset, hp, derive_rng(hp.seed, "vote", index, spec))
    if spec == VARIANT_RANDOM_FOREST:
        return train_random_forest(dataset, hp, derive_rng(hp.seed, "vote", index, spec))
    if spec == VARIANT_BAGGING:
        return train_bagging(dataset, hp, derive_rng(hp.seed, "vote", index, spec))
    raise ValueError(f"unknown or unsupported member variant {spec!r}")
