"""Decision trees: gain-ratio growth, pessimistic pruning, random trees.

Growth is recursive in spirit but implemented with explicit stacks so that
pathological data (long alternating value runs) cannot hit the interpreter
recursion limit. At every node the candidate (attribute, threshold) pair is
the one maximizing gain ratio among attributes whose missing-scaled info
gain is positive; rows with an Absent split value follow the branch that
received the majority of training rows.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ..selection import score_column
from .base import (
    Hyperparams,
    TrainedModel,
    VARIANT_C45,
    VARIANT_RANDOM_TREE,
    dataset_arrays,
    resolve_rng,
)


@dataclass(frozen=True)
class Leaf:
    """Terminal node holding training class counts (Laplace-smoothed at predict)."""

    counts: tuple[int, ...]


@dataclass(frozen=True)
class Split:
    attribute: int  # index into the model schema
    threshold: float
    absent_branch: str  # "left" | "right": side that got the training majority
    left: "Node"
    right: "Node"


Node = Union[Leaf, Split]


def route(node: Node, values: Sequence[Optional[float]]) -> Leaf:
    """Walk a vector down to its leaf; Absent values take the absent branch."""
    while isinstance(node, Split):
        value = values[node.attribute]
        if value is None:
            node = node.left if node.absent_branch == "left" else node.right
        elif value <= node.threshold:
            node = node.left
        else:
            node = node.right
    return node


def leaf_distribution(leaf: Leaf) -> np.ndarray:
    """Laplace-smoothed leaf distribution: (count_c + 1) / (total + n_classes)."""
    counts = np.asarray(leaf.counts, dtype=np.float64)
    return (counts + 1.0) / (counts.sum() + len(leaf.counts))


# ---------------------------------------------------------------------------
# Growth

# Builder nodes are dicts while the tree is mutable (growth + pruning), then
# frozen into Leaf/Split dataclasses.


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    min_leaf: int,
    pick_candidates: Callable[[], Sequence[int]],
) -> dict:
    root: dict = {}
    stack: list[tuple[dict, np.ndarray]] = [(root, np.arange(len(y), dtype=np.intp))]
    while stack:
        node, idx = stack.pop()
        sub_y = y[idx]
        counts = np.bincount(sub_y, minlength=n_classes)
        node["counts"] = counts
        node["leaf"] = True
        if len(idx) < min_leaf or np.count_nonzero(counts) <= 1:
            continue
        best_ratio = 0.0
        best_attr = -1
        best_threshold = 0.0
        for attribute in pick_candidates():
            column = X[idx, attribute]
            ratio, scaled_gain, threshold = score_column(column, sub_y, n_classes)
            if scaled_gain > 0.0 and ratio > best_ratio:
                best_ratio = ratio
                best_attr = attribute
                best_threshold = threshold
        if best_attr < 0:
            continue  # no positive-gain split
        column = X[idx, best_attr]
        present = ~np.isnan(column)
        go_left = present & (column <= best_threshold)
        go_right = present & (column > best_threshold)
        absent_branch = "left" if go_left.sum() >= go_right.sum() else "right"
        if absent_branch == "left":
            go_left |= ~present
        else:
            go_right |= ~present
        node["leaf"] = False
        node["attribute"] = int(best_attr)
        node["threshold"] = float(best_threshold)
        node["absent_branch"] = absent_branch
        node["left"] = {}
        node["right"] = {}
        # left pushed last so it grows first: fixed traversal order keeps
        # per-node RNG draws (random trees) reproducible
        stack.append((node["right"], idx[go_right]))
        stack.append((node["left"], idx[go_left]))
    return root


# ---------------------------------------------------------------------------
# Pessimistic pruning (normal-approximation upper confidence bound)


def _added_errors(n: float, e: float, confidence: float) -> float:
    """Extra errors added to e for a pessimistic estimate at the given confidence."""
    if e < 1.0:
        base = n * (1.0 - confidence ** (1.0 / n))
        if e == 0.0:
            return base
        return base + e * (_added_errors(n, 1.0, confidence) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = NormalDist().inv_cdf(1.0 - confidence)
    f = (e + 0.5) / n
    r = (f + z * z / (2.0 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4.0 * n * n))) / (
        1.0 + z * z / n
    )
    return r * n - e


def _pessimistic_errors(counts: np.ndarray, confidence: float) -> float:
    n = float(counts.sum())
    e = n - float(counts.max())
    return e + _added_errors(n, e, confidence)


def _prune(root: dict, confidence: float) -> None:
    """Collapse subtrees whose pessimistic leaf error is no worse, bottom-up."""
    order: list[dict] = []
    stack = [root]
    while stack:
        node = stack.pop()
        order.append(node)
        if not node["leaf"]:
            stack.append(node["left"])
            stack.append(node["right"])
    for node in reversed(order):  # children always precede parents here
        if node["leaf"]:
            node["est_errors"] = _pessimistic_errors(node["counts"], confidence)
            continue
        subtree_errors = node["left"]["est_errors"] + node["right"]["est_errors"]
        leaf_errors = _pessimistic_errors(node["counts"], confidence)
        if leaf_errors <= subtree_errors:
            node["leaf"] = True
            del node["left"], node["right"]
            node["est_errors"] = leaf_errors
        else:
            node["est_errors"] = subtree_errors


def _freeze(root: dict) -> Node:
    """Convert builder dicts into immutable Leaf/Split nodes (no recursion)."""
    frozen: dict[int, Node] = {}
    stack: list[tuple[dict, bool]] = [(root, False)]
    while stack:
        node, children_done = stack.pop()
        if node["leaf"]:
            frozen[id(node)] = Leaf(counts=tuple(int(c) for c in node["counts"]))
            continue
        if not children_done:
            stack.append((node, True))
            stack.append((node["left"], False))
            stack.append((node["right"], False))
            continue
        frozen[id(node)] = Split(
            attribute=node["attribute"],
            threshold=node["threshold"],
            absent_branch=node["absent_branch"],
            left=frozen[id(node["left"])],
            right=frozen[id(node["right"])],
        )
    return frozen[id(root)]


# ---------------------------------------------------------------------------
# Models


@dataclass(frozen=True)
class TreeModel(TrainedModel):
    root: Node
    variant: str = field(init=False, default=VARIANT_C45)

    def distribution(self, values: Sequence[Optional[float]]) -> np.ndarray:
        return leaf_distribution(route(self.root, values))


@dataclass(frozen=True)
class C45Model(TreeModel):
    variant: str = field(init=False, default=VARIANT_C45)


@dataclass(frozen=True)
class RandomTreeModel(TreeModel):
    variant: str = field(init=False, default=VARIANT_RANDOM_TREE)


def grow_c45_root(X: np.ndarray, y: np.ndarray, n_classes: int, hp: Hyperparams) -> Node:
    """C4.5 growth (+ optional pruning) on raw arrays; used directly by ensembles."""
    k = X.shape[1]
    all_attributes = tuple(range(k))
    root = _grow(X, y, n_classes, hp.c45_min_leaf, lambda: all_attributes)
    if hp.c45_prune:
        _prune(root, hp.c45_confidence)
    return _freeze(root)


def grow_random_root(
    X: np.ndarray, y: np.ndarray, n_classes: int, hp: Hyperparams, rng: random.Random
) -> Node:
    """Random-tree growth on raw arrays: sampled candidates, never pruned."""
    k = X.shape[1]
    m = hp.resolved_rt_feature_count(k)
    attributes = list(range(k))

    def pick() -> Sequence[int]:
        if m >= k:
            return attributes
        return sorted(rng.sample(attributes, m))

    return _freeze(_grow(X, y, n_classes, hp.c45_min_leaf, pick))


def train_c45(dataset, hyperparams: Optional[Hyperparams] = None) -> C45Model:
    """Grow a gain-ratio decision tree, pessimistically pruned by default."""
    hp = hyperparams or Hyperparams()
    X, y, class_names = dataset_arrays(dataset)
    root = grow_c45_root(X, y, len(class_names), hp)
    return C45Model(
        schema=tuple(dataset.attributes), class_names=class_names, hyperparams=hp, root=root
    )


def train_random_tree(
    dataset, hyperparams: Optional[Hyperparams] = None, rng: Union[random.Random, int, None] = None
) -> RandomTreeModel:
    """Grow one unpruned tree over per-node random candidate attributes.

    The rng (or the hyperparameter seed when rng is None) fully determines
    the tree for a given dataset. When the candidate count covers every
    attribute the sampling degenerates and the tree equals an unpruned C4.5
    tree.
    """
    hp = hyperparams or Hyperparams()
    X, y, class_names = dataset_arrays(dataset)
    rand = resolve_rng(rng, hp.seed, "rt")
    root = grow_random_root(X, y, len(class_names), hp, rand)
    return RandomTreeModel(
        schema=tuple(dataset.attributes), class_names=class_names, hyperparams=hp, root=root
    )
