"""Versioned model persistence with exact round-trips.

Grammar (JSON, version 1): a model document is an object with

    format       "devfp-model"
    version      1
    variant      "j48" | "rt" | "rf" | "nb" | "bagging" | "vote"
    schema       [attribute names...]
    class_names  [class names...]
    hyperparams  {seed, forest_trees, rt_feature_count, bagging_rounds,
                  bag_fraction, c45_min_leaf, c45_confidence, c45_prune,
                  nb_variance_floor}
    params       variant-specific, see below

Tree params ("j48"/"rt") store nodes as a flat array so arbitrarily deep
trees never hit recursion limits: {"root": index, "nodes": [node...]} where
a node is {"counts": [...]} for a leaf or {"attribute": i, "threshold": x,
"absent_branch": "left"|"right", "left": index, "right": index}. Forest and
bagging params hold {"members": [tree params...]}; vote params hold full
member documents; nb params hold priors/means/stddevs/present_rates with
null marking classes that never saw an attribute.

Floats serialize via repr and parse back bit-identically, so
load_model(save_model(m)) reproduces m exactly.
"""

from __future__ import annotations

import json
from typing import Union

from ..errors import ModelFormatError
from .base import Hyperparams, TrainedModel
from .bayes import NaiveBayesModel
from .ensembles import BaggingModel, RandomForestModel, VoteModel
from .trees import C45Model, Leaf, Node, RandomTreeModel, Split, TreeModel

FORMAT_NAME = "devfp-model"
FORMAT_VERSION = 1


def _encode_tree(root: Node) -> dict:
    nodes: list[dict] = []
    index_of: dict[int, int] = {}
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, children_done = stack.pop()
        if isinstance(node, Leaf):
            index_of[id(node)] = len(nodes)
            nodes.append({"counts": list(node.counts)})
            continue
        if not children_done:
            stack.append((node, True))
            stack.append((node.left, False))
            stack.append((node.right, False))
            continue
        index_of[id(node)] = len(nodes)
        nodes.append(
            {
                "attribute": node.attribute,
                "threshold": node.threshold,
                "absent_branch": node.absent_branch,
                "left": index_of[id(node.left)],
                "right": index_of[id(node.right)],
            }
        )
    return {"root": index_of[id(root)], "nodes": nodes}


def _decode_tree(params: dict) -> Node:
    nodes_raw = params["nodes"]
    decoded: list[Node] = [None] * len(nodes_raw)  # type: ignore[list-item]
    # children always carry smaller indices than their parent (post-order encode)
    for i, raw in enumerate(nodes_raw):
        if "counts" in raw:
            decoded[i] = Leaf(counts=tuple(int(c) for c in raw["counts"]))
        else:
            decoded[i] = Split(
                attribute=int(raw["attribute"]),
                threshold=float(raw["threshold"]),
                absent_branch=str(raw["absent_branch"]),
                left=decoded[raw["left"]],
                right=decoded[raw["right"]],
            )
    return decoded[params["root"]]


def _model_dict(model: TrainedModel) -> dict:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "variant": model.variant,
        "schema": list(model.schema),
        "class_names": list(model.class_names),
        "hyperparams": model.hyperparams.to_dict(),
    }
    if isinstance(model, TreeModel):
        doc["params"] = _encode_tree(model.root)
    elif isinstance(model, NaiveBayesModel):
        doc["params"] = {
            "priors": list(model.priors),
            "means": [list(row) for row in model.means],
            "stddevs": [list(row) for row in model.stddevs],
            "present_rates": [list(row) for row in model.present_rates],
        }
    elif isinstance(model, VoteModel):
        doc["params"] = {"members": [_model_dict(m) for m in model.members]}
    elif isinstance(model, (RandomForestModel, BaggingModel)):
        doc["params"] = {"members": [_encode_tree(m.root) for m in model.members]}
    else:
        raise ModelFormatError(f"cannot persist model type {type(model).__name__}")
    return doc


def save_model(model: TrainedModel) -> str:
    """Serialize a trained model to its canonical JSON text."""
    return json.dumps(_model_dict(model), separators=(",", ":")) + "\n"


def _require(doc: dict, key: str) -> object:
    if key not in doc:
        raise ModelFormatError(f"model document missing {key!r}")
    return doc[key]


def _model_from_dict(doc: dict) -> TrainedModel:
    if _require(doc, "format") != FORMAT_NAME:
        raise ModelFormatError(f"not a {FORMAT_NAME} document")
    if _require(doc, "version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model version {doc['version']!r}; this build reads version {FORMAT_VERSION}"
        )
    variant = _require(doc, "variant")
    schema = tuple(str(a) for a in _require(doc, "schema"))
    class_names = tuple(str(c) for c in _require(doc, "class_names"))
    hp_raw = dict(_require(doc, "hyperparams"))
    try:
        hp = Hyperparams(**hp_raw)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad hyperparams: {exc}") from exc
    params = _require(doc, "params")
    common = {"schema": schema, "class_names": class_names, "hyperparams": hp}
    if variant == "j48":
        return C45Model(root=_decode_tree(params), **common)
    if variant == "rt":
        return RandomTreeModel(root=_decode_tree(params), **common)
    if variant == "rf":
        members = tuple(
            RandomTreeModel(root=_decode_tree(p), **common) for p in params["members"]
        )
        return RandomForestModel(members=members, **common)
    if variant == "bagging":
        members = tuple(C45Model(root=_decode_tree(p), **common) for p in params["members"])
        return BaggingModel(members=members, **common)
    if variant == "nb":
        none_or_float = lambda v: None if v is None else float(v)
        return NaiveBayesModel(
            priors=tuple(float(p) for p in params["priors"]),
            means=tuple(tuple(none_or_float(v) for v in row) for row in params["means"]),
            stddevs=tuple(tuple(none_or_float(v) for v in row) for row in params["stddevs"]),
            present_rates=tuple(tuple(float(v) for v in row) for row in params["present_rates"]),
            **common,
        )
    if variant == "vote":
        members = tuple(_model_from_dict(p) for p in params["members"])
        return VoteModel(members=members, **common)
    raise ModelFormatError(f"unknown variant {variant!r}")


def load_model(text: Union[str, bytes]) -> TrainedModel:
    """Parse canonical JSON text back into a trained model."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    return _model_from_dict(doc)
