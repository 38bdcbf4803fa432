"""Stratified splitting, confusion matrices, and TPR/PRE/ACC reporting.

Per-class metrics are one-vs-rest: TPR = TP / (TP + FN) and
PRE = TP / (TP + FP), with 0/0 reported as 0 and flagged undefined rather
than silently dropped (small per-device test sets make empty columns
likely). Overall accuracy is the confusion-matrix trace over the total.
Macro averages are unweighted means over the classes whose value is
defined; the support-weighted precision is also reported since published
"average precision" figures do not always say which convention they use.

Everything here works on immutable inputs, so independent (model, split)
pairs can be evaluated concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .classifiers import ModelSpec, TrainedModel, derive_rng, predict_values, train_model
from .errors import ClassTooSmall, EmptyDataset, EmptyMatrix, SchemaMismatch
from .features import Dataset

FEATURE_SETS = {
    "network": ("ip.len", "ip.ttl", "ip.proto"),
    "transport": (
        "tcp.srcport",
        "tcp.stream",
        "tcp.ack",
        "tcp.window_size",
        "udp.srcport",
        "udp.stream",
    ),
    "combined": (
        "tcp.srcport",
        "tcp.stream",
        "tcp.ack",
        "tcp.window_size",
        "udp.srcport",
        "udp.stream",
        "ip.len",
        "ip.ttl",
        "ip.proto",
    ),
}


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 1
    stratified: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


def _train_count(fraction: float, size: int) -> int:
    # round half up, then keep at least one row on each side
    count = int(fraction * size + 0.5)
    return max(1, min(count, size - 1))


def stratified_split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Deterministic seeded train/test split, per-class when stratified.

    Every class keeps at least one row on each side, so class proportions
    are preserved within one row per class. The same seed always yields the
    same partition.
    """
    targets = dataset.targets()
    if any(t is None for t in targets):
        raise ValueError("splitting requires every row to be labeled")
    if len(dataset.rows) < 2:
        raise EmptyDataset("splitting needs at least 2 rows")
    rng = derive_rng(spec.seed, "split")
    train_rows = []
    test_rows = []
    if spec.stratified:
        by_class: dict[str, list[int]] = {}
        for i, t in enumerate(targets):
            by_class.setdefault(t, []).append(i)
        for name in sorted(by_class):
            indices = by_class[name]
            if len(indices) < 2:
                raise ClassTooSmall(name, len(indices))
            rng.shuffle(indices)
            cut = _train_count(spec.train_fraction, len(indices))
            train_rows.extend(dataset.rows[i] for i in indices[:cut])
            test_rows.extend(dataset.rows[i] for i in indices[cut:])
    else:
        indices = list(range(len(dataset.rows)))
        rng.shuffle(indices)
        cut = _train_count(spec.train_fraction, len(indices))
        train_rows.extend(dataset.rows[i] for i in indices[:cut])
        test_rows.extend(dataset.rows[i] for i in indices[cut:])
    return (
        Dataset.build(train_rows, dataset.attributes, dataset.class_attribute),
        Dataset.build(test_rows, dataset.attributes, dataset.class_attribute),
    )


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square count matrix: rows are actual classes, columns predicted."""

    class_names: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(len(self.class_names)))


def evaluate(model: TrainedModel, test: Dataset) -> ConfusionMatrix:
    """Predict every test row and tally (actual, predicted) pairs.

    The matrix covers the model's classes plus any extra labels appearing
    only in the test set, so its total always equals the test size.
    """
    if tuple(test.attributes) != tuple(model.schema):
        raise SchemaMismatch(
            f"test schema {tuple(test.attributes)} != model schema {tuple(model.schema)}"
        )
    if len(test.rows) == 0:
        raise EmptyDataset("evaluation needs a non-empty test set")
    targets = test.targets()
    if any(t is None for t in targets):
        raise ValueError("evaluation requires every test row to be labeled")
    extra = sorted(set(targets) - set(model.class_names))
    names = tuple(model.class_names) + tuple(extra)
    index = {name: i for i, name in enumerate(names)}
    counts = [[0] * len(names) for _ in names]
    for row, actual in zip(test.rows, targets):
        predicted = predict_values(model, row.values(model.schema))
        counts[index[actual]][index[predicted]] += 1
    return ConfusionMatrix(class_names=names, counts=tuple(tuple(r) for r in counts))


@dataclass(frozen=True)
class ClassMetrics:
    tpr: float
    precision: float
    support: int
    tpr_defined: bool
    precision_defined: bool


@dataclass(frozen=True)
class RunMetadata:
    seed: Optional[int] = None
    model: Optional[str] = None
    feature_set: Optional[str] = None


@dataclass(frozen=True)
class EvalReport:
    class_names: tuple[str, ...]
    per_class: dict[str, ClassMetrics]
    acc: float
    macro_tpr: float
    macro_pre: float
    weighted_pre: float
    confusion: ConfusionMatrix
    metadata: RunMetadata = field(default_factory=RunMetadata)


def metrics(matrix: ConfusionMatrix, metadata: Optional[RunMetadata] = None) -> EvalReport:
    """Per-class and aggregate TPR/PRE/ACC for a confusion matrix."""
    n = len(matrix.class_names)
    total = matrix.total
    if total == 0:
        raise EmptyMatrix("confusion matrix has no counts")
    per_class: dict[str, ClassMetrics] = {}
    defined_tprs = []
    defined_pres = []
    weighted_pre_sum = 0.0
    for c, name in enumerate(matrix.class_names):
        tp = matrix.counts[c][c]
        row_sum = sum(matrix.counts[c])
        col_sum = sum(matrix.counts[r][c] for r in range(n))
        fn = row_sum - tp
        fp = col_sum - tp
        tpr_defined = (tp + fn) > 0
        pre_defined = (tp + fp) > 0
        tpr = tp / (tp + fn) if tpr_defined else 0.0
        pre = tp / (tp + fp) if pre_defined else 0.0
        per_class[name] = ClassMetrics(
            tpr=tpr,
            precision=pre,
            support=row_sum,
            tpr_defined=tpr_defined,
            precision_defined=pre_defined,
        )
        if tpr_defined:
            defined_tprs.append(tpr)
        if pre_defined:
            defined_pres.append(pre)
        weighted_pre_sum += row_sum * pre
    return EvalReport(
        class_names=matrix.class_names,
        per_class=per_class,
        acc=matrix.trace / total,
        macro_tpr=sum(defined_tprs) / len(defined_tprs) if defined_tprs else 0.0,
        macro_pre=sum(defined_pres) / len(defined_pres) if defined_pres else 0.0,
        weighted_pre=weighted_pre_sum / total,
        confusion=matrix,
        metadata=metadata or RunMetadata(),
    )


def ablation_run(
    dataset: Dataset,
    feature_set: str,
    model_spec: ModelSpec,
    split_spec: Optional[SplitSpec] = None,
) -> EvalReport:
    """Project the schema to a feature set, then split, train and evaluate."""
    if feature_set not in FEATURE_SETS:
        raise ValueError(f"feature_set must be one of {sorted(FEATURE_SETS)}")
    split_spec = split_spec or SplitSpec(seed=model_spec.hyperparams.seed)
    projected = dataset.project(FEATURE_SETS[feature_set])
    train, test = stratified_split(projected, split_spec)
    model = train_model(train, model_spec)
    matrix = evaluate(model, test)
    return metrics(
        matrix,
        RunMetadata(seed=split_spec.seed, model=model_spec.variant, feature_set=feature_set),
    )


# ---------------------------------------------------------------------------
# Report rendering


def report_classes_csv(report: EvalReport) -> str:
    """Machine-readable per-class metrics: class,tpr,precision,support."""
    lines = ["class,tpr,precision,support"]
    for name in report.class_names:
        m = report.per_class[name]
        lines.append(f"{name},{m.tpr:.12g},{m.precision:.12g},{m.support}")
    return "\n".join(lines) + "\n"


def report_summary_line(report: EvalReport) -> str:
    """One line: acc,macro_tpr,macro_pre,seed,model,feature_set."""
    md = report.metadata
    return (
        f"{report.acc:.12g},{report.macro_tpr:.12g},{report.macro_pre:.12g},"
        f"{'' if md.seed is None else md.seed},{md.model or ''},{md.feature_set or ''}"
    )


def report_text(report: EvalReport) -> str:
    """Human-readable report table."""
    md = report.metadata
    lines = []
    header_bits = []
    if md.model:
        header_bits.append(f"model={md.model}")
    if md.feature_set:
        header_bits.append(f"features={md.feature_set}")
    if md.seed is not None:
        header_bits.append(f"seed={md.seed}")
    lines.append("evaluation report" + (" (" + ", ".join(header_bits) + ")" if header_bits else ""))
    lines.append(
        f"accuracy {report.acc:.4f}   macro TPR {report.macro_tpr:.4f}   "
        f"macro PRE {report.macro_pre:.4f}   weighted PRE {report.weighted_pre:.4f}"
    )
    name_width = max(len("class"), max((len(n) for n in report.class_names), default=5))
    lines.append(f"{'class':<{name_width}}  {'tpr':>8}  {'precision':>9}  {'support':>7}")
    for name in report.class_names:
        m = report.per_class[name]
        tpr = f"{m.tpr:.4f}" + ("" if m.tpr_defined else "*")
        pre = f"{m.precision:.4f}" + ("" if m.precision_defined else "*")
        lines.append(f"{name:<{name_width}}  {tpr:>8}  {pre:>9}  {m.support:>7}")
    if any(
        not (m.tpr_defined and m.precision_defined) for m in report.per_class.values()
    ):
        lines.append("* undefined (0/0), reported as 0")
    return "\n".join(lines) + "\n"
