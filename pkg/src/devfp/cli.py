"""Command-line front end: extract, rank, train-eval, classify, pipeline.

Human-readable progress and warnings go to standard error; machine-readable
results go to files and standard output, so the tool composes in shells.
Every command is reproducible: identical inputs, flags and seed produce
byte-identical outputs (reports embed the seed, never wall-clock time).
Exit status is 0 unless a fatal error occurred; warnings never change it.
"""

from __future__ import annotations

import argparse
import sys
from collections import Counter
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .classifiers import (
    ALL_VARIANTS,
    Hyperparams,
    ModelSpec,
    load_model,
    save_model,
    train_model,
)
from .errors import DevfpError
from .evaluation import (
    FEATURE_SETS,
    RunMetadata,
    SplitSpec,
    evaluate,
    metrics,
    report_classes_csv,
    report_summary_line,
    report_text,
    stratified_split,
)
from .features import (
    CLASS_DEVICE_NAME,
    CLASS_DEVICE_TYPE,
    TYPE_IOT,
    TYPE_NON_IOT,
    Dataset,
    ExtractionStats,
    clean,
    extract_capture,
    label_by_source_mac,
    read_csv,
    read_registry,
    write_csv,
)
from .pcap import MAGIC_MICRO, MAGIC_MICRO_SWAPPED, MAGIC_NANO, MAGIC_NANO_SWAPPED, parse_capture
from .selection import apply_criteria, default_meta, rank, rank_report_csv, read_attribute_meta


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="devfp",
        description="Device fingerprinting from TCP/IP packet-header features.",
    )
    parser.add_argument("--version", action="version", version=f"devfp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="pcap files -> labeled feature CSV")
    p_extract.add_argument("--input", nargs="+", required=True, help="classic pcap file(s)")
    p_extract.add_argument("--registry", required=True, help="device registry (mac\\tname\\t{iot|non-iot})")
    p_extract.add_argument("--out", required=True, help="output CSV path")
    p_extract.add_argument("--dedup", action="store_true", help="drop exact duplicate rows")
    p_extract.add_argument("--raw-ack", action="store_true", help="emit raw instead of relative tcp.ack")

    p_rank = sub.add_parser("rank", help="gain-ratio attribute ranking of a dataset CSV")
    p_rank.add_argument("--input", required=True, help="dataset CSV")
    p_rank.add_argument("--out", required=True, help="output rank report CSV")
    p_rank.add_argument("--meta", help="attribute-meta registry (name\\tflag[,flag...])")
    p_rank.add_argument(
        "--classes", choices=[CLASS_DEVICE_NAME, CLASS_DEVICE_TYPE], default=CLASS_DEVICE_NAME
    )

    p_train = sub.add_parser("train-eval", help="split, train, evaluate, persist model + report")
    p_train.add_argument("--input", required=True, help="dataset CSV")
    p_train.add_argument("--model", choices=list(ALL_VARIANTS), required=True)
    p_train.add_argument("--features", choices=sorted(FEATURE_SETS), default="combined")
    p_train.add_argument(
        "--classes", choices=[CLASS_DEVICE_NAME, CLASS_DEVICE_TYPE], default=CLASS_DEVICE_NAME
    )
    p_train.add_argument("--split", type=float, default=0.8, help="train fraction (default 0.8)")
    p_train.add_argument("--seed", type=int, default=1)
    p_train.add_argument("--dedup", action="store_true", help="drop exact duplicate rows before splitting")
    p_train.add_argument("--no-stratify", action="store_true", help="plain random split instead of stratified")
    p_train.add_argument("--registry", help="device registry, needed to map names to types")
    p_train.add_argument("--out", required=True, help="output directory")
    _add_hyperparam_flags(p_train)

    p_classify = sub.add_parser("classify", help="predict classes for a pcap or CSV with a saved model")
    p_classify.add_argument("--model-file", required=True)
    p_classify.add_argument("--input", required=True, help="pcap or dataset CSV")
    p_classify.add_argument("--out", required=True, help="output predictions CSV")
    p_classify.add_argument("--raw-ack", action="store_true")

    p_pipe = sub.add_parser("pipeline", help="extract -> train -> evaluate in one run")
    p_pipe.add_argument("--input", nargs="+", required=True, help="classic pcap file(s)")
    p_pipe.add_argument("--registry", required=True)
    p_pipe.add_argument("--model", choices=list(ALL_VARIANTS), required=True)
    p_pipe.add_argument("--features", choices=sorted(FEATURE_SETS), default="combined")
    p_pipe.add_argument(
        "--classes", choices=[CLASS_DEVICE_NAME, CLASS_DEVICE_TYPE], default=CLASS_DEVICE_NAME
    )
    p_pipe.add_argument("--split", type=float, default=0.8)
    p_pipe.add_argument("--seed", type=int, default=1)
    p_pipe.add_argument("--dedup", action="store_true")
    p_pipe.add_argument("--raw-ack", action="store_true")
    p_pipe.add_argument("--no-stratify", action="store_true")
    p_pipe.add_argument("--out", required=True, help="output directory")
    _add_hyperparam_flags(p_pipe)

    return parser


def _add_hyperparam_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--trees", type=int, default=100, help="random-forest size")
    parser.add_argument("--bagging-rounds", type=int, default=10)
    parser.add_argument("--min-leaf", type=int, default=2)
    parser.add_argument("--confidence", type=float, default=0.25, help="C4.5 pruning confidence")
    parser.add_argument("--no-prune", action="store_true", help="disable C4.5 pruning")
    parser.add_argument(
        "--vote-members",
        default="j48,bagging",
        help="comma-separated member list for --model vote",
    )


def _hyperparams_from_args(args: argparse.Namespace) -> Hyperparams:
    return Hyperparams(
        seed=args.seed,
        forest_trees=args.trees,
        bagging_rounds=args.bagging_rounds,
        c45_min_leaf=args.min_leaf,
        c45_confidence=args.confidence,
        c45_prune=not args.no_prune,
    )


def _model_spec_from_args(args: argparse.Namespace) -> ModelSpec:
    members = tuple(m.strip() for m in args.vote_members.split(",") if m.strip())
    return ModelSpec(
        variant=args.model,
        hyperparams=_hyperparams_from_args(args),
        vote_members=members,
    )


def _extract_to_dataset(args: argparse.Namespace) -> Dataset:
    registry = read_registry(Path(args.registry).read_text(encoding="utf-8"))
    stats = ExtractionStats()
    vectors = []
    for path in args.input:
        capture = parse_capture(Path(path).read_bytes())
        if capture.truncated_at is not None:
            _log(f"warning: {path}: truncated at frame {capture.truncated_at}; kept frames before it")
        vectors.extend(extract_capture(capture, raw_ack=args.raw_ack, stats=stats))
    dataset, dropped = label_by_source_mac(vectors, registry)
    dataset, clean_stats = clean(dataset, dedup=args.dedup)
    _log(
        f"read {stats.frames_read} frames: {stats.non_ipv4_skipped} non-IPv4 skipped, "
        f"{stats.decode_errors} truncated/undecodable dropped, "
        f"{dropped} unregistered-source dropped, "
        f"{clean_stats.empty_removed} empty rows removed, "
        f"{clean_stats.duplicates_removed} duplicates removed, "
        f"{stats.raw_ack_fallbacks} raw-ack fallbacks"
    )
    if len(dataset.rows) == 0:
        _log("warning: no packets matched the registry; dataset is empty")
    return dataset


def _cmd_extract(args: argparse.Namespace) -> int:
    dataset = _extract_to_dataset(args)
    Path(args.out).write_text(write_csv(dataset), encoding="utf-8")
    _log(f"wrote {len(dataset.rows)} rows to {args.out}")
    return 0


def _cmd_rank(args: argparse.Namespace) -> int:
    dataset = read_csv(Path(args.input).read_text(encoding="utf-8"), args.classes)
    ranked = rank(dataset)
    if args.meta:
        meta = read_attribute_meta(Path(args.meta).read_text(encoding="utf-8"))
    else:
        meta = default_meta(dataset.attributes)
    selected = apply_criteria(ranked, meta)
    Path(args.out).write_text(rank_report_csv(ranked), encoding="utf-8")
    _log(f"ranked {len(ranked.scores)} attributes; {len(selected)} pass the exclusion criteria")
    _log("selected: " + (", ".join(selected) if selected else "(none)"))
    return 0


def _load_train_dataset(args: argparse.Namespace) -> Dataset:
    text = Path(args.input).read_text(encoding="utf-8")
    if args.classes == CLASS_DEVICE_TYPE and args.registry:
        dataset = read_csv(text, CLASS_DEVICE_NAME)
        registry = read_registry(Path(args.registry).read_text(encoding="utf-8"))
        dataset = dataset.with_class_attribute(CLASS_DEVICE_TYPE, registry)
    else:
        dataset = read_csv(text, args.classes)
        if args.classes == CLASS_DEVICE_TYPE:
            bad = sorted(
                {t for t in dataset.targets() if t is not None and t not in (TYPE_IOT, TYPE_NON_IOT)}
            )
            if bad:
                raise DevfpError(
                    f"class column holds {bad}, not {TYPE_IOT}/{TYPE_NON_IOT}; "
                    "pass --registry to map device names to types"
                )
    return dataset


def _train_eval_on_dataset(
    dataset: Dataset, args: argparse.Namespace, out_dir: Path, apply_dedup: bool = True
) -> int:
    if apply_dedup and args.dedup:
        dataset, clean_stats = clean(dataset, dedup=True)
        _log(
            f"cleaning removed {clean_stats.empty_removed} empty rows and "
            f"{clean_stats.duplicates_removed} duplicates"
        )
    projected = dataset.project(FEATURE_SETS[args.features])
    split_spec = SplitSpec(
        train_fraction=args.split, seed=args.seed, stratified=not args.no_stratify
    )
    train, test = stratified_split(projected, split_spec)
    _log(f"split {len(dataset.rows)} rows into {len(train.rows)} train / {len(test.rows)} test")
    spec = _model_spec_from_args(args)
    model = train_model(train, spec)
    matrix = evaluate(model, test)
    report = metrics(
        matrix, RunMetadata(seed=args.seed, model=args.model, feature_set=args.features)
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "model.json").write_text(save_model(model), encoding="utf-8")
    (out_dir / "report.txt").write_text(report_text(report), encoding="utf-8")
    (out_dir / "report_classes.csv").write_text(report_classes_csv(report), encoding="utf-8")
    summary = report_summary_line(report)
    (out_dir / "summary.csv").write_text(summary + "\n", encoding="utf-8")
    print(summary)
    _log(report_text(report).rstrip("\n"))
    return 0


def _cmd_train_eval(args: argparse.Namespace) -> int:
    dataset = _load_train_dataset(args)
    return _train_eval_on_dataset(dataset, args, Path(args.out))


_PCAP_MAGICS_LE = {MAGIC_MICRO, MAGIC_MICRO_SWAPPED, MAGIC_NANO, MAGIC_NANO_SWAPPED}


def _looks_like_pcap(path: Path) -> bool:
    with path.open("rb") as fh:
        head = fh.read(4)
    if len(head) < 4:
        return False
    magic = int.from_bytes(head, "little")
    return magic in _PCAP_MAGICS_LE


def _cmd_classify(args: argparse.Namespace) -> int:
    model = load_model(Path(args.model_file).read_text(encoding="utf-8"))
    path = Path(args.input)
    if _looks_like_pcap(path):
        capture = parse_capture(path.read_bytes())
        stats = ExtractionStats()
        rows = extract_capture(capture, raw_ack=args.raw_ack, stats=stats)
        _log(
            f"read {stats.frames_read} frames: {stats.non_ipv4_skipped} non-IPv4 skipped, "
            f"{stats.decode_errors} truncated/undecodable dropped"
        )
        from_pcap = True
    else:
        dataset = read_csv(path.read_text(encoding="utf-8"))
        rows = list(dataset.rows)
        from_pcap = False

    lines = ["row,predicted_class,confidence"]
    mac_votes: dict[str, Counter] = {}
    for i, row in enumerate(rows):
        values = row.values(model.schema)
        dist = model.distribution(values)
        best = max(range(len(dist)), key=lambda c: (dist[c], -c))
        predicted = model.class_names[best]
        lines.append(f"{i},{predicted},{float(dist[best]):.12g}")
        if from_pcap and row.src_mac is not None:
            mac_votes.setdefault(row.src_mac, Counter())[predicted] += 1
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _log(f"wrote {len(rows)} predictions to {args.out}")
    if from_pcap:
        print("mac,predicted_class,confidence,packets")
        for mac in sorted(mac_votes):
            votes = mac_votes[mac]
            top, top_count = max(sorted(votes.items()), key=lambda kv: kv[1])
            total = sum(votes.values())
            print(f"{mac},{top},{top_count / total:.12g},{total}")
    return 0


def _cmd_pipeline(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = _extract_to_dataset(args)
    (out_dir / "dataset.csv").write_text(write_csv(dataset), encoding="utf-8")
    _log(f"wrote {len(dataset.rows)} rows to {out_dir / 'dataset.csv'}")
    if args.classes == CLASS_DEVICE_TYPE:
        dataset = dataset.with_class_attribute(CLASS_DEVICE_TYPE)
    # dedup already applied during extraction
    return _train_eval_on_dataset(dataset, args, out_dir, apply_dedup=False)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "extract": _cmd_extract,
        "rank": _cmd_rank,
        "train-eval": _cmd_train_eval,
        "classify": _cmd_classify,
        "pipeline": _cmd_pipeline,
    }
    try:
        return handlers[args.command](args)
    except (DevfpError, ValueError, OSError) as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
