"""Experiment harness: splits, metrics, multi-run and transfer protocols.

Everything here is deterministic given its seed arguments. Splits are
stratified per class with largest-remainder rounding, so per-class
counts never drift more than one report from the exact ratio quota.
Metrics come from a single confusion matrix; language sub-reports are
computed over the same label list so their matrices sum elementwise to
the overall one.

The transfer protocols mirror a deployment question: a pipeline trained
on one election is applied to another election's reports, either with
no target examples (zero-shot, label-space masked) or with a small
stratified sample (few-shot, scratch or warm-start).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from .corpus import CorpusIndex, ElectionReport
from .errors import ConfigError, DataError, ModelError, UnseenLabelError
from .features import assemble_features
from .models import Hyper, predict, train_logreg, warm_start_train
from .pipeline import TwoStepPipeline, masked_argmax

DEFAULT_RATIOS = (0.7, 0.1, 0.2)

PARTS = ("train", "dev", "test")

ERROR_TAGS = (
    "annotator_error",
    "clear_lexical",
    "ambiguous_category",
    "co_present",
    "political_context",
    "multimodal_context",
)


@dataclass(frozen=True)
class SplitAssignment:
    assignment: dict[str, str]
    seed: int
    ratios: tuple[float, float, float]

    def ids(self, part: str) -> list[str]:
        if part not in PARTS:
            raise ConfigError(f"unknown split part {part!r}")
        return [i for i, p in self.assignment.items() if p == part]


def _largest_remainder(total: int, ratios: tuple[float, ...]) -> list[int]:
    """Integer quotas summing to total, one per ratio, remainder-corrected.

    Ties on the fractional part resolve to the earlier position, so the
    allocation is deterministic.
    """
    quotas = [r * total for r in ratios]
    base = [math.floor(q) for q in quotas]
    leftover = total - sum(base)
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:leftover]:
        base[i] += 1
    return base


def stratified_split(
    labels: dict[str, str],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> SplitAssignment:
    """Per-class largest-remainder split into train/dev/test."""
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ConfigError("ratios must be three non-negative numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"ratios must sum to 1, got {sum(ratios)}")
    by_class: dict[str, list[str]] = {}
    for rid, lbl in labels.items():
        by_class.setdefault(str(lbl), []).append(rid)
    for lbl, ids in by_class.items():
        if len(ids) < 3:
            raise DataError(f"class {lbl!r} has {len(ids)} members; need at least 3")
    rng = np.random.default_rng(seed)
    assignment: dict[str, str] = {}
    for lbl in sorted(by_class):
        ids = sorted(by_class[lbl])
        perm = rng.permutation(len(ids))
        shuffled = [ids[i] for i in perm]
        counts = _largest_remainder(len(ids), ratios)
        cursor = 0
        for part, count in zip(PARTS, counts):
            for rid in shuffled[cursor : cursor + count]:
                assignment[rid] = part
            cursor += count
    # report listing keeps the caller's corpus order
    ordered = {rid: assignment[rid] for rid in labels}
    return SplitAssignment(assignment=ordered, seed=seed, ratios=tuple(ratios))


@dataclass(frozen=True)
class EvalReport:
    labels: tuple[str, ...]
    confusion: np.ndarray
    accuracy: float
    per_class: dict[str, dict[str, float]]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    language_reports: dict[str, "EvalReport"] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "per_class": self.per_class,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "languages": {
                lang: sub.to_json() for lang, sub in self.language_reports.items()
            },
            "meta": self.meta,
        }


def _confusion_report(
    ids: list[str],
    predictions: dict[str, str],
    gold: dict[str, str],
    labels: tuple[str, ...],
    meta: dict | None = None,
) -> EvalReport:
    index = {lbl: i for i, lbl in enumerate(labels)}
    K = len(labels)
    confusion = np.zeros((K, K), dtype=np.int64)
    for rid in ids:
        confusion[index[gold[rid]], index[predictions[rid]]] += 1
    total = confusion.sum()
    accuracy = float(np.trace(confusion) / total) if total else 0.0
    per_class: dict[str, dict[str, float]] = {}
    f1s, precs, recs = [], [], []
    for i, lbl in enumerate(labels):
        tp = float(confusion[i, i])
        fp = float(confusion[:, i].sum() - confusion[i, i])
        fn = float(confusion[i, :].sum() - confusion[i, i])
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class[lbl] = {"precision": precision, "recall": recall, "f1": f1}
        precs.append(precision)
        recs.append(recall)
        f1s.append(f1)
    return EvalReport(
        labels=labels,
        confusion=confusion,
        accuracy=accuracy,
        per_class=per_class,
        macro_precision=float(np.mean(precs)) if precs else 0.0,
        macro_recall=float(np.mean(recs)) if recs else 0.0,
        macro_f1=float(np.mean(f1s)) if f1s else 0.0,
        meta=meta or {},
    )


def evaluate(
    predictions: dict[str, str],
    gold: dict[str, str],
    languages: dict[str, str] | None = None,
    labels: tuple[str, ...] | None = None,
    meta: dict | None = None,
) -> EvalReport:
    """Confusion-matrix metrics, with per-language sub-reports when given.

    Sub-reports reuse the overall label list, so their confusion matrices
    sum elementwise to the overall matrix.
    """
    if set(predictions) != set(gold):
        raise DataError("prediction and gold id sets differ")
    if labels is None:
        labels = tuple(sorted(set(gold.values()) | set(predictions.values())))
    ids = list(gold)
    report = _confusion_report(ids, predictions, gold, labels, meta)
    if languages is None:
        return report
    missing = set(ids) - set(languages)
    if missing:
        raise DataError(f"language missing for {len(missing)} evaluated ids")
    groups: dict[str, list[str]] = {}
    for rid in ids:
        groups.setdefault(str(languages[rid]), []).append(rid)
    subs = {
        lang: _confusion_report(group, predictions, gold, labels)
        for lang, group in sorted(groups.items())
    }
    return EvalReport(
        labels=report.labels,
        confusion=report.confusion,
        accuracy=report.accuracy,
        per_class=report.per_class,
        macro_precision=report.macro_precision,
        macro_recall=report.macro_recall,
        macro_f1=report.macro_f1,
        language_reports=subs,
        meta=report.meta,
    )


@dataclass(frozen=True)
class MultiRunResult:
    runs: list[EvalReport]
    seeds: list[int]
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class: dict[str, dict[str, float]]

    def to_json(self) -> dict:
        return {
            "n_runs": len(self.runs),
            "seeds": self.seeds,
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "per_class": self.per_class,
            "runs": [r.to_json() for r in self.runs],
        }


def multi_run(run_single, base_seed: int = 0, n: int = 3) -> MultiRunResult:
    """Average n runs differing only in seed = base_seed + run index.

    run_single(seed) must return an EvalReport; a failing run aborts the
    protocol with its index attached.
    """
    if n < 1:
        raise ConfigError("multi_run needs n >= 1")
    seeds = [base_seed + i for i in range(n)]
    runs: list[EvalReport] = []
    for i, seed in enumerate(seeds):
        try:
            runs.append(run_single(seed))
        except Exception as exc:
            message = f"run {i} (seed {seed}) failed: {exc}"
            try:
                wrapped = type(exc)(message)
            except TypeError:
                wrapped = RuntimeError(message)
            raise wrapped from exc
    label_sets = {r.labels for r in runs}
    if len(label_sets) != 1:
        raise DataError("runs produced different label sets; cannot average")
    labels = runs[0].labels
    per_class = {
        lbl: {
            key: float(np.mean([r.per_class[lbl][key] for r in runs]))
            for key in ("precision", "recall", "f1")
        }
        for lbl in labels
    }
    return MultiRunResult(
        runs=runs,
        seeds=seeds,
        accuracy=float(np.mean([r.accuracy for r in runs])),
        macro_precision=float(np.mean([r.macro_precision for r in runs])),
        macro_recall=float(np.mean([r.macro_recall for r in runs])),
        macro_f1=float(np.mean([r.macro_f1 for r in runs])),
        per_class=per_class,
    )


def _typer_predictions(
    pipeline: TwoStepPipeline,
    reports: list[ElectionReport],
    index: CorpusIndex,
    provider,
    label_space: tuple[str, ...],
    election_date: date,
) -> dict[str, str]:
    X = assemble_features(
        reports,
        index,
        provider,
        election_date,
        pipeline.standardizer,
        pipeline.feature_config,
        visible_ids=None,
    )
    _, scores = predict(pipeline.typer, X)
    return {
        r.id: masked_argmax(scores[i], pipeline.typer.labels, label_space)
        for i, r in enumerate(reports)
    }


def zero_shot_eval(
    pipeline: TwoStepPipeline,
    reports: list[ElectionReport],
    gold: dict[str, str],
    provider,
    label_space: tuple[str, ...] | None = None,
    election_date: date | None = None,
    languages: dict[str, str] | None = None,
) -> EvalReport:
    """Apply a trained type classifier to another election unchanged.

    The argmax is masked to the target label space; parameters must be
    bit-identical before and after, which is asserted by hash.
    """
    label_space = tuple(label_space or pipeline.label_space)
    unseen = set(gold.values()) - set(pipeline.typer.labels)
    if unseen:
        raise UnseenLabelError(
            f"target labels outside the source model: {sorted(unseen)}"
        )
    election_date = election_date or pipeline.election_date
    index = CorpusIndex(reports)
    eval_reports = [r for r in reports if r.id in gold]
    before = pipeline.typer.param_hash()
    predictions = _typer_predictions(
        pipeline, eval_reports, index, provider, label_space, election_date
    )
    after = pipeline.typer.param_hash()
    if before != after:
        raise ModelError("zero-shot evaluation mutated model parameters")
    meta = {"protocol": "zero_shot", "param_hash": before, "label_space": list(label_space)}
    return evaluate(predictions, gold, languages=languages, meta=meta)


def _stratified_sample(
    gold: dict[str, str], total: int, rng: np.random.Generator
) -> list[str]:
    by_class: dict[str, list[str]] = {}
    for rid, lbl in gold.items():
        by_class.setdefault(str(lbl), []).append(rid)
    classes = sorted(by_class)
    quotas = _largest_remainder_weighted(
        total, [len(by_class[c]) for c in classes], len(gold)
    )
    sampled: list[str] = []
    for lbl, quota in zip(classes, quotas):
        ids = sorted(by_class[lbl])
        perm = rng.permutation(len(ids))
        sampled.extend(ids[i] for i in perm[:quota])
    return sampled


def _largest_remainder_weighted(total: int, counts: list[int], n: int) -> list[int]:
    quotas = [total * c / n for c in counts]
    base = [math.floor(q) for q in quotas]
    leftover = total - sum(base)
    order = sorted(range(len(counts)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:leftover]:
        base[i] = min(base[i] + 1, counts[i])
    return base


def few_shot_protocol(
    pipeline: TwoStepPipeline,
    reports: list[ElectionReport],
    gold: dict[str, str],
    provider,
    fraction: float = 0.10,
    seed: int = 0,
    strategy: str = "scratch",
    stratified: bool = True,
    hyper: Hyper | None = None,
    label_space: tuple[str, ...] | None = None,
    election_date: date | None = None,
    languages: dict[str, str] | None = None,
) -> tuple[EvalReport, dict]:
    """Adapt to a target election with a small labeled sample.

    The sample holds round(fraction * N) reports; the remainder is the
    hold-out set. strategy "scratch" trains a fresh type classifier on
    the sample alone; "warm_start" continues descent from the source
    pipeline's classifier. Classes absent from the sample are recorded
    as coverage warnings.
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigError("fraction must lie strictly between 0 and 1")
    if strategy not in ("scratch", "warm_start"):
        raise ConfigError(f"unknown strategy {strategy!r}")
    election_date = election_date or pipeline.election_date
    label_space = tuple(label_space or sorted(set(gold.values())))
    total = int(round(fraction * len(gold)))
    rng = np.random.default_rng(seed)
    if stratified:
        sampled = _stratified_sample(gold, total, rng)
    else:
        all_ids = sorted(gold)
        perm = rng.permutation(len(all_ids))
        sampled = [all_ids[i] for i in perm[:total]]
    sampled_set = set(sampled)
    holdout = [rid for rid in gold if rid not in sampled_set]
    warnings = sorted(
        {str(lbl) for lbl in gold.values()}
        - {str(gold[rid]) for rid in sampled}
    )
    index = CorpusIndex(reports)
    by_id = {r.id: r for r in reports}
    sample_reports = [by_id[rid] for rid in sampled]
    y_sample = [gold[rid] for rid in sampled]
    X_sample = assemble_features(
        sample_reports,
        index,
        provider,
        election_date,
        pipeline.standardizer,
        pipeline.feature_config,
        visible_ids=sampled_set,
    )
    if strategy == "scratch":
        model = train_logreg(X_sample, y_sample, hyper=hyper)
        allowed = tuple(lbl for lbl in label_space if lbl in model.labels)
    else:
        model = warm_start_train(pipeline.typer, X_sample, y_sample, hyper=hyper)
        allowed = tuple(lbl for lbl in label_space if lbl in model.labels)
    holdout_reports = [by_id[rid] for rid in holdout]
    X_hold = assemble_features(
        holdout_reports,
        index,
        provider,
        election_date,
        pipeline.standardizer,
        pipeline.feature_config,
        visible_ids=None,
    )
    _, scores = predict(model, X_hold)
    predictions = {
        r.id: masked_argmax(scores[i], model.labels, allowed)
        for i, r in enumerate(holdout_reports)
    }
    gold_hold = {rid: gold[rid] for rid in holdout}
    meta = {
        "protocol": "few_shot",
        "strategy": strategy,
        "fraction": fraction,
        "seed": seed,
        "sample_size": len(sampled),
    }
    report = evaluate(
        predictions,
        gold_hold,
        languages={rid: languages[rid] for rid in holdout} if languages else None,
        meta=meta,
    )
    manifest = {
        "sampled_ids": sorted(sampled),
        "sample_size": len(sampled),
        "fraction": fraction,
        "seed": seed,
        "strategy": strategy,
        "stratified": stratified,
        "coverage_warnings": warnings,
    }
    return report, manifest


def export_errors(
    predictions: dict[str, str],
    gold: dict[str, str],
    corpus: dict[str, ElectionReport],
    path: str | Path,
    scores: dict[str, dict[str, float]] | None = None,
) -> int:
    """Write one JSONL record per misclassification; returns record count."""
    if set(predictions) != set(gold):
        raise DataError("prediction and gold id sets differ")
    records = []
    for rid in sorted(gold):
        if predictions[rid] == gold[rid]:
            continue
        report = corpus.get(rid)
        records.append(
            {
                "id": rid,
                "text": report.text if report else "",
                "gold": gold[rid],
                "predicted": predictions[rid],
                "scores": (scores or {}).get(rid),
                "language": report.language.value if report else "unknown",
                "tag": "untagged",
            }
        )
    Path(path).write_text(
        "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in records),
        encoding="utf-8",
    )
    return len(records)


def taxonomy_summary(tagged_file: str | Path) -> dict[str, float]:
    """Percentage of each error category over the tagged records.

    Records still marked untagged are excluded from the denominator; an
    empty or fully untagged file yields an all-zero distribution.
    """
    counts = {tag: 0 for tag in ERROR_TAGS}
    tagged_total = 0
    for lineno, line in enumerate(
        Path(tagged_file).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        record = json.loads(line)
        tag = record.get("tag", "untagged")
        if tag == "untagged":
            continue
        if tag not in counts:
            raise DataError(f"unknown error tag {tag!r} at line {lineno}")
        counts[tag] += 1
        tagged_total += 1
    if tagged_total == 0:
        return {tag: 0.0 for tag in ERROR_TAGS}
    return {tag: 100.0 * counts[tag] / tagged_total for tag in ERROR_TAGS}
