"""Two-step classification: informativeness gate, then information type.

The gate is a binary model over {Informative, NonInformative}. Only
reports it passes reach the type classifier, whose argmax can be
restricted to a configured label space; that restriction is how a model
trained on one election is applied to another election's narrower
category set without retraining.

A pipeline persists as a directory bundle of four JSON files whose
content hashes are recorded in the manifest, so a corrupted or
hand-edited bundle fails loudly at load time.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from .corpus import CorpusIndex, ElectionReport, InfoType, Informativeness
from .errors import (
    CorruptBundleError,
    ModelError,
    ProviderError,
    UnseenLabelError,
    VersionMismatchError,
)
from .features import DayStandardizer, FeatureConfig, featurize_report
from .models import LinearModel, load_model, predict, save_model

SCHEMA_VERSION = 1

GATE_LABELS = frozenset(
    {Informativeness.Informative.value, Informativeness.NonInformative.value}
)

_BUNDLE_FILES = ("gate.json", "typer.json", "config.json")


@dataclass
class Audit:
    """Mutable call counters for observing the gating behavior."""

    gate_calls: int = 0
    typer_calls: int = 0


@dataclass(frozen=True)
class Decision:
    report_id: str
    informativeness: str
    info_type: str | None
    gate_scores: dict[str, float]
    type_scores: dict[str, float] | None

    def to_json(self) -> dict:
        return {
            "report_id": self.report_id,
            "informativeness": self.informativeness,
            "info_type": self.info_type,
            "gate_scores": self.gate_scores,
            "type_scores": self.type_scores,
        }


@dataclass(frozen=True)
class TwoStepPipeline:
    gate: LinearModel
    typer: LinearModel
    feature_config: FeatureConfig
    standardizer: DayStandardizer
    election_date: date
    label_space: tuple[str, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if set(self.gate.labels) != GATE_LABELS:
            raise ModelError(f"gate labels must be {sorted(GATE_LABELS)}")
        valid_types = {t.value for t in InfoType}
        bad = set(self.typer.labels) - valid_types
        if bad:
            raise ModelError(f"typer labels outside the known types: {sorted(bad)}")
        if not self.label_space:
            raise ModelError("label_space cannot be empty")
        missing = set(self.label_space) - set(self.typer.labels)
        if missing:
            raise UnseenLabelError(
                f"label_space entries missing from typer: {sorted(missing)}"
            )


def masked_argmax(scores: np.ndarray, labels: tuple[str, ...], allowed) -> str:
    """Argmax over the allowed subset, first-in-declared-order on ties."""
    allowed = set(allowed)
    candidates = [i for i, lbl in enumerate(labels) if lbl in allowed]
    if not candidates:
        raise UnseenLabelError("no typer label is allowed by the label space")
    best = candidates[int(np.argmax(scores[candidates]))]
    return labels[best]


def classify(
    pipeline: TwoStepPipeline,
    report: ElectionReport,
    snapshot: CorpusIndex,
    provider,
    visible_ids=None,
    audit: Audit | None = None,
) -> Decision:
    """Gate first; the type model runs only on reports the gate passes."""
    try:
        fv = featurize_report(
            report,
            snapshot,
            provider,
            pipeline.election_date,
            pipeline.standardizer,
            pipeline.feature_config,
            visible_ids,
        )
    except ProviderError as exc:
        raise ProviderError(f"report {report.id}: {exc}") from exc
    x = fv.to_array(pipeline.feature_config)[None, :]
    if audit is not None:
        audit.gate_calls += 1
    gate_labels, gate_scores = predict(pipeline.gate, x)
    gate_row = {lbl: float(s) for lbl, s in zip(pipeline.gate.labels, gate_scores[0])}
    if gate_labels[0] == Informativeness.NonInformative.value:
        return Decision(
            report_id=report.id,
            informativeness=Informativeness.NonInformative.value,
            info_type=None,
            gate_scores=gate_row,
            type_scores=None,
        )
    if audit is not None:
        audit.typer_calls += 1
    _, type_scores = predict(pipeline.typer, x)
    picked = masked_argmax(type_scores[0], pipeline.typer.labels, pipeline.label_space)
    type_row = {lbl: float(s) for lbl, s in zip(pipeline.typer.labels, type_scores[0])}
    return Decision(
        report_id=report.id,
        informativeness=Informativeness.Informative.value,
        info_type=picked,
        gate_scores=gate_row,
        type_scores=type_row,
    )


def classify_batch(
    pipeline: TwoStepPipeline,
    reports: list[ElectionReport],
    snapshot: CorpusIndex,
    provider,
    visible_ids=None,
    audit: Audit | None = None,
) -> list[Decision]:
    return [
        classify(pipeline, r, snapshot, provider, visible_ids, audit) for r in reports
    ]


def _config_payload(pipeline: TwoStepPipeline) -> dict:
    fc = pipeline.feature_config
    return {
        "schema_version": SCHEMA_VERSION,
        "feature_config": {
            "use_text": fc.use_text,
            "use_context": fc.use_context,
            "use_temporal": fc.use_temporal,
            "use_sentiment": fc.use_sentiment,
            "context_k": fc.context_k,
        },
        "standardizer": {
            "mean": pipeline.standardizer.mean,
            "std": pipeline.standardizer.std,
        },
        "election_date": pipeline.election_date.isoformat(),
        "label_space": list(pipeline.label_space),
        "provenance": pipeline.provenance,
    }


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def save_pipeline(pipeline: TwoStepPipeline, path: str | Path) -> None:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    save_model(pipeline.gate, out / "gate.json")
    save_model(pipeline.typer, out / "typer.json")
    (out / "config.json").write_text(
        json.dumps(_config_payload(pipeline), sort_keys=True, separators=(",", ":")),
        encoding="utf-8",
    )
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "files": {name: _sha256_file(out / name) for name in _BUNDLE_FILES},
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, separators=(",", ":")), encoding="utf-8"
    )


def load_pipeline(path: str | Path) -> TwoStepPipeline:
    root = Path(path)
    try:
        manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise CorruptBundleError(f"cannot read bundle manifest in {root}: {exc}") from exc
    version = manifest.get("schema_version")
    if version != SCHEMA_VERSION:
        raise VersionMismatchError(found=version, supported=SCHEMA_VERSION)
    for name in _BUNDLE_FILES:
        target = root / name
        if not target.is_file():
            raise CorruptBundleError(f"bundle file missing: {target}")
        expected = manifest.get("files", {}).get(name)
        actual = _sha256_file(target)
        if expected != actual:
            raise CorruptBundleError(
                f"bundle file {name} hash mismatch: manifest {expected}, found {actual}"
            )
    try:
        config = json.loads((root / "config.json").read_text(encoding="utf-8"))
        fc = FeatureConfig(**config["feature_config"])
        standardizer = DayStandardizer(**config["standardizer"])
        election_date = date.fromisoformat(config["election_date"])
        label_space = tuple(config["label_space"])
        provenance = dict(config.get("provenance") or {})
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptBundleError(f"bundle config invalid in {root}: {exc}") from exc
    return TwoStepPipeline(
        gate=load_model(root / "gate.json"),
        typer=load_model(root / "typer.json"),
        feature_config=fc,
        standardizer=standardizer,
        election_date=election_date,
        label_space=label_space,
        provenance=provenance,
    )
