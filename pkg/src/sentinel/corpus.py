"""Data model, ingestion, filtering, and taxonomy normalization for election reports.

A corpus is a list of :class:`ElectionReport` rows loaded from CSV or JSONL.
Raw source-taxonomy labels are normalized to the canonical informativeness /
information-type scheme through a :class:`Deployment` mapping, so that corpora
from different monitoring deployments become comparable.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from enum import Enum
from pathlib import Path

from .errors import DataError, UnmappedLabelError


class Channel(str, Enum):
    sms = "sms"
    whatsapp = "whatsapp"
    twitter = "twitter"
    web = "web"
    ussd = "ussd"
    unknown = "unknown"


class Language(str, Enum):
    en = "en"
    sw = "sw"
    other = "other"
    unknown = "unknown"


class InfoType(str, Enum):
    """Canonical information types for informative reports."""

    PoliticalRallies = "PoliticalRallies"
    VotingIssues = "VotingIssues"
    CountingResults = "CountingResults"
    PositiveEvents = "PositiveEvents"
    SecurityIssues = "SecurityIssues"


class Informativeness(str, Enum):
    Informative = "Informative"
    NonInformative = "NonInformative"
    Excluded = "Excluded"


#: Deployment-mapping sentinel values (see the mapping file schema).
EXCLUDED = "EXCLUDED"
NONINFORMATIVE = "NONINFORMATIVE"

MIN_TIMESTAMP = datetime(2000, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class ElectionReport:
    """One crowdsourced observation."""

    id: str
    text: str
    timestamp: datetime
    channel: Channel
    language: Language
    deployment: str
    raw_label: str | None = None
    has_media: bool = False


@dataclass(frozen=True)
class LabelAssignment:
    """Derived informativeness flag plus canonical information type.

    ``info_type`` is present exactly when ``informative`` is Informative.
    """

    report_id: str
    informative: Informativeness
    info_type: InfoType | None = None

    def __post_init__(self):
        has_type = self.info_type is not None
        if (self.informative is Informativeness.Informative) != has_type:
            raise DataError(
                f"report {self.report_id}: info_type must be present iff informative"
            )


@dataclass(frozen=True)
class Deployment:
    """One election deployment and its label-normalization mapping.

    ``mapping`` sends every source-taxonomy label to a canonical
    :class:`InfoType` name, or to the sentinels ``EXCLUDED`` /
    ``NONINFORMATIVE``. The taxonomy is the mapping's key set, so the
    mapping is total over it by construction.
    """

    name: str
    election_date: date
    mapping: dict[str, str]

    @property
    def taxonomy(self) -> frozenset[str]:
        return frozenset(self.mapping)

    def __post_init__(self):
        valid = {t.value for t in InfoType} | {EXCLUDED, NONINFORMATIVE}
        for src, dst in self.mapping.items():
            if dst not in valid:
                raise DataError(
                    f"deployment {self.name!r}: {src!r} maps to unknown target {dst!r}"
                )


def kenya_deployment(election_date: date = date(2022, 8, 9)) -> Deployment:
    """Built-in mapping for the Kenyan deployments.

    Voting, staffing, and polling-station administration issues merge into a
    single VotingIssues type; media reports are excluded outright because
    their label is assigned from a source list, not from content.
    """
    return Deployment(
        name="kenya",
        election_date=election_date,
        mapping={
            "Voting Issues": InfoType.VotingIssues.value,
            "Staffing Issues": InfoType.VotingIssues.value,
            "Polling Station Administration": InfoType.VotingIssues.value,
            "Security Issues": InfoType.SecurityIssues.value,
            "Counting and Results": InfoType.CountingResults.value,
            "Positive Events": InfoType.PositiveEvents.value,
            "Political Rallies": InfoType.PoliticalRallies.value,
            "Opinions or Others": NONINFORMATIVE,
            "Media Reports": EXCLUDED,
        },
    )


def nigeria_deployment(election_date: date = date(2023, 2, 25)) -> Deployment:
    """Built-in mapping for the Nigerian deployment.

    Same-name labels map one-to-one; the rest map by content similarity.
    This taxonomy has no Political Rallies label and no non-informative
    category.
    """
    return Deployment(
        name="nigeria",
        election_date=election_date,
        mapping={
            "Positive Events": InfoType.PositiveEvents.value,
            "Security Issues": InfoType.SecurityIssues.value,
            "Sorting, Counting, and Collation": InfoType.CountingResults.value,
            "Ballot Issues": InfoType.VotingIssues.value,
            "Polling Station Administration Issues": InfoType.VotingIssues.value,
        },
    )


def load_deployment(path: str | Path) -> Deployment:
    """Load a deployment mapping file: JSON {deployment, election_date, mapping}."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read deployment file {path}: {exc}") from exc
    try:
        return Deployment(
            name=payload["deployment"],
            election_date=date.fromisoformat(payload["election_date"]),
            mapping=dict(payload["mapping"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed deployment file {path}: {exc}") from exc


@dataclass(frozen=True)
class MalformedRecord:
    """One rejected input row, kept for diagnostics instead of being dropped silently."""

    line: int
    reason: str
    raw: str = ""


@dataclass
class LoadResult:
    reports: list[ElectionReport]
    malformed: list[MalformedRecord] = field(default_factory=list)


_REQUIRED_FIELDS = ("id", "text", "timestamp", "channel", "language", "deployment")


def _parse_timestamp(value: str) -> datetime:
    ts = datetime.fromisoformat(str(value).replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    else:
        ts = ts.astimezone(timezone.utc)
    if ts < MIN_TIMESTAMP:
        raise ValueError(f"timestamp {value!r} predates year 2000")
    return ts


def _parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "1", "yes"):
        return True
    if text in ("false", "0", "no", ""):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _record_to_report(record: dict, seen_ids: set[str]) -> ElectionReport:
    for key in _REQUIRED_FIELDS:
        if record.get(key) in (None, ""):
            if key == "text":
                continue  # empty text is legal pre-filter
            raise ValueError(f"missing field {key!r}")
    report_id = str(record["id"])
    if report_id in seen_ids:
        raise ValueError(f"duplicate id {report_id!r}")
    raw_label = record.get("raw_label")
    if raw_label is not None:
        raw_label = str(raw_label)
        if not raw_label.strip():
            raw_label = None
    return ElectionReport(
        id=report_id,
        text=str(record.get("text") or ""),
        timestamp=_parse_timestamp(record["timestamp"]),
        channel=Channel(str(record["channel"])),
        language=Language(str(record["language"])),
        deployment=str(record["deployment"]),
        raw_label=raw_label,
        has_media=_parse_bool(record.get("has_media", False)),
    )


def load_reports(path: str | Path, format: str = "jsonl") -> LoadResult:
    """Load election reports from a CSV or JSONL file.

    File order is preserved. Malformed rows are collected into
    ``LoadResult.malformed`` with 1-based line numbers; they never raise and
    are never silently dropped.
    """
    path = Path(path)
    if format not in ("csv", "jsonl"):
        raise DataError(f"unknown corpus format {format!r} (expected csv or jsonl)")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path}: {exc}") from exc

    result = LoadResult(reports=[])
    seen_ids: set[str] = set()

    if format == "jsonl":
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError("row is not a JSON object")
                report = _record_to_report(record, seen_ids)
            except (ValueError, KeyError) as exc:
                result.malformed.append(MalformedRecord(lineno, str(exc), line[:200]))
                continue
            seen_ids.add(report.id)
            result.reports.append(report)
    else:
        reader = csv.DictReader(text.splitlines())
        # line 1 is the header; DictReader rows start at line 2
        for lineno, record in enumerate(reader, start=2):
            try:
                report = _record_to_report(dict(record), seen_ids)
            except (ValueError, KeyError) as exc:
                result.malformed.append(MalformedRecord(lineno, str(exc)))
                continue
            seen_ids.add(report.id)
            result.reports.append(report)
    return result


#: Audit reasons used by filter_corpus, in the order they are checked.
DROP_UNLABELLED = "unlabelled"
DROP_MISSING_TEXT = "missing_text"
DROP_USSD = "ussd"
DROP_BAD_TIMESTAMP = "bad_timestamp"
DROP_DUPLICATE = "duplicate"


@dataclass(frozen=True)
class DroppedReport:
    report: ElectionReport
    reason: str


@dataclass
class FilterResult:
    kept: list[ElectionReport]
    dropped: list[DroppedReport]


def _dedup_key(report: ElectionReport) -> tuple[str, str]:
    # Exact match on whitespace-normalized text plus the raw label.
    return (" ".join(report.text.split()), report.raw_label or "")


def filter_corpus(reports: list[ElectionReport]) -> FilterResult:
    """Drop unlabelled, empty-text, USSD, bad-timestamp, and duplicate reports.

    Duplicates share (whitespace-normalized text, raw_label); the earliest
    timestamp wins, with input order breaking ties. Every input report lands
    in exactly one of ``kept`` / ``dropped``, and filtering is idempotent.
    """
    dropped: list[DroppedReport] = []
    survivors: list[tuple[int, ElectionReport]] = []
    for pos, report in enumerate(reports):
        if report.raw_label is None:
            dropped.append(DroppedReport(report, DROP_UNLABELLED))
        elif not report.text.strip():
            dropped.append(DroppedReport(report, DROP_MISSING_TEXT))
        elif report.channel is Channel.ussd:
            dropped.append(DroppedReport(report, DROP_USSD))
        elif report.timestamp < MIN_TIMESTAMP:
            dropped.append(DroppedReport(report, DROP_BAD_TIMESTAMP))
        else:
            survivors.append((pos, report))

    winners: dict[tuple[str, str], tuple[datetime, int]] = {}
    for pos, report in survivors:
        key = _dedup_key(report)
        best = winners.get(key)
        if best is None or (report.timestamp, pos) < best:
            winners[key] = (report.timestamp, pos)

    kept: list[ElectionReport] = []
    for pos, report in survivors:
        if winners[_dedup_key(report)][1] == pos:
            kept.append(report)
        else:
            dropped.append(DroppedReport(report, DROP_DUPLICATE))
    return FilterResult(kept=kept, dropped=dropped)


def derive_labels(report: ElectionReport, deployment: Deployment) -> LabelAssignment:
    """Normalize one report's raw label through the deployment mapping."""
    if report.raw_label is None:
        raise DataError(f"report {report.id} has no raw label; filter the corpus first")
    try:
        target = deployment.mapping[report.raw_label]
    except KeyError:
        raise UnmappedLabelError(report.raw_label, deployment.name) from None
    if target == EXCLUDED:
        return LabelAssignment(report.id, Informativeness.Excluded)
    if target == NONINFORMATIVE:
        return LabelAssignment(report.id, Informativeness.NonInformative)
    return LabelAssignment(report.id, Informativeness.Informative, InfoType(target))


class CorpusIndex:
    """Immutable snapshot of a corpus: id lookup plus a stable time order.

    Reports are ordered by (timestamp, id) so context windows are
    deterministic even when timestamps collide. Safe to share across threads.
    """

    def __init__(self, reports: list[ElectionReport]):
        ordered = sorted(reports, key=lambda r: (r.timestamp, r.id))
        by_id: dict[str, ElectionReport] = {}
        for report in ordered:
            if report.id in by_id:
                raise DataError(f"duplicate report id {report.id!r} in corpus")
            by_id[report.id] = report
        self._ordered: tuple[ElectionReport, ...] = tuple(ordered)
        self._by_id = by_id
        self._position = {r.id: i for i, r in enumerate(ordered)}

    def __len__(self) -> int:
        return len(self._ordered)

    def __iter__(self):
        return iter(self._ordered)

    def __contains__(self, report_id: str) -> bool:
        return report_id in self._by_id

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self._ordered]

    def get(self, report_id: str) -> ElectionReport:
        try:
            return self._by_id[report_id]
        except KeyError:
            raise DataError(f"report id {report_id!r} not in corpus") from None

    def position(self, report_id: str) -> int:
        self.get(report_id)
        return self._position[report_id]

    @property
    def ordered(self) -> tuple[ElectionReport, ...]:
        return self._ordered
