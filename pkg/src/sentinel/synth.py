"""Synthetic election-report corpora with planted, controllable signal.

Real crowdsourced election datasets are access-restricted, so the test
and demo path generates its own: each category gets a token vocabulary,
an embedding cluster (a class-specific sign pattern scaled to a small
per-dimension offset, plus unit noise), a sentiment tilt, and a
characteristic time-of-day and day-offset profile around election day.

Two signal modes:
  full           lexical + embedding + sentiment + temporal signal
  temporal_only  classes differ in timestamps alone; embeddings and
                 sentiment are class-blind noise

Class signatures are drawn from a dedicated signature seed, independent
of the corpus seed, so corpora generated with different seeds (for
example a source and a transfer target) share the same class geometry.

Every text ends in a unique station token, which keeps texts distinct
under deduplication and gives every report its own fixture entry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .corpus import (
    Channel,
    Deployment,
    ElectionReport,
    InfoType,
    Language,
    NONINFORMATIVE,
)
from .errors import ConfigError
from .providers import EMBEDDING_DIM, content_hash

NONINF = "NonInformative"

DEFAULT_TYPE_MIX = {
    InfoType.PositiveEvents.value: 0.28,
    InfoType.VotingIssues.value: 0.24,
    InfoType.CountingResults.value: 0.20,
    InfoType.SecurityIssues.value: 0.16,
    InfoType.PoliticalRallies.value: 0.12,
}

_CLASS_VOCAB = {
    InfoType.PoliticalRallies.value: (
        "rally march crowd supporters campaign chanting procession roadshow "
        "convoy banners"
    ).split(),
    InfoType.VotingIssues.value: (
        "queue ballot missing register delay station opened late materials "
        "scanner stuck"
    ).split(),
    InfoType.CountingResults.value: (
        "tally count results forms announced totals verification stream "
        "declared agents"
    ).split(),
    InfoType.PositiveEvents.value: (
        "peaceful calm orderly smooth friendly celebration assisted elders "
        "singing cooperative"
    ).split(),
    InfoType.SecurityIssues.value: (
        "police clash violence intimidation weapons fight chaos injured "
        "teargas scuffle"
    ).split(),
    NONINF: (
        "opinion think hope luck prayers best feeling song meme weather "
        "joke random"
    ).split(),
}

_NEUTRAL_VOCAB = (
    "report update info note message status observation entry record "
    "item detail activity"
).split()

_SHARED_FILLERS = "the at in reported observers today area ward near from".split()

# (hour center, day-offset center, day-offset spread)
_TEMPORAL_PROFILE = {
    InfoType.PoliticalRallies.value: (6, -5.0, 1.2),
    InfoType.VotingIssues.value: (10, 0.0, 0.6),
    InfoType.PositiveEvents.value: (14, 0.0, 1.0),
    InfoType.CountingResults.value: (19, 1.0, 0.6),
    InfoType.SecurityIssues.value: (23, 2.0, 1.0),
    NONINF: (12, 0.0, 5.0),
}

_SENTIMENT_ALPHA = {
    InfoType.PoliticalRallies.value: (4.0, 5.0, 3.0),
    InfoType.VotingIssues.value: (2.0, 5.0, 5.0),
    InfoType.CountingResults.value: (3.0, 6.0, 3.0),
    InfoType.PositiveEvents.value: (8.0, 3.0, 1.0),
    InfoType.SecurityIssues.value: (1.0, 3.0, 8.0),
    NONINF: (2.0, 8.0, 2.0),
}

_NEUTRAL_ALPHA = (2.0, 6.0, 2.0)

_CHANNELS = (Channel.sms, Channel.whatsapp, Channel.twitter, Channel.web)

EMBEDDING_OFFSET = 0.15


@dataclass(frozen=True)
class SynthSpec:
    n_reports: int = 5000
    seed: int = 0
    election_date: date = date(2022, 8, 9)
    deployment: str = "SYNTH"
    signal: str = "full"
    signature_seed: int = 7
    noninformative_share: float = 0.40
    type_mix: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TYPE_MIX))
    model_tag: str = "synthetic-v1"
    swahili_share: float = 0.16

    def __post_init__(self):
        if self.signal not in ("full", "temporal_only"):
            raise ConfigError(f"unknown signal mode {self.signal!r}")
        if not 0.0 <= self.noninformative_share < 1.0:
            raise ConfigError("noninformative_share must be in [0, 1)")
        if self.n_reports < 1:
            raise ConfigError("n_reports must be positive")
        bad = set(self.type_mix) - {t.value for t in InfoType}
        if bad:
            raise ConfigError(f"unknown info types in mix: {sorted(bad)}")
        total = sum(self.type_mix.values())
        if total <= 0:
            raise ConfigError("type_mix proportions must sum to a positive value")


@dataclass(frozen=True)
class SynthResult:
    reports: list[ElectionReport]
    gold_informativeness: dict[str, str]
    gold_type: dict[str, str]
    fixtures: list[dict]
    deployment: Deployment


def synthetic_deployment(spec: SynthSpec) -> Deployment:
    mapping = {t.value: t.value for t in InfoType}
    mapping[NONINF] = NONINFORMATIVE
    return Deployment(
        name=spec.deployment,
        election_date=spec.election_date,
        mapping=mapping,
    )


def _class_signatures(signature_seed: int, classes: list[str]) -> dict[str, np.ndarray]:
    """Per-class embedding mean: a fixed random sign pattern per class.

    Drawn from a dedicated generator so corpora with different corpus
    seeds still share geometry class by class.
    """
    rng = np.random.default_rng(signature_seed)
    signatures = {}
    for lbl in sorted(set(_CLASS_VOCAB) | set(classes)):
        signs = rng.choice([-1.0, 1.0], size=EMBEDDING_DIM)
        if lbl in classes:
            signatures[lbl] = signs * EMBEDDING_OFFSET
    return signatures


def _class_counts(spec: SynthSpec) -> dict[str, int]:
    mix_total = sum(spec.type_mix.values())
    informative = spec.n_reports - int(round(spec.n_reports * spec.noninformative_share))
    quotas = {
        lbl: informative * share / mix_total for lbl, share in sorted(spec.type_mix.items())
    }
    counts = {lbl: int(q) for lbl, q in quotas.items()}
    leftover = informative - sum(counts.values())
    order = sorted(quotas, key=lambda lbl: (-(quotas[lbl] - counts[lbl]), lbl))
    for lbl in order[:leftover]:
        counts[lbl] += 1
    counts[NONINF] = spec.n_reports - informative
    return {lbl: c for lbl, c in counts.items() if c > 0}


def _station_token(i: int) -> str:
    digits = "abcdefghijklmnopqrstuvwxyz"
    code = []
    i += 1
    while i:
        i, rem = divmod(i, len(digits))
        code.append(digits[rem])
    return "st" + "".join(reversed(code))


def generate(spec: SynthSpec) -> SynthResult:
    rng = np.random.default_rng(spec.seed)
    counts = _class_counts(spec)
    classes = sorted(counts)
    signatures = _class_signatures(spec.signature_seed, classes)
    label_stream: list[str] = []
    for lbl in classes:
        label_stream.extend([lbl] * counts[lbl])
    order = rng.permutation(len(label_stream))
    label_stream = [label_stream[i] for i in order]

    reports: list[ElectionReport] = []
    gold_inf: dict[str, str] = {}
    gold_type: dict[str, str] = {}
    fixtures: list[dict] = []
    midnight = datetime.combine(spec.election_date, datetime.min.time(), timezone.utc)

    for i, lbl in enumerate(label_stream):
        rid = f"{spec.deployment.lower()}-{spec.seed}-{i:06d}"
        lexical = _CLASS_VOCAB[lbl] if spec.signal == "full" else _NEUTRAL_VOCAB
        n_tokens = int(rng.integers(4, 8))
        picks = [lexical[j] for j in rng.integers(0, len(lexical), size=n_tokens)]
        fillers = [
            _SHARED_FILLERS[j]
            for j in rng.integers(0, len(_SHARED_FILLERS), size=2)
        ]
        text = " ".join(picks + fillers + [_station_token(i)])

        hour_center, day_center, day_spread = _TEMPORAL_PROFILE[lbl]
        day_offset = float(rng.normal(day_center, day_spread))
        hour = int(np.round(rng.normal(hour_center, 1.2))) % 24
        minute = int(rng.integers(0, 60))
        second = int(rng.integers(0, 60))
        timestamp = midnight + timedelta(
            days=float(np.round(day_offset)), hours=hour, minutes=minute, seconds=second
        )

        if spec.signal == "full":
            mean = signatures[lbl]
            alpha = _SENTIMENT_ALPHA[lbl]
        else:
            mean = 0.0
            alpha = _NEUTRAL_ALPHA
        embedding = mean + rng.standard_normal(EMBEDDING_DIM)
        sentiment = rng.dirichlet(alpha)
        sentiment = sentiment / sentiment.sum()

        language = Language.sw if rng.random() < spec.swahili_share else Language.en
        channel = _CHANNELS[int(rng.integers(0, len(_CHANNELS)))]
        report = ElectionReport(
            id=rid,
            text=text,
            timestamp=timestamp,
            channel=channel,
            language=language,
            deployment=spec.deployment,
            raw_label=lbl,
            has_media=bool(rng.random() < 0.05),
        )
        reports.append(report)
        gold_inf[rid] = "NonInformative" if lbl == NONINF else "Informative"
        if lbl != NONINF:
            gold_type[rid] = lbl
        fixtures.append(
            {
                "hash": content_hash(text),
                "text": text,
                "embedding": [float(v) for v in embedding],
                "sentiment": [float(v) for v in sentiment],
                "model_tag": spec.model_tag,
            }
        )
    return SynthResult(
        reports=reports,
        gold_informativeness=gold_inf,
        gold_type=gold_type,
        fixtures=fixtures,
        deployment=synthetic_deployment(spec),
    )


def write_corpus(result: SynthResult, out_dir: str | Path) -> dict[str, Path]:
    """Write corpus.jsonl, fixtures.jsonl, and deployment.json under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_path = out / "corpus.jsonl"
    fixtures_path = out / "fixtures.jsonl"
    deployment_path = out / "deployment.json"
    with corpus_path.open("w", encoding="utf-8") as fh:
        for r in result.reports:
            fh.write(
                json.dumps(
                    {
                        "id": r.id,
                        "text": r.text,
                        "timestamp": r.timestamp.isoformat().replace("+00:00", "Z"),
                        "channel": r.channel.value,
                        "language": r.language.value,
                        "deployment": r.deployment,
                        "raw_label": r.raw_label,
                        "has_media": r.has_media,
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                )
                + "\n"
            )
    with fixtures_path.open("w", encoding="utf-8") as fh:
        for record in result.fixtures:
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
    deployment_path.write_text(
        json.dumps(
            {
                "deployment": result.deployment.name,
                "election_date": result.deployment.election_date.isoformat(),
                "mapping": result.deployment.mapping,
            },
            sort_keys=True,
            separators=(",", ":"),
        ),
        encoding="utf-8",
    )
    return {
        "corpus": corpus_path,
        "fixtures": fixtures_path,
        "deployment": deployment_path,
    }
