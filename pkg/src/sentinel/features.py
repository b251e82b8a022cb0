"""Feature assembly for report classification.

A report is encoded as the concatenation, in fixed order, of:

  [ text embedding (768) | context embedding (768) | days | hour_sin |
    hour_cos | positive | neutral | negative ]

for 1542 dimensions total. The context embedding is the mean of the
embeddings of the k most recent visible reports with strictly earlier
timestamps, or the zero vector when no such report exists. Visibility is
the leakage control: during training only training reports are visible,
at inference the whole corpus is.

The day-distance component is standardized with statistics fitted on the
training split only, then applied unchanged everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, timezone

import numpy as np

from .corpus import CorpusIndex, ElectionReport
from .errors import ConfigError, DataError
from .providers import EMBEDDING_DIM

FULL_DIM = 2 * EMBEDDING_DIM + 3 + 3

TEMPORAL_PERIOD_HOURS = 24


@dataclass(frozen=True)
class FeatureConfig:
    """Feature-group toggles for ablations. Defaults give the full vector."""

    use_text: bool = True
    use_context: bool = True
    use_temporal: bool = True
    use_sentiment: bool = True
    context_k: int = 3

    def __post_init__(self):
        if self.context_k < 0:
            raise ConfigError("context_k must be non-negative")
        if not (self.use_text or self.use_context or self.use_temporal or self.use_sentiment):
            raise ConfigError("at least one feature group must be enabled")

    @property
    def dim(self) -> int:
        total = 0
        if self.use_text:
            total += EMBEDDING_DIM
        if self.use_context:
            total += EMBEDDING_DIM
        if self.use_temporal:
            total += 3
        if self.use_sentiment:
            total += 3
        return total


@dataclass(frozen=True)
class DayStandardizer:
    """Train-split mean/std for the day-distance feature."""

    mean: float
    std: float

    def apply(self, value: float) -> float:
        if self.std == 0.0:
            return value - self.mean
        return (value - self.mean) / self.std


def _as_utc(timestamp: datetime) -> datetime:
    if timestamp.tzinfo is not None:
        return timestamp.astimezone(timezone.utc)
    return timestamp


def day_distance(timestamp: datetime, election_date: date) -> float:
    """Absolute calendar-day difference between a report and election day."""
    return float(abs((_as_utc(timestamp).date() - election_date).days))


def fit_day_standardizer(
    reports: list[ElectionReport], election_date: date
) -> DayStandardizer:
    if not reports:
        raise DataError("cannot fit day statistics on an empty split")
    values = np.array([day_distance(r.timestamp, election_date) for r in reports])
    return DayStandardizer(mean=float(values.mean()), std=float(values.std()))


def temporal_features(
    timestamp: datetime,
    election_date: date,
    standardizer: DayStandardizer | None = None,
) -> tuple[float, float, float]:
    """(days, hour_sin, hour_cos) from the UTC clock hour and calendar distance."""
    days = day_distance(timestamp, election_date)
    if standardizer is not None:
        days = standardizer.apply(days)
    hour = _as_utc(timestamp).hour
    angle = 2.0 * math.pi * hour / TEMPORAL_PERIOD_HOURS
    return days, math.sin(angle), math.cos(angle)


def build_context(
    index: CorpusIndex,
    report_id: str,
    k: int = 3,
    visible_ids: frozenset[str] | set[str] | None = None,
) -> tuple[str, ...]:
    """Ids of the k most recent visible reports strictly earlier in time.

    Returned most recent first. Reports sharing the target's timestamp are
    never context, so the window is identical no matter how ties are stored.
    """
    target = index.get(report_id)
    if k <= 0:
        return ()
    picked: list[str] = []
    for earlier in reversed(index.ordered[: index.position(report_id)]):
        if earlier.timestamp >= target.timestamp:
            continue
        if visible_ids is not None and earlier.id not in visible_ids:
            continue
        picked.append(earlier.id)
        if len(picked) == k:
            break
    return tuple(picked)


def context_embedding(
    index: CorpusIndex,
    report_id: str,
    provider,
    k: int = 3,
    visible_ids: frozenset[str] | set[str] | None = None,
) -> np.ndarray:
    ids = build_context(index, report_id, k=k, visible_ids=visible_ids)
    if not ids:
        return np.zeros(EMBEDDING_DIM)
    vectors = [provider.get_embedding(index.get(i).text).vector for i in ids]
    return np.mean(vectors, axis=0)


@dataclass(frozen=True)
class FeatureVector:
    text_emb: np.ndarray
    context_emb: np.ndarray
    days: float
    hour_sin: float
    hour_cos: float
    sentiment: np.ndarray

    def to_array(self, config: FeatureConfig | None = None) -> np.ndarray:
        config = config or FeatureConfig()
        parts = []
        if config.use_text:
            parts.append(self.text_emb)
        if config.use_context:
            parts.append(self.context_emb)
        if config.use_temporal:
            parts.append(np.array([self.days, self.hour_sin, self.hour_cos]))
        if config.use_sentiment:
            parts.append(self.sentiment)
        return np.concatenate(parts)


def featurize_report(
    report: ElectionReport,
    index: CorpusIndex,
    provider,
    election_date: date,
    standardizer: DayStandardizer | None = None,
    config: FeatureConfig | None = None,
    visible_ids: frozenset[str] | set[str] | None = None,
) -> FeatureVector:
    config = config or FeatureConfig()
    if config.use_text or config.use_sentiment:
        text_emb = provider.get_embedding(report.text).vector
        sentiment = provider.get_sentiment(report.text).as_array()
    else:
        text_emb = np.zeros(EMBEDDING_DIM)
        sentiment = np.zeros(3)
    if config.use_context:
        ctx = context_embedding(
            index, report.id, provider, k=config.context_k, visible_ids=visible_ids
        )
    else:
        ctx = np.zeros(EMBEDDING_DIM)
    days, hour_sin, hour_cos = temporal_features(
        report.timestamp, election_date, standardizer
    )
    return FeatureVector(
        text_emb=text_emb,
        context_emb=ctx,
        days=days,
        hour_sin=hour_sin,
        hour_cos=hour_cos,
        sentiment=sentiment,
    )


def assemble_features(
    reports: list[ElectionReport],
    index: CorpusIndex,
    provider,
    election_date: date,
    standardizer: DayStandardizer | None = None,
    config: FeatureConfig | None = None,
    visible_ids: frozenset[str] | set[str] | None = None,
) -> np.ndarray:
    """Feature matrix with one row per report, in the given report order."""
    config = config or FeatureConfig()
    if not reports:
        return np.zeros((0, config.dim))
    rows = [
        featurize_report(
            r, index, provider, election_date, standardizer, config, visible_ids
        ).to_array(config)
        for r in reports
    ]
    return np.stack(rows)
