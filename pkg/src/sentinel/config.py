"""Experiment configuration: one JSON file drives a reproducible run.

The config names the corpus, the deployment mapping, the provider mode,
the model kind, the feature toggles, and every seed. Hashing the
canonical serialization of a config (plus the content hashes of its
referenced inputs) is what makes rerun outputs byte-comparable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import ConfigError

PROVIDER_MODES = ("file", "service")
MODEL_KINDS = ("logreg", "svm")


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_path(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class ExperimentConfig:
    corpus: str
    deployment: str
    fixtures: str | None = None
    provider: str = "file"
    provider_url: str | None = None
    model_kind: str = "logreg"
    use_context: bool = True
    use_temporal: bool = True
    use_sentiment: bool = True
    context_k: int = 3
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)
    seed: int = 0
    n_runs: int = 3
    learning_rate: float = 0.1
    epochs: int = 200
    l2: float = 1e-4
    batch_size: int = 32
    label_space: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.provider not in PROVIDER_MODES:
            raise ConfigError(f"provider must be one of {PROVIDER_MODES}")
        if self.model_kind not in MODEL_KINDS:
            raise ConfigError(f"model_kind must be one of {MODEL_KINDS}")
        if self.provider == "file" and not self.fixtures:
            raise ConfigError("file provider requires a fixtures path")
        if self.n_runs < 1:
            raise ConfigError("n_runs must be at least 1")
        if len(self.ratios) != 3:
            raise ConfigError("ratios must have three entries")

    def validate_paths(self) -> None:
        for label, value in (("corpus", self.corpus), ("deployment", self.deployment)):
            if not Path(value).is_file():
                raise ConfigError(f"{label} path does not exist: {value}")
        if self.provider == "file" and not Path(self.fixtures).is_file():
            raise ConfigError(f"fixtures path does not exist: {self.fixtures}")

    def to_json(self) -> dict:
        payload = asdict(self)
        payload["ratios"] = list(self.ratios)
        payload["label_space"] = (
            list(self.label_space) if self.label_space is not None else None
        )
        return payload

    def config_hash(self) -> str:
        return sha256_text(canonical_json(self.to_json()))


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    payload.update(overrides or {})
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(payload) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "ratios" in payload and payload["ratios"] is not None:
        payload["ratios"] = tuple(payload["ratios"])
    if "label_space" in payload and payload["label_space"] is not None:
        payload["label_space"] = tuple(payload["label_space"])
    try:
        return ExperimentConfig(**payload)
    except TypeError as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc
