"""Shared fixtures: synthetic corpora wired to file-backed providers."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import pytest

from sentinel.corpus import CorpusIndex, Deployment, ElectionReport
from sentinel.evaluation import SplitAssignment, stratified_split
from sentinel.features import FeatureConfig, assemble_features, fit_day_standardizer
from sentinel.models import Hyper, train_logreg
from sentinel.pipeline import TwoStepPipeline
from sentinel.providers import FileProvider
from sentinel.synth import SynthSpec, generate

NONINF_CLASS = "NonInformative"


@dataclass
class SynthEnv:
    """A generated corpus plus everything needed to featurize it."""

    spec: SynthSpec
    reports: list[ElectionReport]
    gold_informativeness: dict[str, str]
    gold_type: dict[str, str]
    provider: FileProvider
    index: CorpusIndex
    fixtures_path: Path
    deployment: Deployment

    @property
    def languages(self) -> dict[str, str]:
        return {r.id: r.language.value for r in self.reports}

    def strat_labels(self) -> dict[str, str]:
        return {
            r.id: self.gold_type.get(r.id, NONINF_CLASS) for r in self.reports
        }


def write_fixture_file(path: Path, records: list[dict]) -> Path:
    path.write_text(
        "".join(json.dumps(r, sort_keys=True) + "\n" for r in records),
        encoding="utf-8",
    )
    return path


def build_env(tmp_path: Path, tag: str = "env", **kwargs) -> SynthEnv:
    spec = SynthSpec(**kwargs)
    result = generate(spec)
    fixtures_path = write_fixture_file(
        tmp_path / f"fixtures-{tag}.jsonl", result.fixtures
    )
    return SynthEnv(
        spec=spec,
        reports=result.reports,
        gold_informativeness=result.gold_informativeness,
        gold_type=result.gold_type,
        provider=FileProvider(fixtures_path),
        index=CorpusIndex(result.reports),
        fixtures_path=fixtures_path,
        deployment=result.deployment,
    )


@pytest.fixture
def make_env(tmp_path):
    counter = iter(range(1, 1000))

    def factory(**kwargs) -> SynthEnv:
        return build_env(tmp_path, tag=str(next(counter)), **kwargs)

    return factory


def train_small_pipeline(
    env: SynthEnv,
    seed: int = 0,
    epochs: int = 60,
    feature_config: FeatureConfig | None = None,
    label_space: tuple[str, ...] | None = None,
) -> tuple[TwoStepPipeline, SplitAssignment]:
    """Train gate + typer on the train part of a stratified split."""
    config = feature_config or FeatureConfig()
    split = stratified_split(env.strat_labels(), seed=seed)
    train_ids = split.ids("train")
    by_id = {r.id: r for r in env.reports}
    train_reports = [by_id[rid] for rid in train_ids]
    standardizer = fit_day_standardizer(
        train_reports, env.deployment.election_date
    )
    hyper = Hyper(epochs=epochs, seed=seed)
    X = assemble_features(
        train_reports,
        env.index,
        env.provider,
        env.deployment.election_date,
        standardizer,
        config,
        visible_ids=frozenset(train_ids),
    )
    gate = train_logreg(
        X, [env.gold_informativeness[rid] for rid in train_ids], hyper=hyper
    )
    rows = [i for i, rid in enumerate(train_ids) if rid in env.gold_type]
    typer = train_logreg(
        X[rows], [env.gold_type[train_ids[i]] for i in rows], hyper=hyper
    )
    pipeline = TwoStepPipeline(
        gate=gate,
        typer=typer,
        feature_config=config,
        standardizer=standardizer,
        election_date=env.deployment.election_date,
        label_space=tuple(label_space or typer.labels),
        provenance={"split_seed": seed},
    )
    return pipeline, split
