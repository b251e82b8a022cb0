"""Operator commands: train, eval, predict, crossdomain, fairness, synth.

Every command validates its config, takes an exclusive lock on the
output directory, writes machine-readable outputs plus a manifest with
the config hash and input content hashes, and exits 0 on success.
Failures exit nonzero with a category-coded message: config 2, data 3,
provider 4, model 5.

Outputs contain no wall-clock state, so a rerun with unchanged inputs
reproduces every file byte for byte in file-provider mode.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import (
    ExperimentConfig,
    canonical_json,
    load_config,
    sha256_path,
    sha256_text,
)
from .corpus import (
    CorpusIndex,
    Informativeness,
    derive_labels,
    filter_corpus,
    load_deployment,
    load_reports,
)
from .errors import (
    ConfigError,
    DataError,
    ModelError,
    ProviderError,
    SentinelError,
)
from .evaluation import (
    evaluate,
    few_shot_protocol,
    multi_run,
    stratified_split,
    zero_shot_eval,
)
from .features import FeatureConfig, assemble_features, fit_day_standardizer
from .models import Hyper, predict, train_linear_svm, train_logreg
from .pipeline import (
    TwoStepPipeline,
    classify_batch,
    load_pipeline,
    masked_argmax,
    save_pipeline,
)
from .providers import FileProvider, ServiceProvider
from .synth import SynthSpec, generate, write_corpus

logger = logging.getLogger(__name__)

NONINF_CLASS = "NonInformative"

_EXIT_BY_CATEGORY = (
    (ConfigError, 2, "config"),
    (DataError, 3, "data"),
    (ProviderError, 4, "provider"),
    (ModelError, 5, "model"),
)


@contextlib.contextmanager
def _locked_out_dir(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    lock = out / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(
            f"output directory {out} is locked by another run (stale? remove {lock})"
        ) from None
    try:
        os.close(fd)
        yield out
    finally:
        with contextlib.suppress(OSError):
            lock.unlink()


def _write_json(path: Path, payload) -> None:
    path.write_text(canonical_json(payload) + "\n", encoding="utf-8")


def _write_manifest(out: Path, command: str, config_payload, inputs: dict[str, Path]) -> None:
    outputs = {}
    for candidate in sorted(out.rglob("*")):
        if candidate.is_file() and candidate.name != ".lock" and candidate.name != "manifest.json":
            outputs[str(candidate.relative_to(out))] = sha256_path(candidate)
    manifest = {
        "command": command,
        "config_hash": sha256_text(canonical_json(config_payload)),
        "inputs": {
            name: {"path": str(path), "sha256": sha256_path(path)}
            for name, path in sorted(inputs.items())
        },
        "outputs": outputs,
    }
    _write_json(out / "manifest.json", manifest)


def _build_provider(config: ExperimentConfig):
    if config.provider == "file":
        return FileProvider(config.fixtures)
    return ServiceProvider(config.provider_url)


class _Environment:
    """Loaded corpus, derived labels, and a ready provider."""

    def __init__(self, config: ExperimentConfig):
        config.validate_paths()
        self.config = config
        loaded = load_reports(config.corpus, format=_corpus_format(config.corpus))
        if loaded.malformed:
            logger.warning("skipped %d malformed corpus rows", len(loaded.malformed))
        filtered = filter_corpus(loaded.reports)
        self.deployment = load_deployment(config.deployment)
        self.reports = []
        self.gold_inf: dict[str, str] = {}
        self.gold_type: dict[str, str] = {}
        self.languages: dict[str, str] = {}
        for report in filtered.kept:
            assignment = derive_labels(report, self.deployment)
            if assignment.informative is Informativeness.Excluded:
                continue
            self.reports.append(report)
            self.gold_inf[report.id] = assignment.informative.value
            self.languages[report.id] = report.language.value
            if assignment.info_type is not None:
                self.gold_type[report.id] = assignment.info_type.value
        if not self.reports:
            raise DataError("corpus is empty after filtering and label derivation")
        self.index = CorpusIndex(self.reports)
        self.provider = _build_provider(config)
        if isinstance(self.provider, ServiceProvider):
            self.provider.prefetch([r.text for r in self.reports])
        self.feature_config = FeatureConfig(
            use_context=config.use_context,
            use_temporal=config.use_temporal,
            use_sentiment=config.use_sentiment,
            context_k=config.context_k,
        )
        self.hyper = Hyper(
            learning_rate=config.learning_rate,
            epochs=config.epochs,
            l2=config.l2,
            seed=config.seed,
            batch_size=config.batch_size,
        )

    def strat_labels(self) -> dict[str, str]:
        return {
            r.id: self.gold_type.get(r.id, NONINF_CLASS) for r in self.reports
        }


def _corpus_format(path: str) -> str:
    return "csv" if str(path).endswith(".csv") else "jsonl"


def _trainer(config: ExperimentConfig):
    return train_logreg if config.model_kind == "logreg" else train_linear_svm


def _train_pipeline(env: _Environment, seed: int):
    """Split, fit the day standardizer, and train gate + typer on train."""
    split = stratified_split(env.strat_labels(), env.config.ratios, seed)
    train_ids = split.ids("train")
    by_id = {r.id: r for r in env.reports}
    train_reports = [by_id[rid] for rid in train_ids]
    standardizer = fit_day_standardizer(train_reports, env.deployment.election_date)
    hyper = Hyper(
        learning_rate=env.hyper.learning_rate,
        epochs=env.hyper.epochs,
        l2=env.hyper.l2,
        seed=seed,
        batch_size=env.hyper.batch_size,
    )
    X_train = assemble_features(
        train_reports,
        env.index,
        env.provider,
        env.deployment.election_date,
        standardizer,
        env.feature_config,
        visible_ids=frozenset(train_ids),
    )
    trainer = _trainer(env.config)
    y_gate = [env.gold_inf[rid] for rid in train_ids]
    gate = trainer(X_train, y_gate, hyper=hyper)
    informative_rows = [
        i for i, rid in enumerate(train_ids) if rid in env.gold_type
    ]
    if not informative_rows:
        raise DataError("no informative training reports; cannot train the type model")
    X_typer = X_train[informative_rows]
    y_typer = [env.gold_type[train_ids[i]] for i in informative_rows]
    typer = trainer(X_typer, y_typer, hyper=hyper)
    label_space = tuple(env.config.label_space or typer.labels)
    pipeline = TwoStepPipeline(
        gate=gate,
        typer=typer,
        feature_config=env.feature_config,
        standardizer=standardizer,
        election_date=env.deployment.election_date,
        label_space=label_space,
        provenance={
            "deployment": env.deployment.name,
            "split_seed": seed,
            "model_kind": env.config.model_kind,
            "corpus_size": len(env.reports),
        },
    )
    return pipeline, split


def _eval_split(env: _Environment, pipeline: TwoStepPipeline, split):
    """Gate metrics on the full test split, type metrics on its informative part."""
    test_ids = split.ids("test")
    by_id = {r.id: r for r in env.reports}
    test_reports = [by_id[rid] for rid in test_ids]
    X_test = assemble_features(
        test_reports,
        env.index,
        env.provider,
        env.deployment.election_date,
        pipeline.standardizer,
        pipeline.feature_config,
        visible_ids=None,
    )
    gate_pred_labels, _ = predict(pipeline.gate, X_test)
    gate_predictions = dict(zip(test_ids, gate_pred_labels))
    gate_gold = {rid: env.gold_inf[rid] for rid in test_ids}
    gate_report = evaluate(
        gate_predictions,
        gate_gold,
        languages={rid: env.languages[rid] for rid in test_ids},
        meta={"task": "gate", "seed": split.seed},
    )
    informative_rows = [i for i, rid in enumerate(test_ids) if rid in env.gold_type]
    typer_ids = [test_ids[i] for i in informative_rows]
    _, scores = predict(pipeline.typer, X_test[informative_rows])
    typer_predictions = {
        rid: masked_argmax(scores[i], pipeline.typer.labels, pipeline.label_space)
        for i, rid in enumerate(typer_ids)
    }
    typer_gold = {rid: env.gold_type[rid] for rid in typer_ids}
    typer_report = evaluate(
        typer_predictions,
        typer_gold,
        languages={rid: env.languages[rid] for rid in typer_ids},
        meta={"task": "typer", "seed": split.seed},
    )
    return gate_report, typer_report


def cmd_train(args) -> int:
    config = _effective_config(args)
    env = _Environment(config)
    with _locked_out_dir(Path(args.out)) as out:
        pipeline, split = _train_pipeline(env, config.seed)
        save_pipeline(pipeline, out / "bundle")
        _write_json(out / "split.json", {"seed": split.seed, "assignment": split.assignment})
        _write_manifest(
            out,
            "train",
            config.to_json(),
            _input_paths(config),
        )
    logger.info("trained pipeline saved under %s", out / "bundle")
    return 0


def _input_paths(config: ExperimentConfig) -> dict[str, Path]:
    inputs = {"corpus": Path(config.corpus), "deployment": Path(config.deployment)}
    if config.fixtures:
        inputs["fixtures"] = Path(config.fixtures)
    return inputs


def cmd_eval(args) -> int:
    config = _effective_config(args)
    runs = args.runs if args.runs is not None else config.n_runs
    env = _Environment(config)
    with _locked_out_dir(Path(args.out)) as out:
        if runs == 1 and args.bundle:
            pipeline = load_pipeline(args.bundle)
            split = stratified_split(env.strat_labels(), config.ratios, config.seed)
            gate_report, typer_report = _eval_split(env, pipeline, split)
            payload = {
                "gate": gate_report.to_json(),
                "typer": typer_report.to_json(),
                "protocol": {"runs": 1, "seed": config.seed},
            }
        else:
            cache: dict[int, tuple] = {}
            for i in range(runs):
                seed = config.seed + i
                pipeline, split = _train_pipeline(env, seed)
                cache[seed] = _eval_split(env, pipeline, split)
            gate_avg = multi_run(lambda s: cache[s][0], base_seed=config.seed, n=runs)
            typer_avg = multi_run(lambda s: cache[s][1], base_seed=config.seed, n=runs)
            payload = {
                "gate": gate_avg.to_json(),
                "typer": typer_avg.to_json(),
                "protocol": {"runs": runs, "seed": config.seed},
            }
        _write_json(out / "report.json", payload)
        _write_manifest(out, "eval", config.to_json(), _input_paths(config))
    logger.info("evaluation report written to %s", out / "report.json")
    return 0


def cmd_predict(args) -> int:
    pipeline = load_pipeline(args.bundle)
    if args.fixtures:
        provider = FileProvider(args.fixtures)
    else:
        provider = ServiceProvider(None)
    loaded = load_reports(args.input, format=_corpus_format(args.input))
    if loaded.malformed:
        logger.warning("skipped %d malformed input rows", len(loaded.malformed))
    if not loaded.reports:
        raise DataError(f"no usable reports in {args.input}")
    index = CorpusIndex(loaded.reports)
    with _locked_out_dir(Path(args.out)) as out:
        decisions = classify_batch(pipeline, loaded.reports, index, provider)
        lines = "".join(canonical_json(d.to_json()) + "\n" for d in decisions)
        (out / "decisions.jsonl").write_text(lines, encoding="utf-8")
        inputs = {"input": Path(args.input), "bundle_manifest": Path(args.bundle) / "manifest.json"}
        if args.fixtures:
            inputs["fixtures"] = Path(args.fixtures)
        _write_manifest(out, "predict", {"bundle": str(args.bundle)}, inputs)
    logger.info("wrote %d decisions to %s", len(decisions), out / "decisions.jsonl")
    return 0


def _load_target(args, provider_config: ExperimentConfig):
    target_deployment = load_deployment(args.target_deployment)
    loaded = load_reports(args.target, format=_corpus_format(args.target))
    filtered = filter_corpus(loaded.reports)
    reports, gold_type, languages = [], {}, {}
    for report in filtered.kept:
        assignment = derive_labels(report, target_deployment)
        if assignment.info_type is None:
            continue
        reports.append(report)
        gold_type[report.id] = assignment.info_type.value
        languages[report.id] = report.language.value
    if not reports:
        raise DataError("target corpus has no informative labeled reports")
    fixtures = args.target_fixtures or provider_config.fixtures
    if provider_config.provider == "file":
        provider = FileProvider(fixtures)
    else:
        provider = ServiceProvider(provider_config.provider_url)
        provider.prefetch([r.text for r in reports])
    return target_deployment, reports, gold_type, languages, provider


def cmd_crossdomain(args) -> int:
    config = _effective_config(args)
    pipeline = load_pipeline(args.bundle)
    target_deployment, reports, gold_type, languages, provider = _load_target(args, config)
    label_space = tuple(sorted(set(gold_type.values())))
    with _locked_out_dir(Path(args.out)) as out:
        inputs = {
            "target": Path(args.target),
            "target_deployment": Path(args.target_deployment),
            "bundle_manifest": Path(args.bundle) / "manifest.json",
        }
        if args.target_fixtures:
            inputs["target_fixtures"] = Path(args.target_fixtures)
        if args.mode == "zero":
            report = zero_shot_eval(
                pipeline,
                reports,
                gold_type,
                provider,
                label_space=label_space,
                election_date=target_deployment.election_date,
                languages=languages,
            )
            _write_json(out / "report.json", report.to_json())
        else:
            hyper = Hyper(
                learning_rate=config.learning_rate,
                epochs=args.epochs if args.epochs is not None else config.epochs,
                l2=config.l2,
                seed=config.seed,
                batch_size=config.batch_size,
            )
            report, sample_manifest = few_shot_protocol(
                pipeline,
                reports,
                gold_type,
                provider,
                fraction=args.fraction,
                seed=config.seed,
                strategy=args.strategy,
                hyper=hyper,
                label_space=label_space,
                election_date=target_deployment.election_date,
                languages=languages,
            )
            _write_json(out / "report.json", report.to_json())
            _write_json(out / "sample.json", sample_manifest)
        _write_manifest(out, f"crossdomain-{args.mode}", config.to_json(), inputs)
    logger.info("cross-domain %s report written to %s", args.mode, out / "report.json")
    return 0


def _fairness_rows(report_payload: dict) -> list[dict]:
    rows = []
    overall = {
        "language": "overall",
        "n": int(np.sum(report_payload["confusion"])),
        "accuracy": report_payload["accuracy"],
        "macro_precision": report_payload["macro_precision"],
        "macro_recall": report_payload["macro_recall"],
        "macro_f1": report_payload["macro_f1"],
    }
    rows.append(overall)
    for lang, sub in sorted(report_payload.get("languages", {}).items()):
        rows.append(
            {
                "language": lang,
                "n": int(np.sum(sub["confusion"])),
                "accuracy": sub["accuracy"],
                "macro_precision": sub["macro_precision"],
                "macro_recall": sub["macro_recall"],
                "macro_f1": sub["macro_f1"],
            }
        )
    return rows


def cmd_fairness(args) -> int:
    try:
        payload = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read report {args.report}: {exc}") from exc
    if args.section in payload:
        payload = payload[args.section]
    if "runs" in payload:
        raise DataError(
            "fairness tables need a single-run report; rerun eval with --runs 1 --bundle"
        )
    if "languages" not in payload:
        raise DataError("report has no per-language sub-reports")
    rows = _fairness_rows(payload)
    with _locked_out_dir(Path(args.out)) as out:
        _write_json(out / "fairness.json", rows)
        header = f"{'language':<10} {'n':>6} {'acc':>8} {'macroP':>8} {'macroR':>8} {'macroF1':>8}"
        lines = [header]
        for row in rows:
            lines.append(
                f"{row['language']:<10} {row['n']:>6d} {row['accuracy']:>8.4f} "
                f"{row['macro_precision']:>8.4f} {row['macro_recall']:>8.4f} "
                f"{row['macro_f1']:>8.4f}"
            )
        table = "\n".join(lines) + "\n"
        (out / "fairness.txt").write_text(table, encoding="utf-8")
        _write_manifest(out, "fairness", {"report": str(args.report)}, {"report": Path(args.report)})
    sys.stdout.write(table)
    return 0


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_reports=args.size,
        seed=args.seed if args.seed is not None else 0,
        signal=args.signal,
        noninformative_share=args.noninf_share,
        signature_seed=args.signature_seed,
    )
    with _locked_out_dir(Path(args.out)) as out:
        result = generate(spec)
        write_corpus(result, out)
        _write_manifest(
            out,
            "synth",
            {
                "n_reports": spec.n_reports,
                "seed": spec.seed,
                "signal": spec.signal,
                "noninformative_share": spec.noninformative_share,
                "signature_seed": spec.signature_seed,
            },
            {},
        )
    logger.info("synthetic corpus of %d reports written to %s", spec.n_reports, out)
    return 0


def _effective_config(args) -> ExperimentConfig:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "provider", None) is not None:
        overrides["provider"] = args.provider
    if getattr(args, "runs", None) is not None:
        overrides["n_runs"] = args.runs
    return load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentinel",
        description="Two-step triage of crowdsourced election reports",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument(
            "--provider", choices=("file", "service"), default=None,
            help="override provider mode",
        )

    p_train = sub.add_parser("train", help="train a pipeline bundle")
    common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate on the held-out split")
    common(p_eval)
    p_eval.add_argument("--bundle", default=None, help="trained bundle directory")
    p_eval.add_argument("--runs", type=int, default=None, help="number of runs to average")
    p_eval.set_defaults(func=cmd_eval)

    p_pred = sub.add_parser("predict", help="classify a corpus file with a bundle")
    p_pred.add_argument("--bundle", required=True)
    p_pred.add_argument("--input", required=True, help="corpus file to classify")
    p_pred.add_argument("--out", required=True)
    p_pred.add_argument("--fixtures", default=None, help="embedding fixture file")
    p_pred.set_defaults(func=cmd_predict)

    p_cross = sub.add_parser("crossdomain", help="zero/few-shot transfer evaluation")
    common(p_cross)
    p_cross.add_argument("--bundle", required=True)
    p_cross.add_argument("--target", required=True, help="target corpus file")
    p_cross.add_argument("--target-deployment", required=True)
    p_cross.add_argument("--target-fixtures", default=None)
    p_cross.add_argument("--mode", choices=("zero", "few"), required=True)
    p_cross.add_argument("--fraction", type=float, default=0.10)
    p_cross.add_argument("--strategy", choices=("scratch", "warm_start"), default="scratch")
    p_cross.add_argument("--epochs", type=int, default=None, help="override epochs for few-shot")
    p_cross.set_defaults(func=cmd_crossdomain)

    p_fair = sub.add_parser("fairness", help="per-language metric table from a report")
    p_fair.add_argument("--report", required=True, help="report.json from eval")
    p_fair.add_argument("--section", default="typer", help="report section (gate or typer)")
    p_fair.add_argument("--out", required=True)
    p_fair.set_defaults(func=cmd_fairness)

    p_synth = sub.add_parser("synth", help="generate a synthetic corpus + fixtures")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--size", type=int, default=5000)
    p_synth.add_argument("--signal", choices=("full", "temporal_only"), default="full")
    p_synth.add_argument("--noninf-share", type=float, default=0.40)
    p_synth.add_argument("--signature-seed", type=int, default=7)
    p_synth.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SentinelError as exc:
        for err_type, code, category in _EXIT_BY_CATEGORY:
            if isinstance(exc, err_type):
                logger.error("[%s] %s", category, exc)
                return code
        logger.error("[internal] %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
