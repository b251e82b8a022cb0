"""End-to-end command-line workflows on a small synthetic corpus."""

import json
from pathlib import Path

import pytest

from sentinel import cli

SIZE = 400
TARGET_SIZE = 300


def run(argv):
    return cli.main([str(a) for a in argv])


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    """Synthesize a corpus, train a bundle, and evaluate it once and thrice."""
    root = tmp_path_factory.mktemp("cli-ws")
    assert run(["synth", "--out", root / "data", "--size", SIZE, "--seed", "5"]) == 0
    config = {
        "corpus": str(root / "data" / "corpus.jsonl"),
        "deployment": str(root / "data" / "deployment.json"),
        "fixtures": str(root / "data" / "fixtures.jsonl"),
        "epochs": 30,
        "n_runs": 1,
        "seed": 0,
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    assert run(["train", "--config", config_path, "--out", root / "model"]) == 0
    assert (
        run([
            "eval", "--config", config_path, "--out", root / "eval1",
            "--bundle", root / "model" / "bundle", "--runs", "1",
        ])
        == 0
    )
    assert (
        run(["eval", "--config", config_path, "--out", root / "eval2", "--runs", "2"])
        == 0
    )
    assert run(["synth", "--out", root / "target", "--size", TARGET_SIZE, "--seed", "6"]) == 0
    return root


class TestSynthCommand:
    def test_writes_corpus_files_and_manifest(self, ws):
        data = ws / "data"
        for name in ("corpus.jsonl", "fixtures.jsonl", "deployment.json", "manifest.json"):
            assert (data / name).is_file()
        assert not (data / ".lock").exists()
        manifest = read_json(data / "manifest.json")
        assert manifest["command"] == "synth"
        assert set(manifest["outputs"]) == {
            "corpus.jsonl", "fixtures.jsonl", "deployment.json",
        }
        assert len(data.joinpath("corpus.jsonl").read_text().splitlines()) == SIZE

    def test_locked_output_directory_refused(self, tmp_path):
        out = tmp_path / "busy"
        out.mkdir()
        (out / ".lock").write_text("", encoding="utf-8")
        assert run(["synth", "--out", out, "--size", "10"]) == 2


class TestTrainCommand:
    def test_bundle_layout(self, ws):
        bundle = ws / "model" / "bundle"
        for name in ("gate.json", "typer.json", "config.json", "manifest.json"):
            assert (bundle / name).is_file()
        split = read_json(ws / "model" / "split.json")
        assert split["seed"] == 0
        assert set(split["assignment"].values()) == {"train", "dev", "test"}
        manifest = read_json(ws / "model" / "manifest.json")
        assert manifest["command"] == "train"
        assert set(manifest["inputs"]) == {"corpus", "deployment", "fixtures"}
        for entry in manifest["inputs"].values():
            assert len(entry["sha256"]) == 64

    def test_seed_override_changes_split(self, ws, tmp_path):
        assert (
            run([
                "train", "--config", ws / "config.json",
                "--out", tmp_path / "model1", "--seed", "1",
            ])
            == 0
        )
        base = read_json(ws / "model" / "split.json")["assignment"]
        moved = read_json(tmp_path / "model1" / "split.json")["assignment"]
        assert sorted(base) == sorted(moved)
        assert base != moved


class TestEvalCommand:
    def test_single_run_report_shape(self, ws):
        payload = read_json(ws / "eval1" / "report.json")
        assert set(payload) == {"gate", "typer", "protocol"}
        assert payload["protocol"] == {"runs": 1, "seed": 0}
        gate = payload["gate"]
        assert gate["labels"] == ["Informative", "NonInformative"]
        assert gate["meta"]["task"] == "gate"
        assert set(gate["languages"]) <= {"en", "sw"}
        typer = payload["typer"]
        assert set(typer["labels"]) <= {
            "CountingResults", "PoliticalRallies", "PositiveEvents",
            "SecurityIssues", "VotingIssues",
        }

    def test_multi_run_report_aggregates(self, ws):
        payload = read_json(ws / "eval2" / "report.json")
        assert payload["protocol"] == {"runs": 2, "seed": 0}
        assert payload["typer"]["n_runs"] == 2
        assert payload["typer"]["seeds"] == [0, 1]
        assert len(payload["typer"]["runs"]) == 2

    def test_rerun_is_byte_identical(self, ws, tmp_path):
        assert (
            run([
                "eval", "--config", ws / "config.json", "--out", tmp_path / "again",
                "--bundle", ws / "model" / "bundle", "--runs", "1",
            ])
            == 0
        )
        for name in ("report.json", "manifest.json"):
            assert (tmp_path / "again" / name).read_bytes() == (
                ws / "eval1" / name
            ).read_bytes()


class TestPredictCommand:
    def test_decisions_cover_every_report(self, ws, tmp_path):
        assert (
            run([
                "predict", "--bundle", ws / "model" / "bundle",
                "--input", ws / "data" / "corpus.jsonl",
                "--fixtures", ws / "data" / "fixtures.jsonl",
                "--out", tmp_path / "pred",
            ])
            == 0
        )
        lines = (tmp_path / "pred" / "decisions.jsonl").read_text().splitlines()
        assert len(lines) == SIZE
        first = json.loads(lines[0])
        assert set(first) == {
            "report_id", "informativeness", "info_type", "gate_scores", "type_scores",
        }
        for line in lines:
            decision = json.loads(line)
            if decision["informativeness"] == "NonInformative":
                assert decision["info_type"] is None
            else:
                assert decision["info_type"] is not None

    def test_missing_fixture_text_fails_with_provider_exit(self, ws, tmp_path):
        corpus = tmp_path / "unseen.jsonl"
        corpus.write_text(
            json.dumps({
                "id": "x-1",
                "text": "text that no fixture file has ever seen",
                "timestamp": "2022-08-09T10:00:00Z",
                "channel": "sms",
                "language": "en",
                "deployment": "SYNTH",
                "raw_label": "VotingIssues",
            }) + "\n",
            encoding="utf-8",
        )
        rc = run([
            "predict", "--bundle", ws / "model" / "bundle",
            "--input", corpus,
            "--fixtures", ws / "data" / "fixtures.jsonl",
            "--out", tmp_path / "pred",
        ])
        assert rc == 4

    def test_corrupt_bundle_exit(self, ws, tmp_path):
        bundle = tmp_path / "bundle"
        bundle.mkdir()
        rc = run([
            "predict", "--bundle", bundle,
            "--input", ws / "data" / "corpus.jsonl",
            "--fixtures", ws / "data" / "fixtures.jsonl",
            "--out", tmp_path / "pred",
        ])
        assert rc == 5


class TestCrossdomainCommand:
    def test_zero_shot_report(self, ws, tmp_path):
        assert (
            run([
                "crossdomain", "--config", ws / "config.json",
                "--bundle", ws / "model" / "bundle",
                "--target", ws / "target" / "corpus.jsonl",
                "--target-deployment", ws / "target" / "deployment.json",
                "--target-fixtures", ws / "target" / "fixtures.jsonl",
                "--mode", "zero",
                "--out", tmp_path / "zero",
            ])
            == 0
        )
        report = read_json(tmp_path / "zero" / "report.json")
        assert report["meta"]["protocol"] == "zero_shot"
        informative = TARGET_SIZE - round(TARGET_SIZE * 0.40)
        total = sum(sum(row) for row in report["confusion"])
        assert total == informative

    def test_few_shot_writes_sample_manifest(self, ws, tmp_path):
        assert (
            run([
                "crossdomain", "--config", ws / "config.json",
                "--bundle", ws / "model" / "bundle",
                "--target", ws / "target" / "corpus.jsonl",
                "--target-deployment", ws / "target" / "deployment.json",
                "--target-fixtures", ws / "target" / "fixtures.jsonl",
                "--mode", "few", "--strategy", "scratch", "--epochs", "5",
                "--out", tmp_path / "few",
            ])
            == 0
        )
        report = read_json(tmp_path / "few" / "report.json")
        sample = read_json(tmp_path / "few" / "sample.json")
        informative = TARGET_SIZE - round(TARGET_SIZE * 0.40)
        expected_sample = round(0.10 * informative)
        assert sample["sample_size"] == expected_sample
        assert len(sample["sampled_ids"]) == expected_sample
        assert sample["strategy"] == "scratch"
        total = sum(sum(row) for row in report["confusion"])
        assert total == informative - expected_sample


class TestFairnessCommand:
    def test_table_from_single_run_report(self, ws, tmp_path, capsys):
        assert (
            run([
                "fairness", "--report", ws / "eval1" / "report.json",
                "--section", "typer", "--out", tmp_path / "fair",
            ])
            == 0
        )
        rows = read_json(tmp_path / "fair" / "fairness.json")
        assert rows[0]["language"] == "overall"
        assert {row["language"] for row in rows[1:]} <= {"en", "sw"}
        assert rows[0]["n"] == sum(row["n"] for row in rows[1:])
        table = (tmp_path / "fair" / "fairness.txt").read_text(encoding="utf-8")
        assert table.splitlines()[0].startswith("language")
        assert capsys.readouterr().out == table

    def test_multi_run_report_refused(self, ws, tmp_path):
        rc = run([
            "fairness", "--report", ws / "eval2" / "report.json",
            "--section", "typer", "--out", tmp_path / "fair",
        ])
        assert rc == 3


class TestExitCodes:
    def test_missing_config_file(self, tmp_path):
        rc = run([
            "train", "--config", tmp_path / "nope.json", "--out", tmp_path / "out",
        ])
        assert rc == 2

    def test_unknown_config_key(self, ws, tmp_path):
        config = read_json(ws / "config.json")
        config["learning_rte"] = 0.5
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        assert run(["train", "--config", path, "--out", tmp_path / "out"]) == 2

    def test_missing_corpus_path(self, ws, tmp_path):
        config = read_json(ws / "config.json")
        config["corpus"] = str(tmp_path / "gone.jsonl")
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        assert run(["train", "--config", path, "--out", tmp_path / "out"]) == 2

    def test_unmapped_label_is_a_data_error(self, ws, tmp_path):
        corpus = tmp_path / "corpus.jsonl"
        corpus.write_text(
            json.dumps({
                "id": "bad-1",
                "text": "some perfectly ordinary report",
                "timestamp": "2022-08-09T10:00:00Z",
                "channel": "sms",
                "language": "en",
                "deployment": "SYNTH",
                "raw_label": "CompletelyNovelLabel",
            }) + "\n",
            encoding="utf-8",
        )
        config = read_json(ws / "config.json")
        config["corpus"] = str(corpus)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        assert run(["train", "--config", path, "--out", tmp_path / "out"]) == 3
