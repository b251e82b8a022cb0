"""Endpoint and model behavior tests for the embedding service."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from fastapi.testclient import TestClient

from embedsvc import EMBED_DIM, MAX_BATCH, MODEL_TAG, canonical_text, text_key
from embedsvc.app import create_app
from embedsvc.export import export_fixtures
from embedsvc.model import load_model


@pytest.fixture(scope="module")
def client() -> TestClient:
    return TestClient(create_app())


class TestHealthz:
    def test_reports_ok_and_model_tag(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.json() == {"status": "ok", "model_tag": MODEL_TAG}

    def test_unloaded_server_reports_degraded(self):
        unloaded = TestClient(create_app(load=False))
        response = unloaded.get("/healthz")
        assert response.status_code == 503
        assert response.json() == {"status": "unloaded", "model_tag": None}


class TestEmbedEndpoint:
    def test_one_vector_per_text_with_fixed_dimension(self, client):
        texts = ["counting started", "queues are calm", "", "tally posted"]
        payload = client.post("/embed", json={"texts": texts}).json()
        assert payload["model_tag"] == MODEL_TAG
        assert len(payload["vectors"]) == len(texts)
        assert all(len(vec) == EMBED_DIM for vec in payload["vectors"])
        assert all(np.isfinite(vec).all() for vec in map(np.asarray, payload["vectors"]))

    def test_nonempty_text_embeds_to_unit_norm(self, client):
        payload = client.post("/embed", json={"texts": ["results announced"]}).json()
        assert np.linalg.norm(payload["vectors"][0]) == pytest.approx(1.0, abs=1e-12)

    def test_empty_text_embeds_to_zero_vector(self, client):
        payload = client.post("/embed", json={"texts": [""]}).json()
        assert payload["vectors"][0] == [0.0] * EMBED_DIM

    def test_identical_text_gives_identical_vector_across_requests(self, client):
        first = client.post("/embed", json={"texts": ["same words here"]}).json()
        second = client.post("/embed", json={"texts": ["same words here", "other"]}).json()
        assert first["vectors"][0] == second["vectors"][0]

    def test_vectors_are_identical_across_server_instances(self):
        texts = ["ballots sealed at midnight", "hao wamefika mapema"]
        a = TestClient(create_app()).post("/embed", json={"texts": texts}).json()
        b = TestClient(create_app()).post("/embed", json={"texts": texts}).json()
        assert a == b

    def test_mention_and_url_variants_collapse_to_one_vector(self, client):
        variants = [
            "@alice reports calm queues https://a.example/x",
            "@bob reports calm queues www.b.example/y",
        ]
        assert canonical_text(variants[0]) == canonical_text(variants[1])
        payload = client.post("/embed", json={"texts": variants}).json()
        assert payload["vectors"][0] == payload["vectors"][1]

    def test_emoji_and_spelled_name_collapse_to_one_vector(self, client):
        variants = ["station on 🔥 now", "station on :fire: now"]
        payload = client.post("/embed", json={"texts": variants}).json()
        assert payload["vectors"][0] == payload["vectors"][1]

    def test_different_texts_embed_differently(self, client):
        payload = client.post("/embed", json={"texts": ["calm queues", "violent clashes"]}).json()
        assert payload["vectors"][0] != payload["vectors"][1]

    def test_empty_batch_is_allowed(self, client):
        payload = client.post("/embed", json={"texts": []}).json()
        assert payload == {"model_tag": MODEL_TAG, "vectors": []}

    def test_oversized_batch_is_rejected_with_400(self, client):
        response = client.post("/embed", json={"texts": ["x"] * (MAX_BATCH + 1)})
        assert response.status_code == 400
        assert str(MAX_BATCH) in response.json()["detail"]

    def test_full_batch_is_accepted(self, client):
        response = client.post("/embed", json={"texts": ["x"] * MAX_BATCH})
        assert response.status_code == 200
        assert len(response.json()["vectors"]) == MAX_BATCH

    def test_malformed_body_is_rejected(self, client):
        assert client.post("/embed", json={"words": ["x"]}).status_code == 422

    def test_unloaded_server_answers_503(self):
        unloaded = TestClient(create_app(load=False))
        assert unloaded.post("/embed", json={"texts": ["x"]}).status_code == 503
        assert unloaded.post("/sentiment", json={"texts": ["x"]}).status_code == 503


class TestSentimentEndpoint:
    def test_triples_lie_on_the_simplex(self, client):
        texts = ["peaceful and calm", "violence and chaos", "a plain report", ""]
        payload = client.post("/sentiment", json={"texts": texts}).json()
        assert payload["model_tag"] == MODEL_TAG
        triples = np.asarray(payload["triples"])
        assert triples.shape == (len(texts), 3)
        assert np.all(triples >= 0.0) and np.all(triples <= 1.0)
        assert np.abs(triples.sum(axis=1) - 1.0).max() <= 1e-6

    def test_blank_text_is_exactly_neutral(self, client):
        payload = client.post("/sentiment", json={"texts": ["", "   "]}).json()
        assert payload["triples"] == [[0.0, 1.0, 0.0], [0.0, 1.0, 0.0]]

    def test_polarity_tracks_the_lexicon(self, client):
        payload = client.post(
            "/sentiment",
            json={"texts": ["peaceful calm celebration", "violent chaos and fraud"]},
        ).json()
        positive, negative = payload["triples"]
        assert positive[0] > positive[2]
        assert negative[2] > negative[0]

    def test_negation_flips_polarity(self, client):
        payload = client.post("/sentiment", json={"texts": ["calm queues", "not calm queues"]}).json()
        plain, negated = payload["triples"]
        assert plain[0] > plain[2]
        assert negated[2] > negated[0]

    def test_oversized_batch_is_rejected_with_400(self, client):
        response = client.post("/sentiment", json={"texts": ["x"] * (MAX_BATCH + 1)})
        assert response.status_code == 400


class TestConcurrency:
    def test_parallel_identical_requests_return_identical_payloads(self, client):
        texts = ["tally sheet posted", "officials arrived late", "crowd is singing"]

        def call(_):
            response = client.post("/embed", json={"texts": texts})
            assert response.status_code == 200
            return response.text

        with ThreadPoolExecutor(max_workers=8) as pool:
            bodies = list(pool.map(call, range(24)))
        assert len(set(bodies)) == 1


class TestExportFixtures:
    @pytest.fixture()
    def corpus(self, tmp_path):
        rows = [
            {"id": "r1", "text": "queues moving quickly at dawn"},
            {"id": "r2", "text": "@obs says queues moving quickly at dawn"},
            {"id": "r3", "text": "queues moving quickly at dawn"},
            {"id": "r4", "text": "officials counting ballots now"},
        ]
        path = tmp_path / "corpus.jsonl"
        path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
        return path

    def test_deduplicates_by_canonical_form(self, corpus, tmp_path):
        out = tmp_path / "fixtures.jsonl"
        count = export_fixtures(corpus, out)
        lines = out.read_text(encoding="utf-8").splitlines()
        assert count == len(lines) == 3  # r1 == r3; r2 differs (mention prefix)

    def test_records_carry_the_full_fixture_schema(self, corpus, tmp_path):
        out = tmp_path / "fixtures.jsonl"
        export_fixtures(corpus, out)
        for line in out.read_text(encoding="utf-8").splitlines():
            record = json.loads(line)
            assert set(record) == {"hash", "text", "embedding", "sentiment", "model_tag"}
            assert record["hash"] == text_key(record["text"])
            assert record["model_tag"] == MODEL_TAG
            assert len(record["embedding"]) == EMBED_DIM
            assert len(record["sentiment"]) == 3

    def test_exported_values_match_live_endpoint_responses(self, corpus, tmp_path, client):
        out = tmp_path / "fixtures.jsonl"
        export_fixtures(corpus, out)
        records = [json.loads(l) for l in out.read_text(encoding="utf-8").splitlines()]
        texts = [r["text"] for r in records]
        live_vectors = client.post("/embed", json={"texts": texts}).json()["vectors"]
        live_triples = client.post("/sentiment", json={"texts": texts}).json()["triples"]
        assert [r["embedding"] for r in records] == live_vectors
        assert [r["sentiment"] for r in records] == live_triples

    def test_export_is_byte_reproducible(self, corpus, tmp_path):
        first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        export_fixtures(corpus, first)
        export_fixtures(corpus, second, model=load_model())
        assert first.read_bytes() == second.read_bytes()

    def test_record_without_text_is_an_error(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "r1"}\n', encoding="utf-8")
        with pytest.raises(ValueError, match="has no text"):
            export_fixtures(bad, tmp_path / "out.jsonl")
