"""File- and service-backed embedding/sentiment providers."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from sentinel.errors import (
    MissingEmbeddingError,
    ModelTagMismatchError,
    ProviderError,
    SimplexViolationError,
    TransportError,
)
from sentinel.providers import (
    EMBEDDING_DIM,
    Embedding,
    FileProvider,
    SentimentTriple,
    ServiceProvider,
    content_hash,
    get_embedding,
    get_sentiment,
)


def fixture_record(text, seed=0, tag="test-v1", **overrides):
    rng = np.random.default_rng(seed)
    record = {
        "hash": content_hash(text),
        "text": text,
        "embedding": rng.standard_normal(EMBEDDING_DIM).tolist(),
        "sentiment": [0.2, 0.5, 0.3],
        "model_tag": tag,
    }
    record.update(overrides)
    return record


def write_fixtures(path, records):
    path.write_text(
        "".join(json.dumps(r) + "\n" for r in records), encoding="utf-8"
    )
    return path


class TestValueObjects:
    def test_embedding_shape_enforced(self):
        with pytest.raises(ProviderError):
            Embedding(np.zeros(10), "t")

    def test_embedding_must_be_finite(self):
        bad = np.zeros(EMBEDDING_DIM)
        bad[3] = np.nan
        with pytest.raises(ProviderError):
            Embedding(bad, "t")

    def test_sentiment_simplex_enforced(self):
        with pytest.raises(SimplexViolationError):
            SentimentTriple(0.5, 0.6, 0.3)
        with pytest.raises(SimplexViolationError):
            SentimentTriple(-0.1, 0.6, 0.5)
        with pytest.raises(SimplexViolationError):
            SentimentTriple(1.2, -0.1, -0.1)

    def test_sentiment_tolerates_rounding(self):
        triple = SentimentTriple(0.2, 0.5, 0.3000000001)
        assert triple.as_array().tolist() == [0.2, 0.5, 0.3000000001]

    def test_content_hash_is_over_minimal_form(self):
        assert content_hash("ask @alice now") == content_hash("ask @bob now")
        assert content_hash("plain") != content_hash("other")


class TestFileProvider:
    def test_lookup_round_trip(self, tmp_path):
        record = fixture_record("queue is long", seed=3)
        provider = FileProvider(
            write_fixtures(tmp_path / "f.jsonl", [record])
        )
        emb = provider.get_embedding("queue is long")
        np.testing.assert_array_equal(emb.vector, np.array(record["embedding"]))
        assert emb.model_tag == "test-v1"
        sent = provider.get_sentiment("queue is long")
        assert sent.as_array().tolist() == [0.2, 0.5, 0.3]
        assert len(provider) == 1

    def test_lookup_is_keyed_by_minimal_form(self, tmp_path):
        provider = FileProvider(
            write_fixtures(
                tmp_path / "f.jsonl", [fixture_record("ask @alice now")]
            )
        )
        emb_a = provider.get_embedding("ask @alice now")
        emb_b = provider.get_embedding("ask @bob now")
        np.testing.assert_array_equal(emb_a.vector, emb_b.vector)

    def test_stored_hash_is_advisory(self, tmp_path):
        record = fixture_record("all calm here", hash="deadbeef")
        provider = FileProvider(write_fixtures(tmp_path / "f.jsonl", [record]))
        assert provider.get_embedding("all calm here") is not None

    def test_missing_text_raises_with_hash(self, tmp_path):
        provider = FileProvider(
            write_fixtures(tmp_path / "f.jsonl", [fixture_record("known")])
        )
        with pytest.raises(MissingEmbeddingError) as err:
            provider.get_embedding("unknown report")
        assert err.value.content_hash == content_hash("unknown report")
        with pytest.raises(MissingEmbeddingError):
            provider.get_sentiment("unknown report")

    def test_empty_text_sentiment_is_neutral(self, tmp_path):
        provider = FileProvider(
            write_fixtures(tmp_path / "f.jsonl", [fixture_record("known")])
        )
        assert provider.get_sentiment("   ").as_array().tolist() == [0.0, 1.0, 0.0]

    def test_mixed_model_tags_rejected(self, tmp_path):
        records = [
            fixture_record("one", tag="v1"),
            fixture_record("two", tag="v2"),
        ]
        with pytest.raises(ModelTagMismatchError):
            FileProvider(write_fixtures(tmp_path / "f.jsonl", records))

    def test_wrong_dimension_rejected(self, tmp_path):
        record = fixture_record("short", embedding=[0.0] * 10)
        with pytest.raises(ProviderError):
            FileProvider(write_fixtures(tmp_path / "f.jsonl", [record]))

    def test_simplex_violation_rejected(self, tmp_path):
        record = fixture_record("bad", sentiment=[0.9, 0.9, 0.9])
        with pytest.raises(SimplexViolationError):
            FileProvider(write_fixtures(tmp_path / "f.jsonl", [record]))

    def test_malformed_line_reported_with_position(self, tmp_path):
        path = tmp_path / "f.jsonl"
        path.write_text(
            json.dumps(fixture_record("fine")) + "\n{broken\n", encoding="utf-8"
        )
        with pytest.raises(ProviderError) as err:
            FileProvider(path)
        assert ":2" in str(err.value)

    def test_empty_store_rejected(self, tmp_path):
        path = tmp_path / "f.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(ProviderError):
            FileProvider(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ProviderError):
            FileProvider(tmp_path / "nope.jsonl")

    def test_functional_aliases(self, tmp_path):
        provider = FileProvider(
            write_fixtures(tmp_path / "f.jsonl", [fixture_record("text")])
        )
        assert get_embedding(provider, "text").vector.shape == (EMBEDDING_DIM,)
        assert get_sentiment(provider, "text").neutral == 0.5


class _StubState:
    def __init__(self):
        self.fail_next = 0
        self.tags = None  # optional per-request tag queue
        self.default_tag = "svc-v1"
        self.batch_sizes = []
        self.requests = 0
        self.short_vectors = False

    def next_tag(self):
        if self.tags:
            return self.tags.pop(0)
        return self.default_tag


class _StubHandler(BaseHTTPRequestHandler):
    state: _StubState = None

    def log_message(self, *args):  # keep test output clean
        pass

    def do_POST(self):
        state = self.state
        state.requests += 1
        if state.fail_next > 0:
            state.fail_next -= 1
            self.send_response(503)
            self.end_headers()
            return
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        texts = payload["texts"]
        state.batch_sizes.append(len(texts))
        if self.path == "/embed":
            vectors = [[float(len(t))] + [0.0] * (EMBEDDING_DIM - 1) for t in texts]
            if state.short_vectors:
                vectors = vectors[:-1]
            body = {"model_tag": state.next_tag(), "vectors": vectors}
        else:
            body = {
                "model_tag": state.next_tag(),
                "triples": [[0.1, 0.8, 0.1] for _ in texts],
            }
        raw = json.dumps(body).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)


@pytest.fixture
def stub_service():
    state = _StubState()
    handler = type("Handler", (_StubHandler,), {"state": state})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield state, f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        server.server_close()


class TestServiceProvider:
    def test_round_trip_and_cache(self, stub_service):
        state, url = stub_service
        provider = ServiceProvider(url)
        emb = provider.get_embedding("hello world")
        assert emb.vector[0] == float(len("hello world"))
        assert emb.model_tag == "svc-v1"
        sent = provider.get_sentiment("hello world")
        assert sent.neutral == 0.8
        seen = state.requests
        provider.get_embedding("hello world")
        provider.get_sentiment("hello world")
        assert state.requests == seen  # cache hit, no extra traffic

    def test_batches_capped_at_64(self, stub_service):
        state, url = stub_service
        provider = ServiceProvider(url)
        texts = [f"report number {i}" for i in range(150)]
        provider.prefetch(texts)
        assert state.batch_sizes and max(state.batch_sizes) <= 64
        assert sorted(state.batch_sizes) == [22, 22, 64, 64, 64, 64]

    def test_retries_then_succeeds(self, stub_service):
        state, url = stub_service
        state.fail_next = 2
        provider = ServiceProvider(url, retries=2)
        emb = provider.get_embedding("retry me")
        assert emb.vector[0] == float(len("retry me"))

    def test_transport_error_after_exhausted_retries(self, stub_service):
        state, url = stub_service
        state.fail_next = 10
        provider = ServiceProvider(url, retries=1)
        with pytest.raises(TransportError) as err:
            provider.get_embedding("never works")
        assert err.value.retries == 1

    def test_model_tag_switch_rejected(self, stub_service):
        state, url = stub_service
        state.tags = ["svc-v1", "svc-v2"]
        provider = ServiceProvider(url)
        with pytest.raises(ModelTagMismatchError):
            provider.prefetch(["text"])

    def test_wrong_vector_count_rejected(self, stub_service):
        state, url = stub_service
        state.short_vectors = True
        provider = ServiceProvider(url)
        with pytest.raises(ProviderError):
            provider.prefetch(["a", "b"])

    def test_url_from_environment(self, stub_service, monkeypatch):
        _, url = stub_service
        monkeypatch.setenv("SENTINEL_PROVIDER_URL", url)
        provider = ServiceProvider(None)
        assert provider.get_embedding("env text").model_tag == "svc-v1"

    def test_missing_url_rejected(self, monkeypatch):
        monkeypatch.delenv("SENTINEL_PROVIDER_URL", raising=False)
        with pytest.raises(ProviderError):
            ServiceProvider(None)
