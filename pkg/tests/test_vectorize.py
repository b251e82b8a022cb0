"""TF-IDF fitting, transforms, serialization, and CSR batching."""

import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from sentinel.errors import DataError
from sentinel.vectorize import (
    TfidfModel,
    fit_tfidf,
    transform_matrix,
    transform_tfidf,
)

DOCS = [["a", "b", "a"], ["a", "c"]]


def idf(df: int, n_docs: int) -> float:
    return math.log((1 + n_docs) / (1 + df)) + 1.0


class TestFitTfidf:
    def test_vocabulary_sorted_and_indexed(self):
        model = fit_tfidf(DOCS)
        assert model.vocabulary == {"a": 0, "b": 1, "c": 2}
        assert model.dim == 3
        assert model.doc_count == 2

    def test_smoothed_idf_values(self):
        model = fit_tfidf(DOCS)
        assert model.idf[model.vocabulary["a"]] == pytest.approx(1.0, abs=1e-12)
        assert model.idf[model.vocabulary["b"]] == pytest.approx(
            idf(1, 2), abs=1e-12
        )

    def test_bigrams(self):
        model = fit_tfidf(DOCS, ngram_range=(1, 2))
        assert sorted(model.vocabulary) == ["a", "a b", "a c", "b", "b a", "c"]
        assert [model.vocabulary[t] for t in sorted(model.vocabulary)] == list(
            range(6)
        )

    def test_min_df_filters_rare_terms(self):
        model = fit_tfidf(DOCS, min_df=2)
        assert list(model.vocabulary) == ["a"]

    def test_max_df_filters_common_terms(self):
        model = fit_tfidf(DOCS, max_df=0.5)
        assert "a" not in model.vocabulary
        assert {"b", "c"} <= set(model.vocabulary)

    def test_empty_corpus_rejected(self):
        with pytest.raises(DataError):
            fit_tfidf([])

    def test_bad_ngram_range_rejected(self):
        with pytest.raises(DataError):
            fit_tfidf(DOCS, ngram_range=(2, 1))


class TestTransform:
    def test_l2_normalized_weights(self):
        model = fit_tfidf(DOCS)
        vec = transform_tfidf(model, ["a", "b", "a"])
        raw_a = 2 * idf(2, 2)
        raw_b = 1 * idf(1, 2)
        norm = math.hypot(raw_a, raw_b)
        dense = vec.to_dense()
        assert dense[0] == pytest.approx(raw_a / norm, abs=1e-12)
        assert dense[1] == pytest.approx(raw_b / norm, abs=1e-12)
        assert dense[2] == 0.0
        assert np.linalg.norm(dense) == pytest.approx(1.0, abs=1e-12)

    def test_oov_terms_ignored(self):
        model = fit_tfidf(DOCS)
        vec = transform_tfidf(model, ["z", "q"])
        assert vec.is_empty
        assert vec.to_dense().tolist() == [0.0, 0.0, 0.0]

    def test_empty_doc_legal(self):
        model = fit_tfidf(DOCS)
        assert transform_tfidf(model, []).is_empty

    def test_matrix_rows_match_single_transform(self):
        model = fit_tfidf(DOCS, ngram_range=(1, 2))
        batch = [["a", "b", "a"], [], ["c", "z"]]
        matrix = transform_matrix(model, batch)
        assert sp.issparse(matrix)
        assert matrix.shape == (3, model.dim)
        dense = matrix.toarray()
        for row, doc in zip(dense, batch):
            np.testing.assert_allclose(
                row, transform_tfidf(model, doc).to_dense(), atol=1e-15
            )
        assert not dense[1].any()

    @given(
        st.lists(
            st.lists(st.sampled_from(["a", "b", "c", "d"]), max_size=6),
            min_size=1,
            max_size=8,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_nonempty_transforms_have_unit_norm(self, docs):
        if not any(docs):
            docs = docs + [["a"]]
        model = fit_tfidf(docs)
        for doc in docs:
            vec = transform_tfidf(model, doc)
            if not vec.is_empty:
                assert vec.norm() == pytest.approx(1.0, abs=1e-12)


def assert_models_equal(left: TfidfModel, right: TfidfModel) -> None:
    assert left.vocabulary == right.vocabulary
    np.testing.assert_array_equal(left.idf, right.idf)
    assert left.ngram_range == right.ngram_range
    assert left.doc_count == right.doc_count


class TestSerialization:
    def test_json_round_trip(self):
        model = fit_tfidf(DOCS, ngram_range=(1, 2), min_df=1)
        restored = TfidfModel.from_json(model.to_json())
        assert_models_equal(restored, model)
        doc = ["a", "b"]
        np.testing.assert_array_equal(
            transform_tfidf(restored, doc).to_dense(),
            transform_tfidf(model, doc).to_dense(),
        )

    def test_file_round_trip(self, tmp_path):
        model = fit_tfidf(DOCS)
        path = tmp_path / "tfidf.json"
        model.save(path)
        assert_models_equal(TfidfModel.load(path), model)

    def test_malformed_json_rejected(self):
        with pytest.raises(DataError):
            TfidfModel.from_json("{\"doc_count\": 2}")
        with pytest.raises(DataError):
            TfidfModel.from_json("{not json")
