import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from leakagesim.dgp import numeric_arrays
from leakagesim.distill import DistillRegime
from leakagesim.features import (
    CountTable,
    Vocabulary,
    assemble,
    build_vocabulary,
    standardize,
    tfidf_vector,
    track_reads,
)
from leakagesim.textgen import Document, Paragraph, TopicId


def doc_of(*tokens, topic=TopicId.GENERAL):
    return Document((Paragraph(topic, tuple(tokens)),))


def test_small_corpus_keeps_all_terms():
    vocab = build_vocabulary([doc_of("a", "b"), doc_of("c", "a")], size=256)
    assert len(vocab) == 3
    assert vocab.terms == ("a", "b", "c")
    assert vocab.document_frequencies == (2, 1, 1)
    assert vocab.corpus_size == 2


def test_ties_break_lexicographically():
    vocab = build_vocabulary([doc_of("zeta", "alpha", "mid", "mid")], size=2)
    assert vocab.terms == ("mid", "alpha")


def test_empty_document_gives_zero_vector():
    vocab = Vocabulary(("a", "b"), (1, 1), 3)
    assert np.array_equal(tfidf_vector(Document(), vocab), np.zeros(2))


def test_single_document_corpus_has_zero_idf():
    vocab = build_vocabulary([doc_of("a")])
    # ln((1 + 1) / (1 + 1)) = 0
    assert vocab.idf() == pytest.approx([0.0])
    assert np.array_equal(tfidf_vector(doc_of("a"), vocab), np.zeros(1))


def test_idf_formula():
    vocab = Vocabulary(("a", "b"), (1, 3), 4)
    assert vocab.idf() == pytest.approx([np.log(5 / 2), np.log(5 / 4)], abs=1e-15)


def test_single_direction_normalizes_to_unit():
    vocab = Vocabulary(("a", "b"), (1, 1), 4)
    assert tfidf_vector(doc_of("a", "a", "oov"), vocab) == pytest.approx([1.0, 0.0])


def test_tfidf_hand_computation():
    vocab = Vocabulary(("a", "b"), (1, 3), 4)
    raw = np.array([2 * np.log(5 / 2), 1 * np.log(5 / 4)])
    assert tfidf_vector(doc_of("a", "b", "a"), vocab) == pytest.approx(raw / np.linalg.norm(raw), abs=1e-15)


def test_standardize_two_points():
    z, means, sds = standardize(np.array([1.0, 3.0]))
    assert z.ravel() == pytest.approx([-np.sqrt(0.5), np.sqrt(0.5)], abs=1e-12)
    assert means == pytest.approx([2.0]) and sds == pytest.approx([np.sqrt(2.0)])


def test_standardize_constant_column():
    z, _, sds = standardize(np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]]))
    assert np.array_equal(z[:, 0], np.zeros(3)) and sds[0] == 0.0


def test_standardize_needs_two_rows():
    with pytest.raises(ValueError):
        standardize(np.array([[1.0, 2.0]]))


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 40), st.integers(1, 4)),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_standardize_moments(columns):
    z, _, sds = standardize(columns)
    for j in range(columns.shape[1]):
        if sds[j] > 0:
            assert abs(z[:, j].mean()) < 1e-9
            assert z[:, j].std(ddof=1) == pytest.approx(1.0, abs=1e-9)
        else:
            assert np.all(z[:, j] == 0)


@pytest.fixture(scope="module")
def corpus(small_units):
    x = numeric_arrays(small_units)["x"]
    return x, [u.document for u in small_units]


@pytest.fixture(scope="module")
def matrices(corpus):
    x, docs = corpus
    return {r: assemble(x, docs, r) for r in DistillRegime}


def test_matrix_shape_and_names(matrices, corpus):
    fm, vocab = matrices[DistillRegime.IDENTITY]
    assert fm.shape == (len(corpus[1]), 3 + 256)
    assert fm.column_names[:3] == ("x1", "x2", "x3")
    assert fm.column_names[3:] == tuple(f"t:{t}" for t in vocab.terms)


def test_row_order_follows_units(matrices, corpus):
    x, docs = corpus
    fm, vocab = matrices[DistillRegime.IDENTITY]
    for i in (0, 17, len(docs) - 1):
        assert np.array_equal(fm.text_block[i], tfidf_vector(docs[i], vocab))
    z, _, _ = standardize(x)
    assert np.array_equal(fm.values[:, :3], z)


def test_rows_have_unit_norm(matrices):
    for fm, _ in matrices.values():
        norms = np.linalg.norm(fm.text_block, axis=1)
        nonzero = norms > 0
        assert np.all(np.abs(norms[nonzero] - 1.0) < 1e-9)


def test_determinism(matrices, corpus):
    x, docs = corpus
    again, vocab = assemble(x, docs, DistillRegime.PERFECT)
    assert vocab == matrices[DistillRegime.PERFECT][1]
    assert np.array_equal(again.values, matrices[DistillRegime.PERFECT][0].values)


def test_treatment_keywords_vanish_after_perfect_distillation(matrices, topics):
    full = matrices[DistillRegime.IDENTITY][1].terms
    perfect = matrices[DistillRegime.PERFECT][1].terms
    for tid in (TopicId.TREAT_POS, TopicId.TREAT_NEG):
        for kw in topics[tid].keywords:
            assert kw in full
            assert kw not in perfect or perfect.index(kw) > full.index(kw) + 50


def test_over_aggressive_has_no_topic_keyword_signal(matrices, topics, small_units):
    """Keywords that survive are background words: they no longer track T or U."""
    data = numeric_arrays(small_units)
    fm, vocab = matrices[DistillRegime.OVER_AGGRESSIVE]
    full_fm, full_vocab = matrices[DistillRegime.IDENTITY]
    keywords = {kw for tid in TopicId if tid is not TopicId.GENERAL for kw in topics[tid].keywords}

    def signal(column):
        return max(abs(np.corrcoef(column, data[k])[0, 1]) for k in ("t", "u"))

    for j, term in enumerate(vocab.terms):
        if term in keywords:
            assert signal(fm.text_block[:, j]) < 0.2
            assert signal(full_fm.text_block[:, full_vocab.terms.index(term)]) > 0.3


def test_perfect_pipeline_never_reads_treatment_tokens(corpus):
    x, docs = corpus
    with track_reads() as reads:
        assemble(x, docs, DistillRegime.PERFECT)
        CountTable(docs, DistillRegime.PERFECT)
    assert reads["treatment"] == 0 and reads["confounder"] > 0
    with track_reads() as reads:
        assemble(x, docs, DistillRegime.IDENTITY)
    assert reads["treatment"] > 0


def test_count_table_matches_assemble_on_resample(corpus):
    x, docs = corpus
    rows = np.random.default_rng(0).integers(len(docs), size=len(docs))
    table = CountTable(docs, DistillRegime.PERFECT)
    fast, vocab_fast = table.features(x, rows)
    slow, vocab_slow = assemble(x[rows], [docs[i] for i in rows], DistillRegime.PERFECT)
    assert vocab_fast == vocab_slow
    assert fast.column_names == slow.column_names
    assert np.allclose(fast.values, slow.values, atol=1e-13)


def test_fixed_vocabulary_reused(corpus, matrices):
    x, docs = corpus
    vocab = matrices[DistillRegime.IDENTITY][1]
    fm, same = assemble(x, docs, DistillRegime.PERFECT, vocab)
    assert same is vocab and fm.shape[1] == 259


def test_mismatched_rows_rejected(corpus):
    x, docs = corpus
    with pytest.raises(ValueError):
        assemble(x[:5], docs, DistillRegime.IDENTITY)


def test_csv_export_round_trips(tmp_path, matrices):
    fm, _ = matrices[DistillRegime.OVER_AGGRESSIVE]
    path = tmp_path / "features.csv"
    fm.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == fm.column_names
    assert np.array_equal(np.array(rows[1:], dtype=float), fm.values)
