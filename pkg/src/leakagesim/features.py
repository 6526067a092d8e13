"""Design matrices: standardized covariates next to an L2-normalized TF-IDF block.

TF is the raw count and IDF is ``ln((1 + N) / (1 + df))``. The vocabulary is
the ``vocab_size`` most frequent terms of the corpus (ties broken
lexicographically).
"""

from __future__ import annotations

import contextlib
import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .distill import DistillRegime, distill
from .textgen import Document

TFIDF_VARIANT = "tf=raw count; idf=ln((1+N)/(1+df)); rows L2-normalized"

_read_tracker: Counter | None = None


@contextlib.contextmanager
def track_reads() -> Iterator[Counter]:
    """Count tokens read by this module, keyed by paragraph role."""
    global _read_tracker
    previous, _read_tracker = _read_tracker, Counter()
    try:
        yield _read_tracker
    finally:
        _read_tracker = previous


def _document_tokens(doc: Document) -> list[str]:
    out: list[str] = []
    for p in doc.paragraphs:
        if _read_tracker is not None:
            for role in p.roles:
                _read_tracker[role] += len(p.tokens)
        out.extend(p.tokens)
    return out


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    document_frequencies: tuple[int, ...]
    corpus_size: int

    def __len__(self) -> int:
        return len(self.terms)

    def idf(self) -> np.ndarray:
        df = np.asarray(self.document_frequencies, dtype=float)
        return np.log((1.0 + self.corpus_size) / (1.0 + df))


def _top_terms(totals: dict[str, int] | Counter, size: int) -> list[str]:
    return sorted(totals, key=lambda term: (-totals[term], term))[:size]


def build_vocabulary(corpus: Sequence[Document], size: int = 256) -> Vocabulary:
    if not corpus:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    totals: Counter = Counter()
    df: Counter = Counter()
    for doc in corpus:
        counts = Counter(_document_tokens(doc))
        totals.update(counts)
        df.update(counts.keys())
    terms = _top_terms(totals, size)
    return Vocabulary(tuple(terms), tuple(df[t] for t in terms), len(corpus))


def tfidf_vector(doc: Document, vocab: Vocabulary) -> np.ndarray:
    """TF-IDF over ``vocab`` scaled to unit L2 norm; all-zero stays all-zero."""
    position = {term: j for j, term in enumerate(vocab.terms)}
    vec = np.zeros(len(vocab))
    for tok in _document_tokens(doc):
        j = position.get(tok)
        if j is not None:
            vec[j] += 1.0
    vec *= vocab.idf()
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def standardize(columns: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column z-scores with the n-1 denominator; constant columns map to zero (sd 0)."""
    arr = np.asarray(columns, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] < 2:
        raise ValueError("standardize needs at least two rows")
    means = arr.mean(axis=0)
    centered = arr - means
    sds = arr.std(axis=0, ddof=1)
    scale = np.max(np.abs(arr), axis=0)
    # treat columns with spread at rounding level as constant
    constant = sds <= 1e-12 * np.maximum(scale, 1.0)
    sds = np.where(constant, 0.0, sds)
    z = np.divide(centered, sds, out=np.zeros_like(centered), where=~constant)
    return z, means, sds


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    column_names: tuple[str, ...]
    n_numeric: int = 3

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def text_block(self) -> np.ndarray:
        return self.values[:, self.n_numeric:]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.column_names)
            for row in self.values:
                writer.writerow([format(v, ".17g") for v in row])


def _column_names(vocab: Vocabulary, n_numeric: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(n_numeric)) + tuple(f"t:{term}" for term in vocab.terms)


def assemble(
    x: np.ndarray,
    documents: Sequence[Document],
    regime: DistillRegime,
    vocab: Vocabulary | None = None,
    *,
    vocab_size: int = 256,
) -> tuple[FeatureMatrix, Vocabulary]:
    """Rows ``[standardized x | tfidf(distill(doc))]`` in input order.

    Without ``vocab`` the vocabulary is built from the distilled documents.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != len(documents):
        raise ValueError(f"covariates have shape {x.shape}, expected ({len(documents)}, p)")
    distilled = [distill(doc, regime) for doc in documents]
    if vocab is None:
        vocab = build_vocabulary(distilled, vocab_size)
    text = np.vstack([tfidf_vector(doc, vocab) for doc in distilled]) if distilled else np.zeros((0, len(vocab)))
    if text.shape[1] != len(vocab):
        raise ValueError("text block width does not match the vocabulary")
    z, _, _ = standardize(x)
    values = np.hstack([z, text])
    return FeatureMatrix(values, _column_names(vocab, x.shape[1]), x.shape[1]), vocab


class CountTable:
    """Token counts of one distilled corpus, for fast re-vectorization of row subsets.

    Feeding ``rows`` with repeats (a bootstrap resample) treats each repeat as
    a separate document, exactly as if the resampled corpus were passed to
    :func:`assemble`.
    """

    def __init__(self, documents: Sequence[Document], regime: DistillRegime):
        index: dict[str, int] = {}
        indptr, indices, data = [0], [], []
        for doc in documents:
            counts = Counter(_document_tokens(distill(doc, regime)))
            for tok, cnt in counts.items():
                indices.append(index.setdefault(tok, len(index)))
                data.append(cnt)
            indptr.append(len(indices))
        self.regime = DistillRegime(regime)
        self.tokens = np.array(sorted(index, key=index.get), dtype=object)
        self.counts = sp.csr_matrix(
            (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
            shape=(len(documents), len(index)),
        )

    def vocabulary(self, rows: np.ndarray, size: int = 256) -> Vocabulary:
        sub = self.counts[rows]
        totals = np.asarray(sub.sum(axis=0)).ravel()
        df = np.asarray((sub > 0).sum(axis=0)).ravel()
        present = np.flatnonzero(totals > 0)
        order = sorted(present, key=lambda j: (-totals[j], self.tokens[j]))[:size]
        return Vocabulary(tuple(self.tokens[j] for j in order), tuple(int(df[j]) for j in order), len(rows))

    def tfidf(self, rows: np.ndarray, vocab: Vocabulary) -> np.ndarray:
        position = {tok: j for j, tok in enumerate(self.tokens)}
        cols = np.array([position.get(term, -1) for term in vocab.terms], dtype=np.int64)
        out = np.zeros((len(rows), len(vocab)))
        known = cols >= 0
        if known.any():
            out[:, known] = self.counts[rows][:, cols[known]].toarray()
        out *= vocab.idf()
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        np.divide(out, norms, out=out, where=norms > 0)
        return out

    def features(
        self, x: np.ndarray, rows: np.ndarray, size: int = 256, vocab: Vocabulary | None = None
    ) -> tuple[FeatureMatrix, Vocabulary]:
        rows = np.asarray(rows, dtype=np.int64)
        if vocab is None:
            vocab = self.vocabulary(rows, size)
        z, _, _ = standardize(np.asarray(x, dtype=float)[rows])
        values = np.hstack([z, self.tfidf(rows, vocab)])
        return FeatureMatrix(values, _column_names(vocab, z.shape[1]), z.shape[1]), vocab
