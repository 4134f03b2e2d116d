"""Vocabulary construction and tfidf weighting of image descriptions.

The tfidf variant used throughout is the raw per-image count divided by
the document frequency (number of images carrying the word), with no
logarithm. Replacing it with textbook tf-idf changes the theme structure
and is deliberately not done.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .dataset import LabelCorpus
from .errors import ArgumentError, EmptyVocabularyError, FormatError, InputIOError


@dataclass
class Vocabulary:
    """Ordered unique words; position order is frequency desc, ties lexicographic."""

    words: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.words:
            raise EmptyVocabularyError("vocabulary is empty")
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ArgumentError("vocabulary words must be unique")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index


@dataclass
class TfidfMatrix:
    """Sparse nonnegative weights, one row per image in corpus order."""

    matrix: sparse.csr_matrix

    @property
    def n_images(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_words(self) -> int:
        return self.matrix.shape[1]

    def row(self, j: int) -> np.ndarray:
        return np.asarray(self.matrix.getrow(j).todense()).ravel()


def build_vocabulary(
    corpus: LabelCorpus, min_images: int = 1, max_size: int | None = None
) -> Vocabulary:
    """Select words appearing in at least ``min_images`` distinct images.

    If ``max_size`` is set, the most frequent words win (document frequency
    descending, ties broken lexicographically). The same ordering fixes the
    vocabulary positions, keeping downstream indices reproducible.
    """
    if min_images < 1:
        raise ArgumentError(f"min_images must be >= 1, got {min_images}")
    if max_size is not None and max_size < 1:
        raise ArgumentError(f"max_size must be >= 1, got {max_size}")
    freq = corpus.document_frequency()
    kept = [w for w, n in freq.items() if n >= min_images]
    if not kept:
        raise EmptyVocabularyError(
            f"no word appears in >= {min_images} images (corpus has {len(freq)} distinct words)"
        )
    kept.sort(key=lambda w: (-freq[w], w))
    if max_size is not None:
        kept = kept[:max_size]
    return Vocabulary(words=tuple(kept))


def tfidf_weights(corpus: LabelCorpus, vocab: Vocabulary) -> TfidfMatrix:
    """Weight of word i in image j = count(i in j) / #images containing i.

    Rows follow corpus insertion order; out-of-vocabulary words are
    ignored, so rows with no in-vocabulary words come out all-zero.
    """
    doc_freq = np.zeros(len(vocab), dtype=np.float64)
    for pairs in corpus.entries.values():
        for word, _ in pairs:
            pos = vocab.index.get(word)
            if pos is not None:
                doc_freq[pos] += 1
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    for pairs in corpus.entries.values():
        row = sorted(
            (vocab.index[w], count) for w, count in pairs if w in vocab.index
        )
        for pos, count in row:
            indices.append(pos)
            data.append(count / doc_freq[pos])
        indptr.append(len(indices))
    matrix = sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int32), np.array(indptr, dtype=np.int32)),
        shape=(corpus.n_images, len(vocab)),
    )
    return TfidfMatrix(matrix=matrix)


def write_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """vocab.txt: one word per line in vocabulary order."""
    Path(path).write_text("\n".join(vocab.words) + "\n", encoding="utf-8")


def read_vocabulary(path: str | Path) -> Vocabulary:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc}") from exc
    words = tuple(line.strip() for line in text.splitlines() if line.strip())
    if not words:
        raise FormatError(f"{path}: no words")
    return Vocabulary(words=words)


def _as_dense_1d(v) -> np.ndarray:
    if sparse.issparse(v):
        return np.asarray(v.todense()).ravel()
    return np.asarray(v, dtype=np.float64).ravel()


def cosine_similarity(u, v) -> float:
    """Cosine of the angle between two vectors; 0 if either is all-zero."""
    u = _as_dense_1d(u)
    v = _as_dense_1d(v)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))
