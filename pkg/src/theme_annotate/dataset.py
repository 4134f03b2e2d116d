"""Loading, validation, and partitioning of feature/label files.

File formats (UTF-8, ``\\n`` line endings, ``#``-prefixed comment lines):

* features TSV: ``<image_id>\\t<v1> <v2> ... <vD>`` with space-separated
  decimal floats, one row per image.
* labels TSV: ``<image_id>\\t<word>[:count] <word>[:count] ...``; a word
  without an explicit count means count 1, repeated tokens sum.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ArgumentError, FormatError, InputIOError, MismatchError

LabelEntry = tuple[str, int]


@dataclass
class FeatureMatrix:
    """N opaque D-dimensional feature vectors keyed by image id.

    Immutable after construction; the value array is marked read-only so the
    matrix can be shared across concurrent workers.
    """

    ids: tuple[str, ...]
    values: np.ndarray
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ArgumentError("feature values must be a 2-D array")
        if len(self.ids) != self.values.shape[0]:
            raise ArgumentError("id count does not match row count")
        if len(set(self.ids)) != len(self.ids):
            raise ArgumentError("duplicate image ids")
        if self.values.shape[0] < 1:
            raise ArgumentError("feature matrix needs at least one row")
        if not np.all(np.isfinite(self.values)):
            raise ArgumentError("feature values must be finite")
        self.values.flags.writeable = False
        self.index = {img: i for i, img in enumerate(self.ids)}

    @property
    def n_images(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def vector(self, image_id: str) -> np.ndarray:
        return self.values[self.index[image_id]]

    def subset(self, ids: Iterable[str]) -> "FeatureMatrix":
        ids = tuple(ids)
        rows = np.array([self.index[img] for img in ids], dtype=int)
        return FeatureMatrix(ids=ids, values=self.values[rows])


@dataclass
class LabelCorpus:
    """Per-image word multiset with occurrence counts.

    ``entries`` preserves file order; each value is a tuple of unique
    ``(word, count)`` pairs with ``count >= 1``.
    """

    entries: dict[str, tuple[LabelEntry, ...]]

    @property
    def n_images(self) -> int:
        return len(self.entries)

    def words(self, image_id: str) -> tuple[LabelEntry, ...]:
        return self.entries[image_id]

    def word_set(self, image_id: str) -> set[str]:
        return {w for w, _ in self.entries[image_id]}

    def document_frequency(self) -> dict[str, int]:
        """Number of distinct images whose label set contains each word."""
        freq: dict[str, int] = {}
        for pairs in self.entries.values():
            for word, _ in pairs:
                freq[word] = freq.get(word, 0) + 1
        return freq

    def subset(self, ids: Iterable[str]) -> "LabelCorpus":
        return LabelCorpus(entries={img: self.entries[img] for img in ids})


@dataclass
class DatasetBundle:
    """Features plus aligned labels with a train-or-test role marker."""

    features: FeatureMatrix
    labels: LabelCorpus
    role: str

    @property
    def ids(self) -> tuple[str, ...]:
        return self.features.ids

    @property
    def n_images(self) -> int:
        return self.features.n_images


def _data_lines(path: Path):
    """Yield (line_number, stripped_line) skipping comments and blank lines."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line


def load_features(path: str | Path) -> FeatureMatrix:
    """Parse a features TSV into a FeatureMatrix, preserving row order."""
    path = Path(path)
    ids: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    dim: int | None = None
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected '<id>\\t<values>', got {len(parts)} columns")
        image_id, value_text = parts
        if not image_id:
            raise FormatError(f"{path}:{lineno}: empty image id")
        if image_id in seen:
            raise FormatError(f"{path}:{lineno}: duplicate image id {image_id!r}")
        tokens = value_text.split()
        if not tokens:
            raise FormatError(f"{path}:{lineno}: no feature values")
        try:
            values = [float(tok) for tok in tokens]
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: invalid float: {exc}") from exc
        if not all(math.isfinite(v) for v in values):
            raise FormatError(f"{path}:{lineno}: non-finite feature value")
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise FormatError(f"{path}:{lineno}: expected {dim} values, got {len(values)}")
        seen.add(image_id)
        ids.append(image_id)
        rows.append(values)
    if not rows:
        raise FormatError(f"{path}: no rows")
    return FeatureMatrix(ids=tuple(ids), values=np.array(rows, dtype=np.float64))


def write_features(matrix: FeatureMatrix, path: str | Path) -> None:
    """Write a features TSV; float formatting round-trips exactly."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for i, image_id in enumerate(matrix.ids):
            values = " ".join(repr(float(v)) for v in matrix.values[i])
            handle.write(f"{image_id}\t{values}\n")


def _parse_label_token(token: str, where: str) -> LabelEntry:
    if ":" in token:
        word, _, count_text = token.rpartition(":")
        if not count_text.isdigit():
            raise FormatError(f"{where}: malformed count in token {token!r}")
        count = int(count_text)
    else:
        word, count = token, 1
    if not word:
        raise FormatError(f"{where}: empty word in token {token!r}")
    if count < 1:
        raise FormatError(f"{where}: count must be >= 1 in token {token!r}")
    return word.lower(), count


def load_labels(path: str | Path) -> LabelCorpus:
    """Parse a labels TSV. Words are lowercased; repeated tokens sum counts."""
    path = Path(path)
    entries: dict[str, tuple[LabelEntry, ...]] = {}
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) == 1:
            image_id, word_text = parts[0], ""
        elif len(parts) == 2:
            image_id, word_text = parts
        else:
            raise FormatError(f"{path}:{lineno}: expected at most 2 columns, got {len(parts)}")
        if not image_id:
            raise FormatError(f"{path}:{lineno}: empty image id")
        if image_id in entries:
            raise FormatError(f"{path}:{lineno}: duplicate image id {image_id!r}")
        counts: dict[str, int] = {}
        for token in word_text.split():
            word, count = _parse_label_token(token, f"{path}:{lineno}")
            counts[word] = counts.get(word, 0) + count
        entries[image_id] = tuple(counts.items())
    if not entries:
        raise FormatError(f"{path}: no rows")
    return LabelCorpus(entries=entries)


def write_labels(corpus: LabelCorpus, path: str | Path) -> None:
    """Write a labels TSV; counts of 1 are left implicit."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for image_id, pairs in corpus.entries.items():
            tokens = " ".join(w if c == 1 else f"{w}:{c}" for w, c in pairs)
            handle.write(f"{image_id}\t{tokens}\n")


def make_bundle(features: FeatureMatrix, labels: LabelCorpus, role: str) -> DatasetBundle:
    """Bind features to labels with the id-intersection check for the role.

    Train role requires identical id sets. Test role tolerates one-sided
    ids: feature rows without labels get an empty label list (blind
    prediction), label entries without a feature row are ignored.
    """
    if role not in ("train", "test"):
        raise ArgumentError(f"role must be 'train' or 'test', got {role!r}")
    feature_ids = set(features.ids)
    label_ids = set(labels.entries)
    if role == "train":
        missing = sorted((feature_ids - label_ids) | (label_ids - feature_ids))
        if missing:
            raise MismatchError(f"ids present in only one input: {', '.join(missing)}", missing=missing)
        aligned = {img: labels.entries[img] for img in features.ids}
    else:
        aligned = {img: labels.entries.get(img, ()) for img in features.ids}
    return DatasetBundle(features=features, labels=LabelCorpus(entries=aligned), role=role)


def split_train_test(
    bundle: DatasetBundle, test_fraction: float, seed: int
) -> tuple[DatasetBundle, DatasetBundle]:
    """Deterministic random split; test size = round(N * fraction), min 1.

    Both halves keep the input row order. Identical inputs always produce
    the identical partition.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ArgumentError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = bundle.n_images
    if n < 2:
        raise ArgumentError("need at least 2 images to split")
    n_test = max(1, round(n * test_fraction))
    if n_test >= n:
        raise ArgumentError(
            f"test_fraction {test_fraction} leaves no training images for N={n}"
        )
    test_positions = set(random.Random(seed).sample(range(n), n_test))
    train_ids = tuple(img for i, img in enumerate(bundle.ids) if i not in test_positions)
    test_ids = tuple(img for i, img in enumerate(bundle.ids) if i in test_positions)
    return subset_bundle(bundle, train_ids, "train"), subset_bundle(bundle, test_ids, "test")


def subset_bundle(bundle: DatasetBundle, ids: Iterable[str], role: str) -> DatasetBundle:
    """Restrict a bundle to the given ids (kept in the given order)."""
    ids = tuple(ids)
    return DatasetBundle(
        features=bundle.features.subset(ids),
        labels=bundle.labels.subset(ids),
        role=role,
    )
