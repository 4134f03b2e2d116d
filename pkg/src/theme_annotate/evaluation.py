"""Per-word precision/recall accounting and the derived summary metrics.

Per-word precision and recall use the 0-when-undefined convention (a word
never predicted has precision 0, a word never truly present has recall 0).
The summary F-score is the harmonic mean of the *mean* precision and the
*mean* recall, not the mean of per-word F-scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import ArgumentError, KeyMismatchError
from .textproc import Vocabulary


@dataclass
class WordCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    train_frequency: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0


@dataclass
class MetricsReport:
    mean_precision: float
    mean_recall: float
    mean_f: float
    n_plus: int
    per_word: dict[str, WordCounts]
    bins: tuple[tuple[float, float], ...] = field(default_factory=tuple)


def confusion_counts(
    predictions: Mapping[str, Iterable[str]],
    truth: Mapping[str, Iterable[str]],
    vocab: Vocabulary,
    train_frequency: Mapping[str, int] | None = None,
) -> dict[str, WordCounts]:
    """Accumulate tp/fp/fn per vocabulary word over all test images.

    Words outside the vocabulary are ignored on both sides. The table
    always covers the full vocabulary, so never-predicted words still
    contribute zeros to the means.
    """
    pred_keys = set(predictions)
    truth_keys = set(truth)
    if pred_keys != truth_keys:
        odd = sorted(pred_keys.symmetric_difference(truth_keys))
        raise KeyMismatchError(f"prediction/truth image ids differ: {', '.join(odd[:10])}")
    train_frequency = train_frequency or {}
    table = {
        w: WordCounts(train_frequency=train_frequency.get(w, 0)) for w in vocab.words
    }
    for image_id in predictions:
        predicted = {w for w in predictions[image_id] if w in vocab.index}
        actual = {w for w in truth[image_id] if w in vocab.index}
        for word in predicted & actual:
            table[word].tp += 1
        for word in predicted - actual:
            table[word].fp += 1
        for word in actual - predicted:
            table[word].fn += 1
    return table


def mean_metrics(table: Mapping[str, WordCounts]) -> MetricsReport:
    """Unweighted means over all vocabulary words, F from the means, and N+."""
    if not table:
        raise ArgumentError("empty confusion table")
    n = len(table)
    mean_p = sum(c.precision for c in table.values()) / n
    mean_r = sum(c.recall for c in table.values()) / n
    mean_f = 2.0 * mean_p * mean_r / (mean_p + mean_r) if mean_p + mean_r > 0 else 0.0
    n_plus = sum(1 for c in table.values() if c.recall > 0)
    return MetricsReport(
        mean_precision=mean_p,
        mean_recall=mean_r,
        mean_f=mean_f,
        n_plus=n_plus,
        per_word=dict(table),
    )


def precision_frequency_bins(
    table: Mapping[str, WordCounts], bin_size: int = 10
) -> list[tuple[float, float]]:
    """(mean frequency, mean precision) over consecutive frequency-sorted chunks.

    Words are sorted by training frequency ascending (ties lexicographic)
    and chunked into groups of ``bin_size``; the final chunk may be
    smaller. The points are emitted raw, ready for line fitting.
    """
    if bin_size < 1:
        raise ArgumentError(f"bin_size must be >= 1, got {bin_size}")
    ordered = sorted(table.items(), key=lambda kv: (kv[1].train_frequency, kv[0]))
    bins = []
    for start in range(0, len(ordered), bin_size):
        chunk = ordered[start : start + bin_size]
        mean_freq = sum(c.train_frequency for _, c in chunk) / len(chunk)
        mean_prec = sum(c.precision for _, c in chunk) / len(chunk)
        bins.append((mean_freq, mean_prec))
    return bins
