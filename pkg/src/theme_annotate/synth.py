"""Synthetic planted-theme datasets for tests and acceptance runs.

Each theme owns a disjoint block of feature coordinates (so theme
prototypes are orthogonal) and a set of distinctive words carried by every
member. Common words are shared across themes on a rotating schedule, which
spreads their training frequencies well above the distinctive words' and
keeps every image's label set recoverable from its theme alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import FeatureMatrix, LabelCorpus, write_features, write_labels
from .errors import ArgumentError


@dataclass
class SynthDataset:
    features: FeatureMatrix
    labels: LabelCorpus
    assignments: dict[str, int]  # image id -> planted theme index
    theme_words: list[list[str]]  # per theme: distinctive + assigned common words


def generate_planted_dataset(
    themes: int = 8,
    images_per_theme: int = 40,
    dim: int = 64,
    noise: float = 0.05,
    words_per_theme: int = 3,
    common_words: int = 5,
    common_per_theme: int = 2,
    seed: int = 0,
) -> SynthDataset:
    if themes < 1 or images_per_theme < 1:
        raise ArgumentError("themes and images_per_theme must be >= 1")
    if dim < themes:
        raise ArgumentError(f"dim must be >= themes for orthogonal prototypes, got {dim} < {themes}")
    if words_per_theme < 1:
        raise ArgumentError("words_per_theme must be >= 1")
    if noise < 0:
        raise ArgumentError("noise must be nonnegative")
    if common_words > 0 and not 0 <= common_per_theme <= common_words:
        raise ArgumentError("common_per_theme must lie in [0, common_words]")

    rng = np.random.default_rng(seed)
    block = dim // themes
    prototypes = np.zeros((themes, dim))
    for t in range(themes):
        prototypes[t, t * block : (t + 1) * block] = rng.uniform(0.5, 1.0, size=block)

    common = [f"common{c}" for c in range(common_words)]
    theme_words: list[list[str]] = []
    for t in range(themes):
        words = [f"theme{t:02d}w{k}" for k in range(words_per_theme)]
        if common_words > 0:
            words += [common[(common_per_theme * t + i) % common_words] for i in range(common_per_theme)]
        theme_words.append(words)

    ids: list[str] = []
    rows: list[np.ndarray] = []
    entries: dict[str, tuple[tuple[str, int], ...]] = {}
    assignments: dict[str, int] = {}
    for t in range(themes):
        for g in range(images_per_theme):
            image_id = f"img{t * images_per_theme + g:04d}"
            ids.append(image_id)
            rows.append(prototypes[t] + noise * rng.standard_normal(dim))
            counts = rng.integers(1, 3, size=len(theme_words[t]))
            entries[image_id] = tuple(zip(theme_words[t], (int(c) for c in counts)))
            assignments[image_id] = t

    return SynthDataset(
        features=FeatureMatrix(ids=tuple(ids), values=np.array(rows)),
        labels=LabelCorpus(entries=entries),
        assignments=assignments,
        theme_words=theme_words,
    )


def write_synth_dataset(data: SynthDataset, output_dir: str | Path) -> None:
    """Emit features.tsv, labels.tsv, and the planted assignment oracle."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    write_features(data.features, output_dir / "features.tsv")
    write_labels(data.labels, output_dir / "labels.tsv")
    with (output_dir / "themes_true.tsv").open("w", encoding="utf-8", newline="\n") as handle:
        for image_id, theme in data.assignments.items():
            handle.write(f"{image_id}\t{theme}\n")
