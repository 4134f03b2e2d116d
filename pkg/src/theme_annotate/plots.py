"""Figure rendering for the report paths.

Figures are written headlessly with fixed sizes and stripped metadata so
repeated runs produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .clustering import ThemeStats

_SAVE_OPTS = {"dpi": 100, "metadata": {"Software": None}}


def save_theme_size_figure(stats: ThemeStats, path: str | Path) -> None:
    """Histogram of theme sizes with the retained fraction in the title."""
    sizes = sorted(stats.size_histogram)
    counts = [stats.size_histogram[s] for s in sizes]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.bar(sizes, counts, width=0.8, color="#4878b0")
    ax.set_xlabel("theme size (images)")
    ax.set_ylabel("number of themes")
    ax.set_title(
        f"{stats.n_themes} themes, retained fraction {stats.retained_fraction:.3f}"
    )
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def save_precision_frequency_figure(
    bins: Sequence[tuple[float, float]], path: str | Path
) -> None:
    """Binned precision-vs-frequency points plus a least-squares line fit."""
    freqs = np.array([b[0] for b in bins], dtype=float)
    precs = np.array([b[1] for b in bins], dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(freqs, precs, "o", color="#4878b0", label="bins of 10 words")
    if len(bins) >= 2 and np.ptp(freqs) > 0:
        slope, intercept = np.polyfit(freqs, precs, 1)
        line_x = np.array([freqs.min(), freqs.max()])
        ax.plot(line_x, slope * line_x + intercept, "-", color="#d1605e", label="least-squares fit")
    ax.set_xlabel("mean training frequency")
    ax.set_ylabel("mean precision")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
