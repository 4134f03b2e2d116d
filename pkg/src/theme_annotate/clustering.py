"""Theme discovery: agglomerative clustering of tfidf rows under cosine similarity.

The merge loop is the naive quadratic one over a dense similarity matrix,
which is exact and deterministic. Memory is O(N^2); at roughly 20k training
images the cache reaches a few GB, which is the documented ceiling for this
implementation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ArgumentError, FormatError, InputIOError
from .textproc import TfidfMatrix

LINKAGES = ("average", "complete", "single")

# Dot products of float vectors carry ~1e-15 noise; values this close to +-1
# are exact similarities (identical or opposite rows) for any realistic input.
_SNAP = 1e-12


@dataclass
class ThemeModel:
    """Disjoint themes over the training ids plus the pruned remainder."""

    themes: tuple[tuple[str, ...], ...]
    dropped: tuple[str, ...]
    cutoff: float
    linkage: str

    @property
    def n_themes(self) -> int:
        return len(self.themes)

    @property
    def n_images(self) -> int:
        return sum(len(t) for t in self.themes) + len(self.dropped)

    def retained_fraction(self) -> float:
        return sum(len(t) for t in self.themes) / self.n_images


@dataclass
class ThemeStats:
    n_themes: int
    size_histogram: dict[int, int]
    retained_fraction: float
    n_retained: int
    n_dropped: int


def _pairwise_cosine(rows) -> np.ndarray:
    """Dense cosine similarity matrix of the (nonzero) tfidf rows."""
    dense = np.asarray(rows.todense(), dtype=np.float64)
    norms = np.linalg.norm(dense, axis=1, keepdims=True)
    unit = dense / norms
    sim = unit @ unit.T
    np.clip(sim, -1.0, 1.0, out=sim)
    sim[sim >= 1.0 - _SNAP] = 1.0
    sim[sim <= -1.0 + _SNAP] = -1.0
    return sim


def cluster_themes(
    tfidf: TfidfMatrix, ids: Sequence[str], cutoff: float, linkage: str = "average"
) -> ThemeModel:
    """Agglomerate singletons while the best cluster pair has similarity >= cutoff.

    Linkage similarity between clusters: mean pairwise cosine (average),
    minimum (complete), or maximum (single). Ties pick the smallest pair of
    cluster indices, so results are reproducible. Rows that are all-zero
    cannot be compared and go straight to ``dropped``.
    """
    if not 0.0 < cutoff <= 1.0:
        raise ArgumentError(f"cutoff must lie in (0, 1], got {cutoff}")
    if linkage not in LINKAGES:
        raise ArgumentError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    ids = tuple(ids)
    if len(ids) != tfidf.n_images:
        raise ArgumentError(
            f"got {len(ids)} ids for {tfidf.n_images} tfidf rows"
        )
    row_norms = np.sqrt(np.asarray(tfidf.matrix.multiply(tfidf.matrix).sum(axis=1))).ravel()
    nonzero = np.flatnonzero(row_norms > 0.0)
    dropped = tuple(ids[i] for i in np.flatnonzero(row_norms == 0.0))
    if nonzero.size == 0:
        raise ArgumentError("all tfidf rows are zero; nothing to cluster")

    sim = _pairwise_cosine(tfidf.matrix[nonzero])
    n = nonzero.size
    # Upper triangle holds live pair similarities; everything else is -inf.
    work = np.full((n, n), -np.inf)
    iu = np.triu_indices(n, k=1)
    work[iu] = sim[iu]
    sizes = np.ones(n, dtype=np.int64)
    members: list[list[int] | None] = [[i] for i in range(n)]

    while n > 1:
        flat = int(np.argmax(work))  # first max in row-major order = smallest (i, j)
        i, j = divmod(flat, work.shape[0])
        if not work[i, j] >= cutoff:
            break
        # Merge j into i (i < j by construction) and update linkage rows.
        row_i = np.where(work[i] > -np.inf, work[i], work[:, i])
        row_j = np.where(work[j] > -np.inf, work[j], work[:, j])
        if linkage == "average":
            merged = (sizes[i] * row_i + sizes[j] * row_j) / (sizes[i] + sizes[j])
        elif linkage == "complete":
            merged = np.minimum(row_i, row_j)
        else:
            merged = np.maximum(row_i, row_j)
        alive = np.array([m is not None for m in members])
        alive[i] = alive[j] = False
        work[i, :] = -np.inf
        work[:, i] = -np.inf
        work[j, :] = -np.inf
        work[:, j] = -np.inf
        idx = np.flatnonzero(alive)
        lo = idx[idx < i]
        hi = idx[idx > i]
        work[lo, i] = merged[lo]
        work[i, hi] = merged[hi]
        sizes[i] += sizes[j]
        members[i].extend(members[j])  # type: ignore[union-attr]
        members[j] = None
        n -= 1

    themes = []
    for cluster in members:
        if cluster is None:
            continue
        cluster.sort()
        themes.append(tuple(ids[nonzero[k]] for k in cluster))
    return ThemeModel(themes=tuple(themes), dropped=dropped, cutoff=cutoff, linkage=linkage)


def prune_themes(model: ThemeModel, coverage: float) -> ThemeModel:
    """Drop the smallest themes while the retained fraction stays >= coverage.

    Candidates are visited in ascending (size, smallest member id) order;
    the first theme whose removal would undershoot the coverage stops the
    sweep, so a theme is never dropped while a smaller one survives.
    """
    if not 0.0 < coverage <= 1.0:
        raise ArgumentError(f"coverage must lie in (0, 1], got {coverage}")
    total = model.n_images
    retained = sum(len(t) for t in model.themes)
    order = sorted(range(len(model.themes)), key=lambda k: (len(model.themes[k]), min(model.themes[k])))
    to_drop: set[int] = set()
    for k in order:
        size = len(model.themes[k])
        if (retained - size) / total >= coverage:
            to_drop.add(k)
            retained -= size
        else:
            break
    if not to_drop:
        return model
    kept = tuple(t for k, t in enumerate(model.themes) if k not in to_drop)
    extra = [img for k in sorted(to_drop) for img in model.themes[k]]
    return replace(model, themes=kept, dropped=model.dropped + tuple(extra))


def theme_stats(model: ThemeModel) -> ThemeStats:
    sizes = [len(t) for t in model.themes]
    histogram: dict[int, int] = {}
    for s in sizes:
        histogram[s] = histogram.get(s, 0) + 1
    return ThemeStats(
        n_themes=model.n_themes,
        size_histogram=dict(sorted(histogram.items())),
        retained_fraction=model.retained_fraction(),
        n_retained=sum(sizes),
        n_dropped=len(model.dropped),
    )


def write_themes(model: ThemeModel, path: str | Path) -> None:
    """themes.tsv: ``<theme_index>\\t<id>,<id>,...``; dropped ids under index -1."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"# cutoff={model.cutoff!r} linkage={model.linkage}\n")
        for k, theme in enumerate(model.themes):
            handle.write(f"{k}\t{','.join(theme)}\n")
        if model.dropped:
            handle.write(f"-1\t{','.join(model.dropped)}\n")


def read_themes(path: str | Path) -> ThemeModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc}") from exc
    cutoff, linkage = 0.0, ""
    themes: list[tuple[str, ...]] = []
    dropped: tuple[str, ...] = ()
    expected = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith("#"):
            fields = dict(part.split("=", 1) for part in line[1:].split())
            cutoff = float(fields.get("cutoff", "0"))
            linkage = fields.get("linkage", "")
            continue
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[1]:
            raise FormatError(f"{path}:{lineno}: expected '<index>\\t<ids>'")
        index = int(parts[0])
        ids = tuple(parts[1].split(","))
        if index == -1:
            dropped = ids
        else:
            if index != expected:
                raise FormatError(f"{path}:{lineno}: theme index {index}, expected {expected}")
            expected += 1
            themes.append(ids)
    if not themes:
        raise FormatError(f"{path}: no themes")
    return ThemeModel(themes=tuple(themes), dropped=dropped, cutoff=cutoff, linkage=linkage)
