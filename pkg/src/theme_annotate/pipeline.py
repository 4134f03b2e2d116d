"""Two-layer coarse-to-fine annotation.

Layer 1 reconstructs the test feature over all training images with
theme-contiguous grouped sparsity and keeps the themes whose coefficient
blocks are nonzero. Layer 2 rescores every candidate word by how well the
word's representative images (drawn only from the layer-1 survivors)
reconstruct the test feature, measured as the cosine between the
reconstruction and the test feature. The top-B words win.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import ThemeModel
from .dataset import DatasetBundle
from .errors import ArgumentError, FormatError, InputIOError, WordNotCandidateError
from .solvers import DesignMatrix, GroupStructure, SolverConfig, SparseSolution, solve_lasso, solve_sgl
from .textproc import Vocabulary, cosine_similarity

logger = logging.getLogger("theme_annotate.pipeline")

EPSILON_GROUP = 1e-8
FALLBACK_HALVINGS = 6


@dataclass
class ThemeSelection:
    """Layer-1 outcome: surviving themes, their active images, candidate words."""

    selected_theme_indices: tuple[int, ...]
    active_image_ids: tuple[str, ...]
    candidate_words: frozenset[str]
    layer1_solution: SparseSolution
    fallback: str | None = None


@dataclass
class AnnotationResult:
    image_id: str
    theme_selection: ThemeSelection
    word_scores: dict[str, float]
    annotations: tuple[str, ...]


def build_theme_design(
    train: DatasetBundle, themes: ThemeModel, normalize: bool = True
) -> tuple[DesignMatrix, GroupStructure]:
    """Design matrix with one column per retained training image, themes contiguous."""
    column_ids = [img for theme in themes.themes for img in theme]
    columns = [train.features.vector(img) for img in column_ids]
    groups = GroupStructure.from_sizes([len(t) for t in themes.themes])
    return DesignMatrix.build(columns, column_ids, normalize=normalize), groups


def gather_candidates(train: DatasetBundle, image_ids, vocab: Vocabulary) -> frozenset[str]:
    """Union of the images' words, restricted to the vocabulary."""
    words: set[str] = set()
    for img in image_ids:
        words.update(w for w in train.labels.word_set(img) if w in vocab.index)
    return frozenset(words)


def _nearest_theme(test_feature: np.ndarray, train: DatasetBundle, themes: ThemeModel) -> int:
    best = (-2.0, 0)
    for k, theme in enumerate(themes.themes):
        mean = np.mean([train.features.vector(img) for img in theme], axis=0)
        sim = cosine_similarity(mean, test_feature)
        if sim > best[0]:
            best = (sim, k)
    return best[1]


def select_themes(
    test_feature: np.ndarray,
    train: DatasetBundle,
    themes: ThemeModel,
    vocab: Vocabulary,
    cfg: SolverConfig,
    epsilon_group: float = EPSILON_GROUP,
    all_theme_members: bool = False,
) -> ThemeSelection:
    """Pick the themes whose coefficient groups survive the grouped shrinkage.

    An all-zero layer-1 solution never propagates: the group penalty is
    halved up to six times, and if the solution is still empty the single
    theme with the highest mean-feature cosine is selected outright. Active
    images are the nonzero-coefficient columns of the selected groups, or
    every member when ``all_theme_members`` is set.
    """
    test_feature = np.asarray(test_feature, dtype=np.float64).ravel()
    if test_feature.shape[0] != train.features.dim:
        raise ArgumentError(
            f"test feature has {test_feature.shape[0]} dims, training data has {train.features.dim}"
        )
    design, groups = build_theme_design(train, themes, normalize=cfg.normalize)
    fallback = None
    lambda2 = cfg.lambda2
    solution = solve_sgl(design, test_feature, groups, cfg.lambda1, lambda2, cfg)
    selected = _surviving_groups(solution.w, groups, epsilon_group)
    for attempt in range(FALLBACK_HALVINGS):
        if selected:
            break
        lambda2 /= 2.0
        fallback = f"group penalty halved x{attempt + 1}"
        solution = solve_sgl(design, test_feature, groups, cfg.lambda1, lambda2, cfg)
        selected = _surviving_groups(solution.w, groups, epsilon_group)

    if selected:
        active = []
        for k in selected:
            start, stop = groups.ranges[k]
            for offset in np.flatnonzero(np.abs(solution.w[start:stop]) > epsilon_group):
                active.append(design.column_ids[start + int(offset)])
        if all_theme_members:
            active = [img for k in selected for img in themes.themes[k]]
    else:
        nearest = _nearest_theme(test_feature, train, themes)
        fallback = "nearest mean theme"
        selected = [nearest]
        active = list(themes.themes[nearest])
    if fallback:
        logger.debug("theme selection fallback: %s", fallback)
    return ThemeSelection(
        selected_theme_indices=tuple(selected),
        active_image_ids=tuple(active),
        candidate_words=gather_candidates(train, active, vocab),
        layer1_solution=solution,
        fallback=fallback,
    )


def _surviving_groups(w: np.ndarray, groups: GroupStructure, epsilon: float) -> list[int]:
    return [
        k
        for k, (start, stop) in enumerate(groups.ranges)
        if float(np.linalg.norm(w[start:stop])) > epsilon
    ]


def word_design(
    selection: ThemeSelection, train: DatasetBundle, word: str, normalize: bool = True
) -> DesignMatrix:
    """Columns are the active images tagged with the word, in layer-1 order."""
    ids = [img for img in selection.active_image_ids if word in train.labels.word_set(img)]
    return DesignMatrix.build([train.features.vector(img) for img in ids], ids, normalize=normalize)


def score_word(
    test_feature: np.ndarray,
    word: str,
    selection: ThemeSelection,
    train: DatasetBundle,
    rho: float,
    cfg: SolverConfig,
) -> float:
    """Cosine between the word's sparse reconstruction and the test feature.

    A fully shrunk solution (w = 0) has no reconstruction to compare, so it
    scores -1, the floor of the range.
    """
    if word not in selection.candidate_words:
        raise WordNotCandidateError(f"{word!r} is not a candidate for this image")
    design = word_design(selection, train, word, normalize=cfg.normalize)
    solution = solve_lasso(design, test_feature, rho, cfg)
    if not np.any(solution.w):
        return -1.0
    reconstruction = design.matrix @ solution.w
    return cosine_similarity(reconstruction, test_feature)


def annotate(
    test_feature: np.ndarray,
    image_id: str,
    train: DatasetBundle,
    themes: ThemeModel,
    vocab: Vocabulary,
    cfg: SolverConfig,
    b: int = 5,
    epsilon_group: float = EPSILON_GROUP,
    all_theme_members: bool = False,
) -> AnnotationResult:
    """Full two-layer pass for one image: select themes, score words, keep top B."""
    if b < 1:
        raise ArgumentError(f"b must be >= 1, got {b}")
    selection = select_themes(
        test_feature, train, themes, vocab, cfg,
        epsilon_group=epsilon_group, all_theme_members=all_theme_members,
    )
    scores = {
        word: score_word(test_feature, word, selection, train, cfg.rho, cfg)
        for word in sorted(selection.candidate_words)
    }
    ranked = sorted(scores, key=lambda w: (-scores[w], w))
    return AnnotationResult(
        image_id=image_id,
        theme_selection=selection,
        word_scores=scores,
        annotations=tuple(ranked[:b]),
    )


def annotate_batch(
    test: DatasetBundle,
    train: DatasetBundle,
    themes: ThemeModel,
    vocab: Vocabulary,
    cfg: SolverConfig,
    b: int = 5,
    epsilon_group: float = EPSILON_GROUP,
    all_theme_members: bool = False,
    jobs: int = 1,
) -> list[AnnotationResult]:
    """Annotate every test image; output order always matches input order.

    A failure on one image is logged and yields an empty result for that
    image; the batch never aborts.
    """
    if jobs < 1:
        raise ArgumentError(f"jobs must be >= 1, got {jobs}")

    def one(image_id: str) -> AnnotationResult:
        try:
            return annotate(
                test.features.vector(image_id), image_id, train, themes, vocab, cfg,
                b=b, epsilon_group=epsilon_group, all_theme_members=all_theme_members,
            )
        except Exception:
            logger.warning("annotation failed for %s", image_id, exc_info=True)
            empty = ThemeSelection((), (), frozenset(), SparseSolution(np.zeros(0), 0.0, 0, False, 0.0), "error")
            return AnnotationResult(image_id, empty, {}, ())

    if jobs == 1:
        results = [one(img) for img in test.ids]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, test.ids))
    fallbacks = sum(1 for r in results if r.theme_selection.fallback)
    if fallbacks:
        logger.info("%d/%d images needed a theme-selection fallback", fallbacks, len(results))
    return results


def write_annotations(results: list[AnnotationResult], path) -> None:
    """annotations.tsv: ``<image_id>\\t<word>:<score> ...`` with 6-decimal scores."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        for result in results:
            tokens = " ".join(f"{w}:{result.word_scores[w]:.6f}" for w in result.annotations)
            handle.write(f"{result.image_id}\t{tokens}\n")


def read_annotations(path) -> dict[str, tuple[str, ...]]:
    """Predicted words per image, in rank order; scores are not needed back."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc}") from exc
    out: dict[str, tuple[str, ...]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) == 1:
            image_id, token_text = parts[0], ""
        elif len(parts) == 2:
            image_id, token_text = parts
        else:
            raise FormatError(f"{path}:{lineno}: expected 2 columns")
        if image_id in out:
            raise FormatError(f"{path}:{lineno}: duplicate image id {image_id!r}")
        words = []
        for token in token_text.split():
            word, _, _ = token.rpartition(":")
            if not word:
                raise FormatError(f"{path}:{lineno}: malformed token {token!r}")
            words.append(word)
        out[image_id] = tuple(words)
    return out
