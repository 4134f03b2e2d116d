"""Closed-form behavior of a random annotator, plus a Monte-Carlo check.

A classifier that assigns each image a uniformly random set of z distinct
words out of an M-word vocabulary has, for a word carried by fraction X of
the images:

    p(word assigned) = z / M
    p(TP) = z X / M          p(FP) = z (1 - X) / M      p(FN) = X (M - z) / M

so precision reduces to X and recall to z / M: precision tracks word
frequency, recall collapses as the vocabulary grows. The simulator draws
actual z-subsets (never the closed forms) so the two routes stay
independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateError


@dataclass
class RandomBaselineParams:
    """M = vocabulary size, z = labels drawn per image, X = true-label fraction."""

    M: int
    z: int
    X: float

    def __post_init__(self):
        if self.M < 1:
            raise ArgumentError(f"M must be >= 1, got {self.M}")
        if not 1 <= self.z <= self.M:
            raise ArgumentError(f"z must lie in [1, M], got z={self.z}, M={self.M}")
        if not 0.0 <= self.X <= 1.0:
            raise ArgumentError(f"X must lie in [0, 1], got {self.X}")


@dataclass
class AnalyticProbabilities:
    p_word: float
    p_tp: float
    p_fp: float
    p_fn: float


@dataclass
class AnalyticPR:
    precision: float
    recall: float | None  # None when X = 0 (no true positives exist)


@dataclass
class SimulatedPR:
    precision: float
    precision_se: float
    recall: float
    recall_se: float
    images: int
    trials: int


def analytic_probabilities(params: RandomBaselineParams) -> AnalyticProbabilities:
    M, z, X = params.M, params.z, params.X
    return AnalyticProbabilities(
        p_word=z / M,
        p_tp=z * X / M,
        p_fp=z * (1.0 - X) / M,
        p_fn=X * (M - z) / M,
    )


def analytic_pr(params: RandomBaselineParams) -> AnalyticPR:
    """Precision = X and recall = z/M, directly from the outcome probabilities.

    With X = 0 there are no true positives, recall is 0/0, and the value is
    reported as absent rather than raised.
    """
    probs = analytic_probabilities(params)
    precision = probs.p_tp / (probs.p_tp + probs.p_fp)  # = X; z >= 1 keeps this finite
    if params.X == 0.0:
        return AnalyticPR(precision=precision, recall=None)
    recall = probs.p_tp / (probs.p_tp + probs.p_fn)  # = z / M
    return AnalyticPR(precision=precision, recall=recall)


def simulate_random_classifier(
    params: RandomBaselineParams, images: int, trials: int, seed: int
) -> SimulatedPR:
    """Estimate precision/recall of one tracked word by drawing real z-subsets.

    Per trial: the tracked word is truly present in round(X * images)
    images; every image independently receives a uniform random z-subset of
    the vocabulary. Membership of the tracked word is read off the subset
    draw itself. Trials use seeds spawned deterministically from ``seed``,
    so results are order-independent and reproducible.
    """
    if images < 1:
        raise ArgumentError(f"images must be >= 1, got {images}")
    if trials < 1:
        raise ArgumentError(f"trials must be >= 1, got {trials}")
    n_pos = round(params.X * images)
    if n_pos == 0:
        raise DegenerateError(
            f"X={params.X} with images={images} yields no truly-positive images; recall undefined"
        )
    M, z = params.M, params.z
    precisions = np.empty(trials)
    recalls = np.empty(trials)
    for trial, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(child)
        # Rank iid uniforms per image; the z smallest form a uniform z-subset.
        # The tracked word is column 0; it is drawn iff its value is within
        # the z smallest of its row.
        draws = rng.random((images, M))
        if z < M:
            threshold = np.partition(draws, z - 1, axis=1)[:, z - 1]
            assigned = draws[:, 0] <= threshold
        else:
            assigned = np.ones(images, dtype=bool)
        tp = int(np.count_nonzero(assigned[:n_pos]))
        fp = int(np.count_nonzero(assigned[n_pos:]))
        predicted = tp + fp
        precisions[trial] = tp / predicted if predicted else 0.0
        recalls[trial] = tp / n_pos
    return SimulatedPR(
        precision=float(precisions.mean()),
        precision_se=_standard_error(precisions),
        recall=float(recalls.mean()),
        recall_se=_standard_error(recalls),
        images=images,
        trials=trials,
    )


def _standard_error(samples: np.ndarray) -> float:
    if samples.size < 2:
        return 0.0
    return float(samples.std(ddof=1) / np.sqrt(samples.size))
