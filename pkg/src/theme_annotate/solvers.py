"""Proximal-gradient solvers for the two regularized reconstruction problems.

Layer 2 solves ``min_w ||A w - y||_2^2 + rho ||w||_1`` (per-word model);
layer 1 solves ``min_w ||A w - y||_2^2 + lambda1 ||w||_1 +
lambda2 * sum_k phi_k ||w_k||_2`` over theme-contiguous column groups.

Both use monotone FISTA from w = 0 with step 1/L, L estimated by power
iteration on A^T A (or found by backtracking). The composite prox for the
grouped penalty applies the elementwise shrinkage first and the groupwise
shrinkage second, which is exact for this penalty pair. Solutions carry a
KKT-style certificate so convergence claims are checkable after the fact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, GroupError, ShapeError

_POWER_SEED = 0x5EED
_L_MARGIN = 1.01  # power iteration approaches the top eigenvalue from below


@dataclass
class DesignMatrix:
    """Dense n x p matrix whose columns are training image features."""

    matrix: np.ndarray
    column_ids: tuple[str, ...]
    normalized: bool = False

    def __post_init__(self):
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise ShapeError("design matrix must be 2-D")
        n, p = self.matrix.shape
        if n < 1 or p < 1:
            raise ShapeError(f"design matrix must be nonempty, got shape {n}x{p}")
        if len(self.column_ids) != p:
            raise ShapeError(f"{len(self.column_ids)} column ids for {p} columns")
        if not np.all(np.isfinite(self.matrix)):
            raise ShapeError("design matrix entries must be finite")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def p(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def build(cls, columns: Sequence[np.ndarray], ids: Sequence[str], normalize: bool = True):
        """Stack feature vectors as columns, optionally L2-normalizing each.

        Normalization makes the regularization scales portable across
        feature dimensions; zero columns are left untouched.
        """
        matrix = np.column_stack([np.asarray(c, dtype=np.float64) for c in columns])
        if normalize:
            norms = np.linalg.norm(matrix, axis=0)
            matrix = matrix / np.where(norms > 0.0, norms, 1.0)
        return cls(matrix=matrix, column_ids=tuple(ids), normalized=normalize)


@dataclass
class GroupStructure:
    """Contiguous column ranges (start, stop) partitioning 0..p-1, with weights."""

    ranges: tuple[tuple[int, int], ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.ranges) != len(self.weights):
            raise GroupError("one weight per group required")
        if any(w <= 0 for w in self.weights):
            raise GroupError("group weights must be positive")
        expected = 0
        for start, stop in self.ranges:
            if start != expected or stop <= start:
                raise GroupError(f"group ranges must be contiguous, got {self.ranges}")
            expected = stop
        self.p = expected

    @classmethod
    def from_sizes(cls, sizes: Sequence[int], weights: Sequence[float] | None = None):
        """Build from group sizes; default weight 1.0 per group."""
        ranges = []
        start = 0
        for size in sizes:
            ranges.append((start, start + size))
            start += size
        if weights is None:
            weights = [1.0] * len(sizes)
        return cls(ranges=tuple(ranges), weights=tuple(weights))

    def validate_for(self, p: int) -> None:
        if self.p != p:
            raise GroupError(f"groups cover {self.p} columns, design matrix has {p}")


@dataclass
class SolverConfig:
    lambda1: float = 0.01
    lambda2: float = 0.1
    rho: float = 0.01
    max_iter: int = 2000
    tol: float = 1e-6
    step_rule: str = "fixed"
    normalize: bool = True

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0 or self.rho < 0:
            raise ArgumentError("regularization weights must be nonnegative")
        if self.max_iter < 1:
            raise ArgumentError("max_iter must be >= 1")
        if self.tol <= 0:
            raise ArgumentError("tol must be positive")
        if self.step_rule not in ("fixed", "backtracking"):
            raise ArgumentError(f"unknown step_rule {self.step_rule!r}")


@dataclass
class SparseSolution:
    w: np.ndarray
    objective: float
    iterations: int
    converged: bool
    kkt_residual: float


def soft_threshold(x, t):
    """Elementwise shrinkage: sign(x) * max(|x| - t, 0)."""
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def group_soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    """Block shrinkage: max(1 - t/||v||_2, 0) * v; the zero vector maps to itself."""
    norm = float(np.linalg.norm(v))
    if norm == 0.0 or norm <= t:
        return np.zeros_like(v)
    return (1.0 - t / norm) * v


def _check_vector(A: DesignMatrix, y, w=None) -> tuple[np.ndarray, np.ndarray | None]:
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != A.n:
        raise ShapeError(f"target has {y.shape[0]} entries, design matrix has {A.n} rows")
    if w is None:
        return y, None
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape[0] != A.p:
        raise ShapeError(f"coefficients have {w.shape[0]} entries, design matrix has {A.p} columns")
    return y, w


def lasso_objective(A: DesignMatrix, y, w, rho: float) -> float:
    y, w = _check_vector(A, y, w)
    r = A.matrix @ w - y
    return float(r @ r + rho * np.abs(w).sum())


def sgl_objective(A: DesignMatrix, y, w, groups: GroupStructure, lambda1: float, lambda2: float) -> float:
    y, w = _check_vector(A, y, w)
    groups.validate_for(A.p)
    r = A.matrix @ w - y
    penalty = lambda1 * np.abs(w).sum()
    for (start, stop), phi in zip(groups.ranges, groups.weights):
        penalty += lambda2 * phi * float(np.linalg.norm(w[start:stop]))
    return float(r @ r) + penalty


def kkt_residual_lasso(A: DesignMatrix, y, w, rho: float) -> float:
    """Max stationarity violation of the l1-penalized objective at w."""
    y, w = _check_vector(A, y, w)
    g = 2.0 * (A.matrix.T @ (A.matrix @ w - y))
    active = w != 0.0
    violation = np.where(
        active,
        np.abs(g + rho * np.sign(w)),
        np.maximum(np.abs(g) - rho, 0.0),
    )
    return float(violation.max())


def _lipschitz(matrix: np.ndarray) -> float:
    """2 * lambda_max(A^T A) with a small safety margin, by power iteration."""
    rng = np.random.default_rng(_POWER_SEED)
    v = rng.standard_normal(matrix.shape[1])
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    v /= nv
    lam = 0.0
    for _ in range(500):
        u = matrix @ v
        new_lam = float(u @ u)
        w = matrix.T @ u
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(new_lam - lam) <= 1e-13 * max(1.0, new_lam):
            lam = new_lam
            break
        lam = new_lam
    return 2.0 * lam * _L_MARGIN


def _fista(
    matrix: np.ndarray,
    y: np.ndarray,
    prox: Callable[[np.ndarray, float], np.ndarray],
    penalty: Callable[[np.ndarray], float],
    cfg: SolverConfig,
) -> tuple[np.ndarray, float, int, bool, float, list[float]]:
    """Monotone FISTA from w=0. Returns (w, F(w), iterations, stopped_early, step, trace)."""

    def smooth(w: np.ndarray) -> float:
        r = matrix @ w - y
        return float(r @ r)

    def grad(w: np.ndarray) -> np.ndarray:
        return 2.0 * (matrix.T @ (matrix @ w - y))

    def objective(w: np.ndarray) -> float:
        return smooth(w) + penalty(w)

    p = matrix.shape[1]
    x = np.zeros(p)
    f_x = objective(x)
    trace = [f_x]

    lipschitz = _lipschitz(matrix)
    if lipschitz == 0.0:
        # Zero design matrix: the smooth gradient vanishes and w=0 is a
        # fixed point of the prox step.
        return x, f_x, 0, True, 0.0, trace

    step = 1.0 / lipschitz if cfg.step_rule == "fixed" else 1.0
    x_prev = x
    momentum = x
    t = 1.0
    stopped = False
    iterations = 0

    for iterations in range(1, cfg.max_iter + 1):
        g = grad(momentum)
        z = prox(momentum - step * g, step)
        if cfg.step_rule == "backtracking":
            f_mom = smooth(momentum)
            for _ in range(100):
                diff = z - momentum
                bound = f_mom + float(g @ diff) + float(diff @ diff) / (2.0 * step)
                if smooth(z) <= bound + 1e-12 * max(1.0, abs(bound)):
                    break
                step *= 0.5
                z = prox(momentum - step * g, step)
        f_z = objective(z)

        f_prev = f_x
        if f_z <= f_x:
            x_prev, x, f_x = x, z, f_z
            t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
            momentum = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev)
            t = t_next
        else:
            # Accelerated candidate overshot: restart momentum and fall back
            # to a plain proximal step from the incumbent.
            z = prox(x - step * grad(x), step)
            f_z = objective(z)
            if f_z <= f_x:
                x_prev, x, f_x = x, z, f_z
            momentum = x
            t = 1.0
        if __debug__:
            assert f_x <= f_prev
        trace.append(f_x)
        if f_prev - f_x < cfg.tol * max(1.0, abs(f_prev)):
            stopped = True
            break

    return x, f_x, iterations, stopped, step, trace


def _write_trace(trace: list[float], trace_path: str | Path) -> None:
    with Path(trace_path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["iteration", "objective"])
        for i, value in enumerate(trace):
            writer.writerow([i, repr(value)])


def _certificate_scale(A: DesignMatrix, y: np.ndarray) -> float:
    return 1.0 + float(np.abs(2.0 * (A.matrix.T @ y)).max())


def solve_lasso(
    A: DesignMatrix, y, rho: float, cfg: SolverConfig, trace_path: str | Path | None = None
) -> SparseSolution:
    """Minimize ||A w - y||_2^2 + rho ||w||_1 from w = 0.

    Stops when the relative objective decrease falls below ``cfg.tol`` or
    ``cfg.max_iter`` is hit. ``converged`` additionally requires the KKT
    residual to pass the tol-scaled certificate; a failed certificate is a
    warning flag on the solution, never an exception.
    """
    if rho < 0:
        raise ArgumentError("rho must be nonnegative")
    y, _ = _check_vector(A, y)
    w, objective, iterations, stopped, _, trace = _fista(
        A.matrix, y, lambda v, s: soft_threshold(v, s * rho), lambda v: rho * float(np.abs(v).sum()), cfg
    )
    if trace_path is not None:
        _write_trace(trace, trace_path)
    kkt = kkt_residual_lasso(A, y, w, rho)
    converged = stopped and kkt <= cfg.tol * _certificate_scale(A, y)
    return SparseSolution(w=w, objective=objective, iterations=iterations, converged=converged, kkt_residual=kkt)


def solve_sgl(
    A: DesignMatrix,
    y,
    groups: GroupStructure,
    lambda1: float,
    lambda2: float,
    cfg: SolverConfig,
    trace_path: str | Path | None = None,
) -> SparseSolution:
    """Minimize ||A w - y||_2^2 + lambda1 ||w||_1 + lambda2 sum_k phi_k ||w_k||_2.

    The composite prox shrinks elementwise first, then per group. The
    convergence certificate is the prox fixed-point residual, measured in
    the same gradient units as the lasso KKT residual.
    """
    if lambda1 < 0 or lambda2 < 0:
        raise ArgumentError("lambda1 and lambda2 must be nonnegative")
    y, _ = _check_vector(A, y)
    groups.validate_for(A.p)

    def prox(v: np.ndarray, s: float) -> np.ndarray:
        u = soft_threshold(v, s * lambda1)
        for (start, stop), phi in zip(groups.ranges, groups.weights):
            u[start:stop] = group_soft_threshold(u[start:stop], s * lambda2 * phi)
        return u

    def penalty(v: np.ndarray) -> float:
        total = lambda1 * float(np.abs(v).sum())
        for (start, stop), phi in zip(groups.ranges, groups.weights):
            total += lambda2 * phi * float(np.linalg.norm(v[start:stop]))
        return total

    w, objective, iterations, stopped, step, trace = _fista(A.matrix, y, prox, penalty, cfg)
    if trace_path is not None:
        _write_trace(trace, trace_path)
    if step > 0.0:
        g = 2.0 * (A.matrix.T @ (A.matrix @ w - y))
        fixed_point = prox(w - step * g, step)
        residual = float(np.abs(w - fixed_point).max()) / step
    else:
        residual = 0.0
    converged = stopped and residual <= cfg.tol * _certificate_scale(A, y)
    return SparseSolution(w=w, objective=objective, iterations=iterations, converged=converged, kkt_residual=residual)
