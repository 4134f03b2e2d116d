"""Acceptance suite: one test per shipping criterion, each printing a verdict.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the PASS lines.
Every tolerance is fixed here; nothing is left for later calibration.
"""

import time
from pathlib import Path

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from theme_annotate.baseline import (
    RandomBaselineParams,
    analytic_pr,
    analytic_probabilities,
    simulate_random_classifier,
)
from theme_annotate.cli import main
from theme_annotate.clustering import cluster_themes, prune_themes
from theme_annotate.dataset import make_bundle, split_train_test, subset_bundle
from theme_annotate.evaluation import (
    WordCounts,
    confusion_counts,
    mean_metrics,
    precision_frequency_bins,
)
from theme_annotate.pipeline import annotate_batch
from theme_annotate.solvers import (
    DesignMatrix,
    GroupStructure,
    SolverConfig,
    group_soft_threshold,
    kkt_residual_lasso,
    soft_threshold,
    solve_lasso,
    solve_sgl,
)
from theme_annotate.synth import generate_planted_dataset
from theme_annotate.textproc import build_vocabulary, tfidf_weights

from oracles import cd_lasso

TIGHT = SolverConfig(tol=1e-12, max_iter=20000)


def report(number: int, message: str) -> None:
    print(f"ACCEPTANCE {number} PASS: {message}")


@pytest.fixture(scope="module")
def planted_run():
    """Planted dataset of criterion 5, clustered and annotated once."""
    data = generate_planted_dataset(
        themes=8, images_per_theme=40, dim=64, noise=0.05,
        words_per_theme=3, common_words=5, common_per_theme=2, seed=11,
    )
    bundle = make_bundle(data.features, data.labels, "train")
    train, test = split_train_test(bundle, 0.2, seed=3)
    vocab = build_vocabulary(train.labels, min_images=1)
    tfidf = tfidf_weights(train.labels, vocab)
    model = prune_themes(cluster_themes(tfidf, train.ids, cutoff=0.3), 0.9)
    results = annotate_batch(test, train, model, vocab, SolverConfig(), b=5)
    predictions = {r.image_id: set(r.annotations) for r in results}
    truth = {img: {w for w, _ in test.labels.words(img)} for img in test.ids}
    train_freq = train.labels.document_frequency()
    table = confusion_counts(predictions, truth, vocab, train_freq)
    return data, train, model, mean_metrics(table), table


def test_criterion_1_solver_matches_coordinate_descent_oracle():
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_obj = worst_kkt = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 11))
        p = int(rng.integers(1, 13))
        A = DesignMatrix(rng.standard_normal((n, p)), tuple(f"c{i}" for i in range(p)))
        y = rng.standard_normal(n)
        rho = float(rng.uniform(0.001, 1.5))
        sol = solve_lasso(A, y, rho, TIGHT)
        oracle = cd_lasso(A.matrix, y, rho)
        oracle_obj = float(np.sum((A.matrix @ oracle - y) ** 2) + rho * np.abs(oracle).sum())
        rel = abs(sol.objective - oracle_obj) / max(1.0, oracle_obj)
        scale = 1.0 + float(np.abs(2.0 * A.matrix.T @ y).max())
        worst_obj = max(worst_obj, rel)
        worst_kkt = max(worst_kkt, sol.kkt_residual / scale)
        assert rel <= 1e-6
        assert sol.kkt_residual <= 1e-5 * scale
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    report(1, f"200 lasso instances: max relative objective gap {worst_obj:.2e}, "
              f"max scaled KKT {worst_kkt:.2e}, {elapsed:.1f}s")


def test_criterion_2_sgl_reduction_and_group_sparsity():
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 11))
        p = int(rng.integers(2, 13))
        A = DesignMatrix(rng.standard_normal((n, p)), tuple(f"c{i}" for i in range(p)))
        y = rng.standard_normal(n)
        rho = float(rng.uniform(0.01, 1.0))
        lasso = solve_lasso(A, y, rho, TIGHT)
        sgl = solve_sgl(A, y, GroupStructure.from_sizes([p]), rho, 0.0, TIGHT)
        rel = abs(sgl.objective - lasso.objective) / max(1.0, lasso.objective)
        worst = max(worst, rel)
        assert rel <= 1e-8

    zero_blocks = live_blocks = 0
    for _ in range(100):
        a = rng.standard_normal((4, 3))
        b = rng.standard_normal((4, 3))
        matrix = np.block([[a, np.zeros((4, 3))], [np.zeros((4, 3)), b]])
        A = DesignMatrix(matrix, tuple(f"c{i}" for i in range(6)))
        y = np.concatenate([a @ (2.0 * rng.standard_normal(3)), 0.05 * rng.standard_normal(4)])
        sol = solve_sgl(A, y, GroupStructure.from_sizes([3, 3]), 0.01, 1.5, TIGHT)
        if float(np.linalg.norm(sol.w[3:])) < 1e-8:
            zero_blocks += 1
        if float(np.linalg.norm(sol.w[:3])) > 1e-3:
            live_blocks += 1
    assert zero_blocks >= 95
    assert live_blocks >= 80  # shrinkage must not have trivially zeroed everything
    report(2, f"reduction max gap {worst:.2e}; irrelevant block exactly zero in "
              f"{zero_blocks}/100 (relevant block live in {live_blocks})")


def test_criterion_3_prox_operators_match_grid_search():
    rng = np.random.default_rng(303)
    grid = np.arange(-10.0, 10.0, 1e-3)
    worst = 0.0
    for _ in range(500):
        x = float(rng.uniform(-8, 8))
        t = float(rng.uniform(0, 5))
        best = grid[int(np.argmin(0.5 * (grid - x) ** 2 + t * np.abs(grid)))]
        worst = max(worst, abs(float(soft_threshold(x, t)) - best))
    for _ in range(500):
        v = rng.standard_normal(3) * 4
        t = float(rng.uniform(0, 5))
        norm = float(np.linalg.norm(v))
        alphas = np.arange(0.0, norm + 1.0, 1e-3)
        best_alpha = alphas[int(np.argmin(0.5 * (alphas - norm) ** 2 + t * alphas))]
        got = float(np.linalg.norm(group_soft_threshold(v, t)))
        worst = max(worst, abs(got - best_alpha))
    assert worst <= 1e-3
    report(3, f"1000 prox points vs grid argmin, max deviation {worst:.2e}")


def test_criterion_4_random_baseline_simulation_agrees():
    started = time.perf_counter()
    triples = [
        (291, 5, 0.1), (300, 10, 0.5), (50, 5, 0.2), (100, 3, 0.35), (250, 7, 0.05),
        (30, 2, 0.6), (120, 9, 0.8), (200, 4, 0.15), (75, 6, 0.45), (10, 1, 0.3),
    ]
    hits = 0
    for i, (M, z, X) in enumerate(triples):
        params = RandomBaselineParams(M=M, z=z, X=X)
        probs = analytic_probabilities(params)
        assert abs(probs.p_tp + probs.p_fp - z / M) <= 1e-12
        pr = analytic_pr(params)
        assert abs(pr.precision - X) <= 1e-12
        sim = simulate_random_classifier(params, images=10000, trials=30, seed=400 + i)
        ok_p = abs(sim.precision - pr.precision) <= 3 * max(sim.precision_se, 1e-12)
        ok_r = abs(sim.recall - pr.recall) <= 3 * max(sim.recall_se, 1e-12)
        hits += ok_p and ok_r
    elapsed = time.perf_counter() - started
    assert hits >= 9
    assert elapsed < 30.0
    report(4, f"{hits}/10 parameter triples within 3 standard errors, {elapsed:.1f}s")


def test_criterion_5_planted_theme_recovery(planted_run):
    started = time.perf_counter()
    data, train, model, metrics, _ = planted_run
    labels_true = [data.assignments[img] for theme in model.themes for img in theme]
    labels_found = [k for k, theme in enumerate(model.themes) for _ in theme]
    ari = adjusted_rand_score(labels_true, labels_found)
    assert ari == 1.0
    assert set(i for t in model.themes for i in t) | set(model.dropped) == set(train.ids)
    assert metrics.mean_f >= 0.90
    elapsed = time.perf_counter() - started
    assert elapsed < 120.0
    report(5, f"adjusted Rand {ari:.1f}, held-out mean F {metrics.mean_f:.3f}")


def test_criterion_6_balanced_response_and_stable_precision(planted_run):
    _, _, _, metrics, table = planted_run
    assert abs(metrics.mean_precision - metrics.mean_recall) <= 0.10
    bins = precision_frequency_bins(table, bin_size=10)
    assert len(bins) >= 2
    lowest = bins[0][1]
    highest = bins[-1][1]
    assert lowest >= 0.5 * highest
    report(6, f"|P - R| = {abs(metrics.mean_precision - metrics.mean_recall):.3f}; "
              f"low-frequency bin precision {lowest:.3f} vs high {highest:.3f}")


def test_criterion_7_metric_arithmetic():
    rng = np.random.default_rng(707)
    for _ in range(50):
        table = {
            f"w{k}": WordCounts(
                tp=int(rng.integers(0, 20)), fp=int(rng.integers(0, 20)), fn=int(rng.integers(0, 20))
            )
            for k in range(int(rng.integers(1, 30)))
        }
        got = mean_metrics(table)
        p, r = got.mean_precision, got.mean_recall
        expected = 2 * p * r / (p + r) if p + r > 0 else 0.0
        assert abs(got.mean_f - expected) <= 1e-12

    engineered = {
        "even": WordCounts(tp=1, fp=1, fn=1),
        "odd": WordCounts(tp=3567, fp=7308, fn=6683),
    }
    summary = mean_metrics(engineered)
    rounded = [round(100 * v) for v in (summary.mean_precision, summary.mean_recall, summary.mean_f)]
    assert rounded == [41, 42, 42]
    report(7, f"F identity holds to 1e-12; engineered means round to "
              f"{rounded[0]}/{rounded[1]}/{rounded[2]}")


def test_criterion_8_cli_reruns_are_byte_identical(tmp_path):
    assert main([
        "synth", "--output-dir", str(tmp_path / "data"),
        "--themes", "4", "--images-per-theme", "12", "--dim", "32", "--seed", "5",
    ]) == 0
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"features = {tmp_path / 'data' / 'features.tsv'}\n"
        f"labels = {tmp_path / 'data' / 'labels.tsv'}\n"
        f"output_dir = {tmp_path / 'out'}\n"
        "cutoff = 0.3\ntest_fraction = 0.2\nseed = 3\n",
        encoding="utf-8",
    )

    def run(jobs: str) -> dict[str, bytes]:
        for command in ("prepare", "cluster"):
            assert main([command, "--config", str(cfg)]) == 0
        assert main(["annotate", "--config", str(cfg), "--jobs", jobs]) == 0
        assert main(["evaluate", "--config", str(cfg)]) == 0
        out = tmp_path / "out"
        return {p.name: p.read_bytes() for p in sorted(out.iterdir())}

    first = run("1")
    second = run("8")
    assert first == second
    assert {"annotations.tsv", "themes.tsv", "vocab.txt", "report.txt",
            "metrics.tsv", "bins.tsv"} <= set(first)
    report(8, f"{len(first)} output files byte-identical across reruns and --jobs 1 vs 8")
