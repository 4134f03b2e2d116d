"""Batch command-line front end.

Subcommands: prepare, cluster, annotate, evaluate, baseline, synth. Every
command is a pure function of its config and input files; reruns are
byte-identical. Exit codes: 0 success, 2 usage/config error, 3 data error.
Set THEME_ANNOTATE_LOG to error, info, or debug to control stderr logging.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import baseline as bl
from . import clustering, dataset, evaluation, pipeline, plots, synth, textproc
from .config import RunConfig, load_config
from .errors import AnnotatorError, ArgumentError, ConfigError, InputIOError

logger = logging.getLogger("theme_annotate.cli")

_CONFIG_FLAGS = [
    ("--features", "features", str),
    ("--labels", "labels", str),
    ("--output-dir", "output_dir", str),
    ("--min-images", "min_images", int),
    ("--max-size", "max_size", str),
    ("--cutoff", "cutoff", float),
    ("--linkage", "linkage", str),
    ("--coverage", "coverage", float),
    ("--lambda1", "lambda1", float),
    ("--lambda2", "lambda2", float),
    ("--rho", "rho", float),
    ("--tol", "tol", float),
    ("--max-iter", "max_iter", int),
    ("--step-rule", "step_rule", str),
    ("--b", "b", int),
    ("--epsilon-group", "epsilon_group", float),
    ("--test-fraction", "test_fraction", float),
    ("--seed", "seed", int),
]


def _add_config_arguments(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", default=None, help="flat key = value config file")
    for flag, dest, kind in _CONFIG_FLAGS:
        sub.add_argument(flag, dest=dest, type=kind, default=None)
    sub.add_argument("--normalize", dest="normalize", action=argparse.BooleanOptionalAction, default=None)
    sub.add_argument(
        "--all-theme-members", dest="all_theme_members",
        action=argparse.BooleanOptionalAction, default=None,
    )


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    keys = [dest for _, dest, _ in _CONFIG_FLAGS] + ["normalize", "all_theme_members"]
    overrides = {k: getattr(args, k) for k in keys}
    return load_config(args.config, overrides)


def _require(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if not getattr(cfg, name):
            raise ConfigError(f"{name} path is required (set in config or via --{name})")


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_ids(ids, path: Path) -> None:
    path.write_text("".join(f"{i}\n" for i in ids), encoding="utf-8")


def _read_ids(path: Path) -> tuple[str, ...]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc}") from exc
    return tuple(line.strip() for line in text.splitlines() if line.strip())


def _load_split(cfg: RunConfig, out: Path) -> tuple[dataset.DatasetBundle, dataset.DatasetBundle]:
    """Rebuild the train/test bundles from the split manifests."""
    features = dataset.load_features(cfg.features)
    labels = dataset.load_labels(cfg.labels)
    full = dataset.make_bundle(features, labels, "test")  # tolerant: test ids may be unlabeled
    train_ids = _read_ids(out / "train_ids.txt")
    test_ids = _read_ids(out / "test_ids.txt")
    train = dataset.subset_bundle(full, train_ids, "train")
    test = dataset.subset_bundle(full, test_ids, "test")
    return train, test


def cmd_prepare(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    _require(cfg, "features", "labels")
    out = _out_dir(cfg)
    features = dataset.load_features(cfg.features)
    labels = dataset.load_labels(cfg.labels)
    bundle = dataset.make_bundle(features, labels, "train")
    train, test = dataset.split_train_test(bundle, cfg.test_fraction, cfg.seed)
    vocab = textproc.build_vocabulary(train.labels, cfg.min_images, cfg.max_size)
    textproc.write_vocabulary(vocab, out / "vocab.txt")
    _write_ids(train.ids, out / "train_ids.txt")
    _write_ids(test.ids, out / "test_ids.txt")
    (out / "run_manifest.txt").write_text(cfg.manifest_text(), encoding="utf-8")
    logger.info(
        "prepared %d train / %d test images, vocabulary %d words",
        train.n_images, test.n_images, len(vocab),
    )
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    _require(cfg, "features", "labels")
    out = _out_dir(cfg)
    train, _ = _load_split(cfg, out)
    vocab = textproc.read_vocabulary(out / "vocab.txt")
    tfidf = textproc.tfidf_weights(train.labels, vocab)
    model = clustering.cluster_themes(tfidf, train.ids, cfg.cutoff, cfg.linkage)
    model = clustering.prune_themes(model, cfg.coverage)
    stats = clustering.theme_stats(model)
    clustering.write_themes(model, out / "themes.tsv")
    _write_stats(stats, out / "theme_stats.txt")
    plots.save_theme_size_figure(stats, out / "theme_sizes.png")
    (out / "run_manifest.txt").write_text(cfg.manifest_text(), encoding="utf-8")
    logger.info(
        "clustered into %d themes, retained fraction %.4f",
        stats.n_themes, stats.retained_fraction,
    )
    return 0


def _write_stats(stats: clustering.ThemeStats, path: Path) -> None:
    lines = [
        f"themes = {stats.n_themes}",
        f"retained_images = {stats.n_retained}",
        f"dropped_images = {stats.n_dropped}",
        f"retained_fraction = {stats.retained_fraction:.6f}",
        "size_histogram = "
        + " ".join(f"{size}:{count}" for size, count in stats.size_histogram.items()),
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_annotate(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    _require(cfg, "features", "labels")
    out = _out_dir(cfg)
    train, test = _load_split(cfg, out)
    vocab = textproc.read_vocabulary(out / "vocab.txt")
    themes = clustering.read_themes(out / "themes.tsv")
    results = pipeline.annotate_batch(
        test, train, themes, vocab, cfg.solver_config(),
        b=cfg.b, epsilon_group=cfg.epsilon_group,
        all_theme_members=cfg.all_theme_members, jobs=args.jobs,
    )
    pipeline.write_annotations(results, out / "annotations.tsv")
    (out / "run_manifest.txt").write_text(cfg.manifest_text(), encoding="utf-8")
    logger.info("annotated %d images", len(results))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    _require(cfg, "labels")
    out = _out_dir(cfg)
    vocab = textproc.read_vocabulary(out / "vocab.txt")
    predictions = pipeline.read_annotations(out / "annotations.tsv")
    labels = dataset.load_labels(cfg.labels)
    truth = {
        img: {w for w, _ in labels.entries.get(img, ())} for img in predictions
    }
    train_ids = _read_ids(out / "train_ids.txt")
    train_freq = dataset.LabelCorpus(
        entries={img: labels.entries[img] for img in train_ids if img in labels.entries}
    ).document_frequency()
    table = evaluation.confusion_counts(predictions, truth, vocab, train_freq)
    report = evaluation.mean_metrics(table)
    bins = evaluation.precision_frequency_bins(table)
    report = replace(report, bins=tuple(bins))
    _write_report(report, len(predictions), out / "report.txt")
    _write_metrics(table, out / "metrics.tsv")
    _write_bins(bins, out / "bins.tsv")
    plots.save_precision_frequency_figure(bins, out / "precision_vs_frequency.png")
    (out / "run_manifest.txt").write_text(cfg.manifest_text(), encoding="utf-8")
    logger.info(
        "P=%.4f R=%.4f F=%.4f N+=%d",
        report.mean_precision, report.mean_recall, report.mean_f, report.n_plus,
    )
    return 0


def _write_report(report: evaluation.MetricsReport, n_images: int, path: Path) -> None:
    lines = [
        f"images evaluated = {n_images}",
        f"vocabulary words = {len(report.per_word)}",
        f"mean precision per word = {report.mean_precision:.6f}",
        f"mean recall per word = {report.mean_recall:.6f}",
        f"mean F-score = {report.mean_f:.6f}",
        f"words with positive recall (N+) = {report.n_plus}",
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_metrics(table: dict[str, evaluation.WordCounts], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write("word\ttp\tfp\tfn\tprecision\trecall\tfrequency\n")
        for word, c in table.items():
            handle.write(
                f"{word}\t{c.tp}\t{c.fp}\t{c.fn}\t{c.precision:.6f}\t{c.recall:.6f}\t{c.train_frequency}\n"
            )


def _write_bins(bins, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write("mean_frequency\tmean_precision\n")
        for freq, prec in bins:
            handle.write(f"{freq:.6f}\t{prec:.6f}\n")


def cmd_baseline(args: argparse.Namespace) -> int:
    params = bl.RandomBaselineParams(M=args.M, z=args.z, X=args.X)
    analytic = bl.analytic_pr(params)
    simulated = bl.simulate_random_classifier(params, args.images, args.trials, args.seed)
    analytic_recall = "undefined" if analytic.recall is None else f"{analytic.recall:.6f}"
    print(f"random-classifier baseline: M={params.M} z={params.z} X={params.X}")
    print(f"images={args.images} trials={args.trials} seed={args.seed}")
    print("metric     analytic    empirical   stderr")
    print(f"precision  {analytic.precision:.6f}    {simulated.precision:.6f}    {simulated.precision_se:.6f}")
    print(f"recall     {analytic_recall}    {simulated.recall:.6f}    {simulated.recall_se:.6f}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    data = synth.generate_planted_dataset(
        themes=args.themes,
        images_per_theme=args.images_per_theme,
        dim=args.dim,
        noise=args.noise,
        words_per_theme=args.words_per_theme,
        common_words=args.common_words,
        common_per_theme=args.common_per_theme,
        seed=args.seed,
    )
    synth.write_synth_dataset(data, args.output_dir)
    logger.info(
        "wrote %d images across %d planted themes to %s",
        data.features.n_images, args.themes, args.output_dir,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="theme-annotate", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("prepare", help="build vocabulary and train/test split manifests")
    _add_config_arguments(p)
    p.set_defaults(func=cmd_prepare)

    p = subs.add_parser("cluster", help="group training images into themes and prune")
    _add_config_arguments(p)
    p.set_defaults(func=cmd_cluster)

    p = subs.add_parser("annotate", help="run the two-layer annotator over the test split")
    _add_config_arguments(p)
    p.add_argument("--jobs", type=int, default=1, help="worker threads; output is identical for any value")
    p.set_defaults(func=cmd_annotate)

    p = subs.add_parser("evaluate", help="score annotations against ground truth")
    _add_config_arguments(p)
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("baseline", help="analytic vs simulated random-classifier precision/recall")
    p.add_argument("-M", type=int, required=True, help="vocabulary size")
    p.add_argument("-z", type=int, required=True, help="labels drawn per image")
    p.add_argument("-X", type=float, required=True, help="fraction of images truly carrying the word")
    p.add_argument("--images", type=int, default=10000)
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_baseline)

    p = subs.add_parser("synth", help="generate a planted-theme synthetic dataset")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--themes", type=int, default=8)
    p.add_argument("--images-per-theme", type=int, default=40)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--words-per-theme", type=int, default=3)
    p.add_argument("--common-words", type=int, default=5)
    p.add_argument("--common-per-theme", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("THEME_ANNOTATE_LOG", "info").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=levels.get(level_name, logging.INFO),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ArgumentError, ConfigError, InputIOError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AnnotatorError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
