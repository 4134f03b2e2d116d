"""Two-layer sparse-coding image annotator.

Themes discovered from training descriptions act as coarse labels; a
grouped-sparsity layer picks the themes relevant to a test image and a
per-word sparse reconstruction layer ranks the candidate words.
"""

from .baseline import (
    AnalyticPR,
    AnalyticProbabilities,
    RandomBaselineParams,
    SimulatedPR,
    analytic_pr,
    analytic_probabilities,
    simulate_random_classifier,
)
from .clustering import ThemeModel, ThemeStats, cluster_themes, prune_themes, theme_stats
from .config import RunConfig, load_config
from .dataset import (
    DatasetBundle,
    FeatureMatrix,
    LabelCorpus,
    load_features,
    load_labels,
    make_bundle,
    split_train_test,
    write_features,
    write_labels,
)
from .evaluation import (
    MetricsReport,
    WordCounts,
    confusion_counts,
    mean_metrics,
    precision_frequency_bins,
)
from .pipeline import (
    AnnotationResult,
    ThemeSelection,
    annotate,
    annotate_batch,
    score_word,
    select_themes,
)
from .solvers import (
    DesignMatrix,
    GroupStructure,
    SolverConfig,
    SparseSolution,
    group_soft_threshold,
    kkt_residual_lasso,
    lasso_objective,
    sgl_objective,
    soft_threshold,
    solve_lasso,
    solve_sgl,
)
from .synth import SynthDataset, generate_planted_dataset, write_synth_dataset
from .textproc import (
    TfidfMatrix,
    Vocabulary,
    build_vocabulary,
    cosine_similarity,
    tfidf_weights,
)

__version__ = "0.1.0"
