import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from theme_annotate.dataset import DatasetBundle, make_bundle, split_train_test
from theme_annotate.synth import generate_planted_dataset


@pytest.fixture(scope="session")
def planted():
    """Well-separated 8-theme dataset shared by pipeline-level tests."""
    return generate_planted_dataset(
        themes=8, images_per_theme=40, dim=64, noise=0.05,
        words_per_theme=3, common_words=5, common_per_theme=2, seed=11,
    )


@pytest.fixture(scope="session")
def planted_split(planted) -> tuple[DatasetBundle, DatasetBundle]:
    bundle = make_bundle(planted.features, planted.labels, "train")
    return split_train_test(bundle, 0.2, seed=3)
