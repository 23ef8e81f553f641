"""Pytest test configuration."""
from typing import Dict, Tuple

import pytest

from mmkgc.data import FeatureTable, Modality, TripleStore, make_synthetic_dataset


@pytest.fixture(scope="function")
def ten_triples() -> Tuple[TripleStore, Dict[Modality, FeatureTable]]:
    """Pytest fixture for a dataset with exactly 10 training triples."""
    return make_synthetic_dataset(
        num_entities=5, num_relations=2, num_train=10, num_valid=2, num_test=3, feature_dim=3, num_clusters=1, seed=3
    )
