"""Multi-modal knowledge graph datasets: loading, validation, filtering, batching and corruption."""

from . import exceptions, types
from .batching import make_batches
from .corruption import corrupt_features_missing, corrupt_features_noise, sparsify_triples
from .features import destandardize, impute_rows, standardize
from .filtering import FilterIndex, build_filter_index
from .loading import is_binary_feature_file, load_features, load_triples, write_features, write_triples
from .synthetic import make_synthetic_dataset, write_dataset
from .types import FeatureTable, Modality, TripleBatch, TripleStore

__all__ = [
    "FeatureTable",
    "FilterIndex",
    "Modality",
    "TripleBatch",
    "TripleStore",
    "build_filter_index",
    "corrupt_features_missing",
    "corrupt_features_noise",
    "destandardize",
    "exceptions",
    "impute_rows",
    "is_binary_feature_file",
    "load_features",
    "load_triples",
    "make_batches",
    "make_synthetic_dataset",
    "sparsify_triples",
    "standardize",
    "types",
    "write_dataset",
    "write_features",
    "write_triples",
]
