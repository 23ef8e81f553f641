"""Synthetic multi-modal knowledge graphs with a learnable latent structure, and a dataset writer."""

import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from ..numeric.rng import Rng
from .exceptions import DataValidationError
from .loading import write_features, write_triples
from .types import FeatureTable, Modality, TripleStore

logger = logging.getLogger(__name__)

FeatureMap = Dict[Modality, FeatureTable]


def make_synthetic_dataset(
    num_entities: int = 50,
    num_relations: int = 5,
    num_train: int = 300,
    num_valid: int = 0,
    num_test: int = 0,
    feature_dim: int = 16,
    num_clusters: int = 5,
    feature_noise: float = 0.3,
    seed: int = 0,
) -> Tuple[TripleStore, FeatureMap]:
    """Generate a dataset whose entities fall into clusters that relations map onto each other.

    Relation r links entities of cluster c to entities of cluster (c + r + 1) mod C. Image and text
    features are noisy cluster centroids, so both modalities carry the signal that generalises to held
    out triples. Every entity occurs as the head of at least one training triple.

    Args:
        num_entities (int, optional): |E|. Defaults to 50.
        num_relations (int, optional): |R|. Defaults to 5.
        num_train (int, optional): Training triples, at least `num_entities`. Defaults to 300.
        num_valid (int, optional): Validation triples. Defaults to 0.
        num_test (int, optional): Test triples. Defaults to 0.
        feature_dim (int, optional): Dimension of both feature tables. Defaults to 16.
        num_clusters (int, optional): Number of latent clusters. Defaults to 5.
        feature_noise (float, optional): Std of the per-entity feature noise. Defaults to 0.3.
        seed (int, optional): Seed of the generator. Defaults to 0.

    Raises:
        DataValidationError: Raised if the requested triples cannot be drawn without duplicates

    Returns:
        Tuple[TripleStore, FeatureMap]: The dataset and its image and text tables
    """
    if num_train < num_entities:
        raise DataValidationError("num_train must be at least num_entities so every entity occurs")

    rng = Rng(seed, ("synthetic",))
    width = len(str(num_entities - 1))
    entity_names = [f"e{i:0{width}d}" for i in range(num_entities)]
    relation_names = [f"r{i:0{len(str(num_relations - 1))}d}" for i in range(num_relations)]
    clusters = np.arange(num_entities) % num_clusters
    members = [np.flatnonzero(clusters == c) for c in range(num_clusters)]

    capacity = sum(len(members[(clusters[h] + r + 1) % num_clusters]) for h in range(num_entities) for r in range(num_relations))
    total = num_train + num_valid + num_test
    if total > capacity:
        raise DataValidationError(f"Only {capacity} distinct triples exist, {total} requested")

    def draw(head: int) -> Tuple[int, int, int]:
        relation = int(rng.integers(0, num_relations))
        candidates = members[(clusters[head] + relation + 1) % num_clusters]
        return head, relation, int(candidates[rng.integers(0, len(candidates))])

    seen = set()
    ordered = []
    for head in range(num_entities):
        triple = draw(head)
        while triple in seen:
            triple = draw(head)
        seen.add(triple)
        ordered.append(triple)
    while len(ordered) < total:
        triple = draw(int(rng.integers(0, num_entities)))
        if triple not in seen:
            seen.add(triple)
            ordered.append(triple)

    covering, rest = ordered[:num_entities], ordered[num_entities:]
    rest = [rest[i] for i in rng.permutation(len(rest))]
    train = covering + rest[: num_train - num_entities]
    valid = rest[num_train - num_entities : num_train - num_entities + num_valid]
    test = rest[num_train - num_entities + num_valid :]

    def encode(triples: list) -> np.ndarray:
        return np.asarray(triples, dtype=np.int64).reshape(-1, 3)

    store = TripleStore(
        entities={name: i for i, name in enumerate(entity_names)},
        relations={name: i for i, name in enumerate(relation_names)},
        train=encode(train),
        valid=encode(valid),
        test=encode(test),
    )
    store.validate_invariants()

    features: FeatureMap = {}
    for modality in (Modality.IMAGE, Modality.TEXT):
        stream = rng.child(modality.value)
        centroids = stream.normal((num_clusters, feature_dim))
        rows = centroids[clusters] + feature_noise * stream.normal((num_entities, feature_dim))
        features[modality] = FeatureTable(
            modality=modality,
            dim=feature_dim,
            rows=rows.astype(np.float32),
            present=np.ones(num_entities, dtype=bool),
        )

    logger.debug(f"Generated a synthetic dataset with {num_entities} entities and {total} triples")
    return store, features


def write_dataset(
    directory: Union[str, Path],
    store: TripleStore,
    features: Optional[FeatureMap] = None,
    binary_features: bool = False,
) -> Dict[str, Path]:
    """Write a dataset in the documented file formats.

    Args:
        directory (Union[str, Path]): Destination directory (created if needed)
        store (TripleStore): The triples
        features (Optional[FeatureMap], optional): Feature tables to write. Defaults to None.
        binary_features (bool, optional): Write features in the `MMKF` format. Defaults to False.

    Returns:
        Dict[str, Path]: The written files, keyed like the matching config keys
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths: Dict[str, Path] = {}
    for split in ("train", "valid", "test"):
        path = directory / f"{split}.txt"
        write_triples(path, store.split(split), store)
        paths[f"{split}_path"] = path
    for modality, table in (features or {}).items():
        path = directory / (f"{modality.value}.mmkf" if binary_features else f"{modality.value}.txt")
        write_features(path, table, store, binary=binary_features)
        paths[f"{modality.value}_features"] = path
    return paths
