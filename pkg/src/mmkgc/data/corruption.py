"""Complex-environment scenarios: noisy features, missing features and sparse links.

Every operation is a pure function of its inputs and seed, and the identity at ratio 0.
"""

import logging
import math

import numpy as np
from typeguard import typechecked

from ..numeric.rng import Rng
from .exceptions import DataValidationError
from .features import impute_rows
from .types import FeatureTable, TripleStore

logger = logging.getLogger(__name__)


def _check_ratio(ratio: float, allow_one: bool = True) -> None:
    upper_ok = ratio <= 1 if allow_one else ratio < 1
    if not (0 <= ratio and upper_ok):
        bound = "]" if allow_one else ")"
        raise DataValidationError(f"ratio must lie in [0, 1{bound}, got {ratio}")


def _select_entities(num_entities: int, ratio: float, rng: Rng) -> np.ndarray:
    count = int(math.floor(round(ratio * num_entities, 9)))
    return np.sort(rng.permutation(num_entities)[:count])


@typechecked
def corrupt_features_noise(table: FeatureTable, ratio: float, scale: float, seed: int) -> FeatureTable:
    """Add zero-mean Gaussian noise to the rows of a seeded subset of floor(ratio * |E|) entities.

    Args:
        table (FeatureTable): The features to corrupt
        ratio (float): Fraction of entities affected, in [0, 1]
        scale (float): Standard deviation of the noise
        seed (int): Seed of the entity selection and the noise

    Raises:
        DataValidationError: Raised if `ratio` or `scale` is out of range

    Returns:
        FeatureTable: The corrupted copy
    """
    _check_ratio(ratio)
    if scale < 0:
        raise DataValidationError(f"noise scale must be non-negative, got {scale}")

    rng = Rng(seed, ("noise", table.modality.value))
    selected = _select_entities(table.num_entities, ratio, rng)
    if selected.size == 0:
        return table

    rows = table.rows.astype(np.float64)
    rows[selected] += scale * rng.normal((selected.size, table.dim))
    logger.info(f"Added noise (scale {scale}) to {selected.size} {table.modality.value} feature rows")
    return table.with_rows(rows, table.present)


@typechecked
def corrupt_features_missing(table: FeatureTable, ratio: float, seed: int) -> FeatureTable:
    """Remove the features of a seeded subset of floor(ratio * |E|) entities and impute them.

    Args:
        table (FeatureTable): The features to corrupt
        ratio (float): Fraction of entities affected, in [0, 1]
        seed (int): Seed of the entity selection and the imputation

    Raises:
        DataValidationError: Raised if `ratio` is out of range

    Returns:
        FeatureTable: The corrupted copy, removed rows flagged as not present
    """
    _check_ratio(ratio)

    rng = Rng(seed, ("missing", table.modality.value))
    selected = _select_entities(table.num_entities, ratio, rng)
    if selected.size == 0:
        return table

    present = table.present.copy()
    present[selected] = False
    # only the removed rows are redrawn, earlier imputations stay as they were
    imputed = impute_rows(table.rows, present, rng.child("imputation"))
    rows = table.rows.copy()
    rows[selected] = imputed[selected]
    logger.info(f"Removed {selected.size} {table.modality.value} feature rows")
    return table.with_rows(rows, present)


@typechecked
def sparsify_triples(store: TripleStore, ratio: float, seed: int) -> TripleStore:
    """Keep a seeded subset of ceil((1 - ratio) * |train|) training triples, in their original order.

    Args:
        store (TripleStore): The dataset
        ratio (float): Fraction of training triples removed, in [0, 1)
        seed (int): Seed of the selection

    Raises:
        DataValidationError: Raised if `ratio` is out of range

    Returns:
        TripleStore: The sparsified copy; valid, test and vocabularies unchanged
    """
    _check_ratio(ratio, allow_one=False)

    train = store.split("train")
    keep = int(math.ceil(round((1.0 - ratio) * len(train), 9)))
    if keep == len(train):
        return store

    kept = np.sort(Rng(seed, ("sparse",)).permutation(len(train))[:keep])
    logger.info(f"Kept {keep} of {len(train)} training triples")
    return store.with_train(train[kept])
