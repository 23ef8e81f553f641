"""Feature table statistics: standardisation and imputation of absent rows."""

import logging
from typing import Tuple

import numpy as np

from ..numeric.rng import Rng
from .types import FeatureTable

logger = logging.getLogger(__name__)

FALLBACK_MEAN = 0.0
FALLBACK_STD = 0.02


def observed_statistics(rows: np.ndarray, present: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean and std of the observed rows.

    Args:
        rows (np.ndarray): The (n, dim) feature matrix
        present (np.ndarray): Which rows are observed

    Returns:
        Tuple[np.ndarray, np.ndarray]: Mean and std, falling back to (0, 0.02) without observed rows
    """
    observed = np.asarray(rows, dtype=np.float64)[np.asarray(present, dtype=bool)]
    dim = rows.shape[1]
    if observed.shape[0] == 0:
        return np.full(dim, FALLBACK_MEAN), np.full(dim, FALLBACK_STD)
    return observed.mean(axis=0), observed.std(axis=0)


def impute_rows(rows: np.ndarray, present: np.ndarray, rng: Rng) -> np.ndarray:
    """Replace every absent row by a Gaussian draw matched to the observed rows' statistics.

    Args:
        rows (np.ndarray): The (n, dim) feature matrix
        present (np.ndarray): Which rows are observed
        rng (Rng): The imputation stream

    Returns:
        np.ndarray: A new 32-bit matrix, observed rows untouched
    """
    present = np.asarray(present, dtype=bool)
    out = np.array(rows, dtype=np.float32, copy=True)
    missing = np.flatnonzero(~present)
    if missing.size == 0:
        return out

    mean, std = observed_statistics(rows, present)
    draws = mean + std * rng.normal((missing.size, rows.shape[1]))
    out[missing] = draws.astype(np.float32)
    logger.debug(f"Imputed {missing.size} of {rows.shape[0]} feature rows")
    return out


def standardize(table: FeatureTable) -> Tuple[FeatureTable, Tuple[np.ndarray, np.ndarray]]:
    """z-score every dimension using the observed rows.

    Dimensions with zero spread keep std 1 so they are only centred.

    Args:
        table (FeatureTable): The table to standardise

    Returns:
        Tuple[FeatureTable, Tuple[np.ndarray, np.ndarray]]: The standardised table and the (mean, std) used
    """
    mean, std = observed_statistics(table.rows, table.present)
    if not table.present.any():
        mean, std = np.zeros_like(mean), np.ones_like(std)
    std = np.where(std > 0, std, 1.0)
    rows = (table.rows.astype(np.float64) - mean) / std
    return table.with_rows(rows, table.present), (mean, std)


def destandardize(table: FeatureTable, stats: Tuple[np.ndarray, np.ndarray]) -> FeatureTable:
    """Undo `standardize` with the statistics it returned."""
    mean, std = stats
    rows = table.rows.astype(np.float64) * std + mean
    return table.with_rows(rows, table.present)
