"""Seeded epoch batching of the train split."""

from typing import List

from ..numeric.exceptions import ContractViolation
from ..numeric.rng import Rng
from .types import TripleBatch, TripleStore


def make_batches(store: TripleStore, batch_size: int, epoch_seed: int) -> List[TripleBatch]:
    """Partition a seeded permutation of the train split into consecutive batches.

    Args:
        store (TripleStore): The dataset
        batch_size (int): Triples per batch; the last batch may be smaller
        epoch_seed (int): Seed of this epoch's permutation

    Raises:
        ContractViolation: Raised if `batch_size` is below 1

    Returns:
        List[TripleBatch]: The batches of one epoch
    """
    if batch_size < 1:
        raise ContractViolation(f"batch_size must be at least 1, got {batch_size}")

    train = store.split("train")
    order = Rng(epoch_seed, ("batching",)).permutation(len(train))
    shuffled = train[order]
    return [TripleBatch.from_triples(shuffled[start : start + batch_size]) for start in range(0, len(shuffled), batch_size)]
