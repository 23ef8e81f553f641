"""Known-true answers of every (head, relation) and (relation, tail) query, for filtered ranking."""

import logging
from collections import defaultdict
from typing import DefaultDict, Dict, FrozenSet, Set, Tuple

import numpy as np

from .types import TripleStore

logger = logging.getLogger(__name__)

_EMPTY: FrozenSet[int] = frozenset()


class FilterIndex:
    """Sets of true tails per (h, r) and true heads per (r, t) over all splits."""

    def __init__(self, tails: Dict[Tuple[int, int], FrozenSet[int]], heads: Dict[Tuple[int, int], FrozenSet[int]]):
        """Initialise the index from prepared maps (see `build_filter_index`).

        Args:
            tails (Dict[Tuple[int, int], FrozenSet[int]]): (h, r) to true tails
            heads (Dict[Tuple[int, int], FrozenSet[int]]): (r, t) to true heads
        """
        self._tails = tails
        self._heads = heads

    def tails(self, head: int, relation: int) -> FrozenSet[int]:
        """All t with (head, relation, t) in any split."""
        return self._tails.get((int(head), int(relation)), _EMPTY)

    def heads(self, relation: int, tail: int) -> FrozenSet[int]:
        """All h with (h, relation, tail) in any split."""
        return self._heads.get((int(relation), int(tail)), _EMPTY)

    def __len__(self) -> int:
        """Number of distinct true triples indexed."""
        return sum(len(answers) for answers in self._tails.values())


def build_filter_index(store: TripleStore) -> FilterIndex:
    """Index the true answers of every query over train, valid and test.

    Args:
        store (TripleStore): The dataset

    Returns:
        FilterIndex: The index
    """
    tails: DefaultDict[Tuple[int, int], Set[int]] = defaultdict(set)
    heads: DefaultDict[Tuple[int, int], Set[int]] = defaultdict(set)
    for h, r, t in np.asarray(store.all_triples(), dtype=np.int64).tolist():
        tails[(h, r)].add(t)
        heads[(r, t)].add(h)

    index = FilterIndex(
        {key: frozenset(value) for key, value in tails.items()},
        {key: frozenset(value) for key, value in heads.items()},
    )
    logger.debug(f"Filter index holds {len(index)} distinct triples")
    return index
