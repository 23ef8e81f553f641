"""Filtered link prediction ranking and its metrics."""

import logging
import math
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from .._helper.config_loader import TiePolicy
from ..data.exceptions import DataValidationError
from ..data.filtering import FilterIndex, build_filter_index
from ..data.types import Modality, TripleStore
from ..model.model import ModelScorer, MultiModalKgcModel
from ..numeric.exceptions import ContractViolation, NumericError

logger = logging.getLogger(__name__)

ScorerLike = Union[MultiModalKgcModel, ModelScorer]


class Metrics(BaseModel):
    """Ranking quality over head and tail queries."""

    mrr: float = Field(..., ge=0, le=1, description="Mean reciprocal rank.")
    hit1: float = Field(..., ge=0, le=1, description="Fraction of ranks equal to 1.")
    hit3: float = Field(..., ge=0, le=1, description="Fraction of ranks at most 3.")
    hit10: float = Field(..., ge=0, le=1, description="Fraction of ranks at most 10.")
    queries: int = Field(..., ge=0, description="Number of ranked queries (two per triple).")

    @classmethod
    def from_ranks(cls, ranks: Iterable[int]) -> "Metrics":
        """Aggregate ranks.

        Raises:
            DataValidationError: Raised if there are no ranks
        """
        values = np.asarray(list(ranks), dtype=np.float64)
        if values.size == 0:
            raise DataValidationError("Cannot compute metrics without any ranked query")
        return cls(
            mrr=float(np.mean(1.0 / values)),
            hit1=float(np.mean(values <= 1)),
            hit3=float(np.mean(values <= 3)),
            hit10=float(np.mean(values <= 10)),
            queries=int(values.size),
        )

    def to_lines(self) -> List[str]:
        """The metrics as `key<TAB>value` lines."""
        return [f"{key}\t{value!r}" for key, value in self.model_dump().items()]


def write_metrics(path: Union[str, Path], metrics: Metrics) -> None:
    """Write metrics as `key<TAB>value` lines."""
    Path(path).write_text("\n".join(metrics.to_lines()) + "\n", encoding="utf-8")


def rank_from_scores(
    scores: np.ndarray, gold: int, known: Iterable[int] = (), tie_policy: TiePolicy = TiePolicy.STRICT
) -> int:
    """The filtered rank of the gold candidate.

    Args:
        scores (np.ndarray): Score of every candidate
        gold (int): The gold candidate
        known (Iterable[int], optional): Other true answers, removed before ranking. Defaults to ().
        tie_policy (TiePolicy, optional): `strict` counts only strictly greater scores; `mid` also
            places the gold in the middle of its ties, rounding up. Defaults to TiePolicy.STRICT.

    Raises:
        ContractViolation: Raised if the gold candidate is out of range
        NumericError: Raised if the gold score is not finite

    Returns:
        int: The rank, at least 1
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not 0 <= gold < len(scores):
        raise ContractViolation(f"Gold candidate {gold} is outside [0, {len(scores)})")
    keep = np.ones(len(scores), dtype=bool)
    keep[list(known)] = False
    keep[gold] = True
    remaining = scores[keep]
    target = scores[gold]
    if not np.isfinite(target):
        raise NumericError(f"The score of gold candidate {gold} is {target}")
    greater = int(np.sum(remaining > target))
    if tie_policy == TiePolicy.MID:
        ties = int(np.sum(remaining == target)) - 1
        return 1 + greater + math.ceil(ties / 2)
    return 1 + greater


def _scorer(model: ScorerLike) -> ModelScorer:
    return model if isinstance(model, ModelScorer) else model.scorer()


def rank_query(
    model: ScorerLike,
    triple: Tuple[int, int, int],
    side: str,
    filter_index: FilterIndex,
    tie_policy: TiePolicy = TiePolicy.STRICT,
    modality: Optional[Modality] = None,
) -> int:
    """The filtered rank of one head or tail query.

    Args:
        model (ScorerLike): The model or an evaluation scorer over it
        triple (Tuple[int, int, int]): The gold triple (h, r, t)
        side (str): `tail` ranks (h, r, ?), `head` ranks (?, r, t)
        filter_index (FilterIndex): The known true answers
        tie_policy (TiePolicy, optional): See `rank_from_scores`. Defaults to TiePolicy.STRICT.
        modality (Optional[Modality], optional): Rank with one modality's score instead of the ensemble.
            Defaults to None.

    Raises:
        ContractViolation: Raised for an unknown side or an out-of-range gold entity

    Returns:
        int: The rank
    """
    scorer = _scorer(model)
    head, relation, tail = (int(value) for value in triple)
    if side == "tail":
        return rank_from_scores(
            scorer.tail_scores(head, relation, modality), tail, filter_index.tails(head, relation), tie_policy
        )
    if side == "head":
        return rank_from_scores(
            scorer.head_scores(relation, tail, modality), head, filter_index.heads(relation, tail), tie_policy
        )
    raise ContractViolation(f"Unknown query side '{side}', expected 'head' or 'tail'")


def split_ranks(
    model: ScorerLike,
    triples: np.ndarray,
    filter_index: FilterIndex,
    tie_policy: TiePolicy = TiePolicy.STRICT,
    modality: Optional[Modality] = None,
) -> np.ndarray:
    """Head and tail ranks of every triple, shape (n, 2), queries batched per relation."""
    scorer = _scorer(model)
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    ranks = np.zeros((len(triples), 2), dtype=np.int64)
    for relation in np.unique(triples[:, 1]).tolist():
        rows = np.flatnonzero(triples[:, 1] == relation)
        heads, tails = triples[rows, 0], triples[rows, 2]
        head_scores = scorer.head_scores(relation, tails, modality)
        tail_scores = scorer.tail_scores(heads, relation, modality)
        for position, row in enumerate(rows.tolist()):
            h, t = int(heads[position]), int(tails[position])
            ranks[row, 0] = rank_from_scores(head_scores[position], h, filter_index.heads(relation, t), tie_policy)
            ranks[row, 1] = rank_from_scores(tail_scores[position], t, filter_index.tails(h, relation), tie_policy)
    return ranks


def evaluate_split(
    model: ScorerLike,
    store: TripleStore,
    split: str,
    filter_index: Optional[FilterIndex] = None,
    tie_policy: TiePolicy = TiePolicy.STRICT,
    modality: Optional[Modality] = None,
) -> Metrics:
    """Filtered MRR and Hit@1/3/10 over the head and tail queries of a split.

    Args:
        model (ScorerLike): The model or an evaluation scorer over it
        store (TripleStore): The dataset
        split (str): `train`, `valid` or `test`
        filter_index (Optional[FilterIndex], optional): Known true answers. Defaults to all splits of `store`.
        tie_policy (TiePolicy, optional): See `rank_from_scores`. Defaults to TiePolicy.STRICT.
        modality (Optional[Modality], optional): Rank with one modality's score. Defaults to the ensemble.

    Raises:
        DataValidationError: Raised if the split is empty

    Returns:
        Metrics: Averages over 2 * |split| queries
    """
    triples = store.split(split)
    if len(triples) == 0:
        raise DataValidationError(f"The {split} split is empty")
    filter_index = filter_index if filter_index is not None else build_filter_index(store)
    metrics = Metrics.from_ranks(split_ranks(model, triples, filter_index, tie_policy, modality).reshape(-1))
    logger.debug(f"{split}: MRR {metrics.mrr:.4f}, Hit@1 {metrics.hit1:.4f} over {metrics.queries} queries")
    return metrics
