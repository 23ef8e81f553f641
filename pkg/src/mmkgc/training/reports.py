"""Interpretability reports: per-relation ranking quality per modality and relation-guided weights."""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

from .._helper.config_loader import TiePolicy
from ..data.filtering import FilterIndex, build_filter_index
from ..data.types import TripleStore
from ..exceptions import ConfigError
from ..model.model import MultiModalKgcModel
from .evaluation import Metrics, split_ranks

logger = logging.getLogger(__name__)

ENSEMBLE_COLUMN = "sum"


class RelationReportRow(BaseModel):
    """Ranking quality of one relation under every scoring column."""

    relation: str = Field(..., description="The relation name.")
    queries: int = Field(..., description="Head and tail queries of the relation.")
    columns: Dict[str, Metrics] = Field(..., description="Metrics per modality and for the ensemble sum.")


class GateReportRow(BaseModel):
    """Mean relation-guided weights of an entity sample under one relation."""

    relation: str = Field(..., description="The relation name.")
    fusion: Optional[Dict[str, float]] = Field(None, description="Mean modality fusion weight, if the joint modality exists.")
    gates: Dict[str, List[float]] = Field(..., description="Mean expert weights per base modality.")


def per_relation_report(
    model: MultiModalKgcModel,
    store: TripleStore,
    split: str,
    filter_index: Optional[FilterIndex] = None,
    tie_policy: TiePolicy = TiePolicy.STRICT,
) -> List[RelationReportRow]:
    """Filtered metrics per relation, ranking with each modality's score alone and with the ensemble sum.

    Relations absent from the split get no row.

    Args:
        model (MultiModalKgcModel): The model
        store (TripleStore): The dataset
        split (str): The split to rank
        filter_index (Optional[FilterIndex], optional): Known true answers. Defaults to all splits of `store`.
        tie_policy (TiePolicy, optional): Tie handling of ranks. Defaults to TiePolicy.STRICT.

    Returns:
        List[RelationReportRow]: One row per relation occurring in the split, in relation id order
    """
    triples = store.split(split)
    filter_index = filter_index if filter_index is not None else build_filter_index(store)
    scorer = model.scorer()
    columns = {m.value: split_ranks(scorer, triples, filter_index, tie_policy, m) for m in model.scoring_modalities}
    columns[ENSEMBLE_COLUMN] = split_ranks(scorer, triples, filter_index, tie_policy)

    names = store.relation_names
    rows = []
    for relation in np.unique(triples[:, 1]).tolist():
        selected = triples[:, 1] == relation
        rows.append(
            RelationReportRow(
                relation=names[relation],
                queries=2 * int(selected.sum()),
                columns={key: Metrics.from_ranks(ranks[selected].reshape(-1)) for key, ranks in columns.items()},
            )
        )
    return rows


def write_relation_report(path: Union[str, Path], rows: Sequence[RelationReportRow]) -> None:
    """Write a per-relation report as a tab-separated table with a header line."""
    keys = list(rows[0].columns) if rows else []
    header = ["relation", "queries"] + [f"{key}_{metric}" for key in keys for metric in ("mrr", "hit1", "hit3", "hit10")]
    lines = ["\t".join(header)]
    for row in rows:
        values = [row.relation, str(row.queries)]
        for key in keys:
            metrics = row.columns[key]
            values += [repr(metrics.mrr), repr(metrics.hit1), repr(metrics.hit3), repr(metrics.hit10)]
        lines.append("\t".join(values))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def resolve_relations(store: TripleStore, relations: Optional[Sequence[str]]) -> List[int]:
    """Relation ids of names, all relations when none are given.

    Raises:
        ConfigError: Raised listing every unknown relation name
    """
    if not relations:
        return list(range(store.num_relations))
    unknown = [name for name in relations if name not in store.relations]
    if unknown:
        raise ConfigError(f"Unknown relation(s): {', '.join(unknown)}")
    return [store.relations[name] for name in relations]


def gate_report(
    model: MultiModalKgcModel,
    store: TripleStore,
    relations: Optional[Sequence[str]] = None,
    entities: Optional[Sequence[int]] = None,
) -> List[GateReportRow]:
    """Mean modality fusion weights and mean expert weights per modality under each requested relation.

    Args:
        model (MultiModalKgcModel): The model, scored without gate noise
        store (TripleStore): The dataset providing the names
        relations (Optional[Sequence[str]], optional): Relation names. Defaults to every relation.
        entities (Optional[Sequence[int]], optional): The entity sample. Defaults to every entity.

    Raises:
        ConfigError: Raised for unknown relation names

    Returns:
        List[GateReportRow]: One row per relation; every weight vector sums to 1
    """
    ids = resolve_relations(store, relations)
    sample = np.arange(store.num_entities) if entities is None else np.asarray(entities, dtype=np.int64)
    scorer = model.scorer()
    names = store.relation_names
    rows = []
    for relation in ids:
        fusion = scorer.fusion_weights(relation)
        gates = scorer.gate_weights(relation)
        rows.append(
            GateReportRow(
                relation=names[relation],
                fusion=None
                if fusion is None
                else {m.value: float(w) for m, w in zip(model.modalities, fusion[sample].mean(axis=0))},
                gates={m.value: [float(w) for w in gates[m][sample].mean(axis=0)] for m in model.modalities},
            )
        )
    return rows


def write_gate_report(path: Union[str, Path], rows: Sequence[GateReportRow]) -> None:
    """Write a gate report as `relation<TAB>kind<TAB>modality<TAB>weights...` lines.

    `kind` is `fusion` (one line per relation, the modality column holds the modality names joined by
    commas) or `gate` (one line per relation and modality, one weight per expert).
    """
    lines = []
    for row in rows:
        if row.fusion is not None:
            lines.append("\t".join([row.relation, "fusion", ",".join(row.fusion)] + [repr(w) for w in row.fusion.values()]))
        for modality, weights in row.gates.items():
            lines.append("\t".join([row.relation, "gate", modality] + [repr(w) for w in weights]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
