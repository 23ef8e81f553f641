"""Types for multi-modal knowledge graph datasets."""

from enum import Enum
from typing import Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .exceptions import DataValidationError, DuplicateTripleError

SPLITS = ("train", "valid", "test")


class Modality(str, Enum):
    """A source of entity information. `JOINT` is the fused modality built from the others."""

    STRUCTURE = "structure"
    IMAGE = "image"
    TEXT = "text"
    JOINT = "joint"

    @staticmethod
    def order(modality: "Modality") -> int:
        """Canonical position of a modality, used to order columns and parameter groups."""
        return list(Modality).index(Modality(modality))

    @property
    def has_features(self) -> bool:
        """Whether the raw input of this modality is a precomputed feature table."""
        return self in (Modality.IMAGE, Modality.TEXT)


class TripleStore(BaseModel):
    """Integer-encoded triples of every split plus the entity and relation vocabularies."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entities: Dict[str, int] = Field(..., description="Entity name to id, ids in lexicographic name order.")
    relations: Dict[str, int] = Field(..., description="Relation name to id, ids in lexicographic name order.")
    train: np.ndarray = Field(..., description="Training triples, shape (n, 3), columns head/relation/tail.")
    valid: np.ndarray = Field(..., description="Validation triples, shape (n, 3).")
    test: np.ndarray = Field(..., description="Test triples, shape (n, 3).")

    @property
    def num_entities(self) -> int:
        """|E|."""
        return len(self.entities)

    @property
    def num_relations(self) -> int:
        """|R|."""
        return len(self.relations)

    @property
    def entity_names(self) -> List[str]:
        """Entity names indexed by id."""
        return sorted(self.entities, key=self.entities.__getitem__)

    @property
    def relation_names(self) -> List[str]:
        """Relation names indexed by id."""
        return sorted(self.relations, key=self.relations.__getitem__)

    def split(self, name: str) -> np.ndarray:
        """The triples of a split.

        Args:
            name (str): One of `train`, `valid` or `test`

        Raises:
            DataValidationError: Raised for an unknown split name

        Returns:
            np.ndarray: The (n, 3) triples
        """
        if name not in SPLITS:
            raise DataValidationError(f"Unknown split '{name}', expected one of {', '.join(SPLITS)}")
        return np.asarray(getattr(self, name))

    def all_triples(self) -> np.ndarray:
        """Every triple of every split, stacked in split order."""
        return np.concatenate([self.split(name) for name in SPLITS], axis=0)

    def with_train(self, train: np.ndarray) -> "TripleStore":
        """A copy of the store whose train split is replaced."""
        return self.model_copy(update={"train": np.asarray(train, dtype=np.int64).reshape(-1, 3)})

    def validate_invariants(self) -> None:
        """Check id ranges, id order and duplicate-freedom of every split.

        Raises:
            DataValidationError: Raised if an id is out of range or the vocabularies are not lexicographic
            DuplicateTripleError: Raised if a split contains the same triple twice
        """
        for vocabulary, label in ((self.entities, "entity"), (self.relations, "relation")):
            if sorted(vocabulary.values()) != list(range(len(vocabulary))):
                raise DataValidationError(f"{label} ids must be exactly 0..{len(vocabulary) - 1}")
            if [vocabulary[name] for name in sorted(vocabulary)] != list(range(len(vocabulary))):
                raise DataValidationError(f"{label} ids must follow the lexicographic order of names")

        for name in SPLITS:
            triples = self.split(name)
            if triples.size == 0:
                continue
            if triples.ndim != 2 or triples.shape[1] != 3:
                raise DataValidationError(f"The {name} split must have shape (n, 3), got {triples.shape}")
            entity_ids = triples[:, [0, 2]]
            if entity_ids.min() < 0 or entity_ids.max() >= self.num_entities:
                raise DataValidationError(f"The {name} split holds an entity id outside [0, {self.num_entities})")
            if triples[:, 1].min() < 0 or triples[:, 1].max() >= self.num_relations:
                raise DataValidationError(f"The {name} split holds a relation id outside [0, {self.num_relations})")
            unique = np.unique(triples, axis=0)
            if len(unique) != len(triples):
                raise DuplicateTripleError(f"The {name} split contains {len(triples) - len(unique)} duplicate triple(s)")

    def equals(self, other: "TripleStore") -> bool:
        """Whether two stores hold the same vocabularies and triples."""
        return (
            list(self.entities.items()) == list(other.entities.items())
            and list(self.relations.items()) == list(other.relations.items())
            and all(np.array_equal(self.split(name), other.split(name)) for name in SPLITS)
        )


class FeatureTable(BaseModel):
    """Precomputed raw features of one modality, one row per entity id."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    modality: Modality = Field(..., description="The modality the features describe (image or text).")
    dim: int = Field(..., ge=1, description="Length of every feature row.")
    rows: np.ndarray = Field(..., description="Feature matrix, shape (|E|, dim), 32-bit reals.")
    present: np.ndarray = Field(..., description="Per entity flag, false where the row was imputed.")

    @property
    def num_entities(self) -> int:
        """Number of rows."""
        return int(self.rows.shape[0])

    def with_rows(self, rows: np.ndarray, present: np.ndarray) -> "FeatureTable":
        """A copy holding new rows and presence flags."""
        return self.model_copy(
            update={"rows": np.asarray(rows, dtype=np.float32), "present": np.asarray(present, dtype=bool)}
        )

    def validate_invariants(self) -> None:
        """Check shape, finiteness and modality of the table.

        Raises:
            DataValidationError: Raised if any invariant is broken
        """
        if not self.modality.has_features:
            raise DataValidationError(f"The {self.modality.value} modality has no feature table")
        if self.rows.ndim != 2 or self.rows.shape[1] != self.dim:
            raise DataValidationError(f"Feature rows must have shape (n, {self.dim}), got {self.rows.shape}")
        if self.present.shape != (self.rows.shape[0],):
            raise DataValidationError("The presence flags must hold one entry per row")
        if not np.all(np.isfinite(self.rows)):
            raise DataValidationError(f"The {self.modality.value} feature table contains non-finite values")

    def equals(self, other: "FeatureTable") -> bool:
        """Whether two tables hold identical rows and flags."""
        return (
            self.modality == other.modality
            and self.dim == other.dim
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.present, other.present)
        )


class TripleBatch(BaseModel):
    """A batch of training triples and the distinct entities occurring in it."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    triples: np.ndarray = Field(..., description="Triples of the batch, shape (b, 3).")
    entities: np.ndarray = Field(..., description="Sorted distinct heads and tails of the batch.")

    @classmethod
    def from_triples(cls, triples: np.ndarray) -> "TripleBatch":
        """Build a batch, deriving its entity set.

        Args:
            triples (np.ndarray): The (b, 3) triples

        Returns:
            TripleBatch: The batch
        """
        triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        return cls(triples=triples, entities=np.unique(triples[:, [0, 2]]))

    def __len__(self) -> int:
        """Number of triples in the batch."""
        return int(self.triples.shape[0])
