"""Reading and writing triples and feature files."""

import logging
import struct
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from typeguard import typechecked

from ..numeric.rng import Rng
from .exceptions import DataFileError, DataValidationError, FeatureFormatError, TripleParseError, UnknownEntityError
from .features import impute_rows, standardize
from .types import FeatureTable, Modality, TripleStore

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FEATURE_MAGIC = b"MMKF"
_HEADER = struct.Struct("<4sII")
_LENGTH = struct.Struct("<I")


def _read_triple_names(path: PathLike) -> List[Tuple[str, str, str]]:
    triples: List[Tuple[str, str, str]] = []
    with open(path, "rb") as f:
        for line_number, raw_bytes in enumerate(f, start=1):
            try:
                line = raw_bytes.decode("utf-8").rstrip("\r\n")
            except UnicodeDecodeError as e:
                raise TripleParseError(str(path), line_number, "invalid UTF-8") from e
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise TripleParseError(str(path), line_number, f"expected 3 tab-separated fields, got {len(fields)}")
            head, relation, tail = fields
            triples.append((head, relation, tail))
    return triples


def _encode(names: Sequence[Tuple[str, str, str]], entities: Dict[str, int], relations: Dict[str, int]) -> np.ndarray:
    encoded = [(entities[h], relations[r], entities[t]) for h, r, t in names]
    return np.asarray(encoded, dtype=np.int64).reshape(-1, 3)


@typechecked
def load_triples(train_path: PathLike, valid_path: Optional[PathLike], test_path: Optional[PathLike]) -> TripleStore:
    """Load the three splits of a dataset and build lexicographic vocabularies over their union.

    Args:
        train_path (PathLike): The training triples
        valid_path (Optional[PathLike]): The validation triples, `None` for an empty split
        test_path (Optional[PathLike]): The test triples, `None` for an empty split

    Raises:
        TripleParseError: Raised for a line without exactly three tab-separated fields
        DataFileError: Raised if a file cannot be read
        DataValidationError: Raised if the train split is empty
        DuplicateTripleError: Raised if a split holds the same triple twice

    Returns:
        TripleStore: The encoded dataset
    """
    try:
        raw = {
            "train": _read_triple_names(train_path),
            "valid": _read_triple_names(valid_path) if valid_path is not None else [],
            "test": _read_triple_names(test_path) if test_path is not None else [],
        }
    except OSError as e:
        raise DataFileError(f"Cannot read triples: {e}") from e
    if not raw["train"]:
        raise DataValidationError(f"The train split {train_path} is empty")

    entity_names = sorted({name for split in raw.values() for h, _, t in split for name in (h, t)})
    relation_names = sorted({r for split in raw.values() for _, r, _ in split})
    entities = {name: i for i, name in enumerate(entity_names)}
    relations = {name: i for i, name in enumerate(relation_names)}

    store = TripleStore(
        entities=entities,
        relations=relations,
        **{split: _encode(names, entities, relations) for split, names in raw.items()},
    )
    store.validate_invariants()
    logger.info(
        f"Loaded {len(store.train)}/{len(store.valid)}/{len(store.test)} triples over "
        f"{store.num_entities} entities and {store.num_relations} relations"
    )
    return store


def _read_text_features(path: PathLike) -> Tuple[List[str], np.ndarray]:
    names: List[str] = []
    vectors: List[List[float]] = []
    dim: Optional[int] = None
    with open(path, "rb") as f:
        for line_number, raw_bytes in enumerate(f, start=1):
            try:
                line = raw_bytes.decode("utf-8").rstrip("\r\n")
            except UnicodeDecodeError as e:
                raise FeatureFormatError(f"{path}:{line_number}: invalid UTF-8") from e
            if not line.strip():
                continue
            name, sep, values = line.partition("\t")
            if not sep:
                raise FeatureFormatError(f"{path}:{line_number}: expected 'name<TAB>v1,v2,...'")
            try:
                vector = [float(value) for value in values.split(",")]
            except ValueError as e:
                raise FeatureFormatError(f"{path}:{line_number}: {e}") from e
            if dim is None:
                dim = len(vector)
            elif len(vector) != dim:
                raise FeatureFormatError(
                    f"{path}:{line_number}: dimension mismatch, expected {dim} values but got {len(vector)}"
                )
            names.append(name)
            vectors.append(vector)
    if dim is None:
        raise FeatureFormatError(f"{path} holds no feature rows")
    return names, np.asarray(vectors, dtype=np.float32)


def _read_binary_features(path: PathLike) -> Tuple[List[str], np.ndarray]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FeatureFormatError(f"{path} is too short for a feature header")
    magic, count, dim = _HEADER.unpack_from(data, 0)
    if magic != FEATURE_MAGIC:
        raise FeatureFormatError(f"{path} does not start with {FEATURE_MAGIC!r}")
    if dim == 0:
        raise FeatureFormatError(f"{path} declares zero-dimensional features")

    offset = _HEADER.size
    names: List[str] = []
    for _ in range(count):
        if offset + _LENGTH.size > len(data):
            raise FeatureFormatError(f"{path} ends inside the entity name block")
        (length,) = _LENGTH.unpack_from(data, offset)
        offset += _LENGTH.size
        try:
            names.append(data[offset : offset + length].decode("utf-8"))
        except UnicodeDecodeError as e:
            raise FeatureFormatError(f"{path} holds an entity name that is not valid UTF-8") from e
        offset += length

    expected = count * dim * 4
    if len(data) - offset != expected:
        raise FeatureFormatError(f"{path} holds {len(data) - offset} value bytes, expected {expected}")
    rows = np.frombuffer(data, dtype="<f4", count=count * dim, offset=offset).reshape(count, dim)
    return names, rows.astype(np.float32)


def is_binary_feature_file(path: PathLike) -> bool:
    """Whether a feature file uses the `MMKF` binary format."""
    with open(path, "rb") as f:
        return f.read(len(FEATURE_MAGIC)) == FEATURE_MAGIC


@typechecked
def load_features(
    path: PathLike,
    modality: Modality,
    store: TripleStore,
    rng: Optional[Rng] = None,
    standardize_rows: bool = False,
) -> FeatureTable:
    """Load a feature file and align its rows to the store's entity ids.

    Entities absent from the file are imputed and flagged as not present.

    Args:
        path (PathLike): A text or `MMKF` binary feature file
        modality (Modality): `Modality.IMAGE` or `Modality.TEXT`
        store (TripleStore): The dataset whose vocabulary the rows align to
        rng (Optional[Rng], optional): The imputation stream. Defaults to a stream seeded with 0.
        standardize_rows (bool, optional): z-score dimensions over the observed rows. Defaults to False.

    Raises:
        FeatureFormatError: Raised for malformed files or inconsistent dimensions
        DataFileError: Raised if the file cannot be read
        UnknownEntityError: Raised if the file names entities outside the vocabulary

    Returns:
        FeatureTable: The aligned table
    """
    if not modality.has_features:
        raise DataValidationError(f"The {modality.value} modality has no feature file")

    try:
        names, vectors = _read_binary_features(path) if is_binary_feature_file(path) else _read_text_features(path)
    except OSError as e:
        raise DataFileError(f"Cannot read {modality.value} features: {e}") from e

    unknown = [name for name in names if name not in store.entities]
    if unknown:
        raise UnknownEntityError(unknown)
    if len(set(names)) != len(names):
        raise FeatureFormatError(f"{path} lists some entities more than once")

    dim = int(vectors.shape[1])
    rows = np.zeros((store.num_entities, dim), dtype=np.float32)
    present = np.zeros(store.num_entities, dtype=bool)
    ids = np.asarray([store.entities[name] for name in names], dtype=np.int64)
    rows[ids] = vectors
    present[ids] = True

    table = FeatureTable(modality=modality, dim=dim, rows=rows, present=present)
    if standardize_rows:
        table, _ = standardize(table)
    rng = rng if rng is not None else Rng(0, ("imputation", modality.value))
    table = table.with_rows(impute_rows(table.rows, table.present, rng), table.present)
    table.validate_invariants()

    logger.info(
        f"Loaded {modality.value} features from {path}: dim {dim}, "
        f"{int(present.sum())}/{store.num_entities} entities observed"
    )
    return table


def write_triples(path: PathLike, triples: np.ndarray, store: TripleStore) -> None:
    """Write triples as `head<TAB>relation<TAB>tail` lines.

    Args:
        path (PathLike): The destination
        triples (np.ndarray): The (n, 3) encoded triples
        store (TripleStore): The store providing the names
    """
    entity_names = store.entity_names
    relation_names = store.relation_names
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for h, r, t in np.asarray(triples).reshape(-1, 3):
            f.write(f"{entity_names[h]}\t{relation_names[r]}\t{entity_names[t]}\n")


def write_features(path: PathLike, table: FeatureTable, store: TripleStore, binary: bool = False) -> None:
    """Write the observed rows of a table; imputed rows are left out so they are imputed again on load.

    Args:
        path (PathLike): The destination
        table (FeatureTable): The table to write
        store (TripleStore): The store providing entity names
        binary (bool, optional): Use the `MMKF` binary format. Defaults to False.
    """
    entity_names = store.entity_names
    ids = np.flatnonzero(table.present)
    if binary:
        with open(path, "wb") as f:
            f.write(_HEADER.pack(FEATURE_MAGIC, len(ids), table.dim))
            for i in ids:
                encoded = entity_names[i].encode("utf-8")
                f.write(_LENGTH.pack(len(encoded)))
                f.write(encoded)
            f.write(np.ascontiguousarray(table.rows[ids], dtype="<f4").tobytes())
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for i in ids:
                values = ",".join(repr(float(v)) for v in table.rows[i])
                f.write(f"{entity_names[i]}\t{values}\n")
