"""Tests for the `loading` module."""
import struct
from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from mmkgc.data import Modality, load_features, load_triples, write_features
from mmkgc.data.exceptions import (
    DataFileError,
    DataValidationError,
    DuplicateTripleError,
    FeatureFormatError,
    TripleParseError,
    UnknownEntityError,
)
from mmkgc.data.loading import FEATURE_MAGIC
from mmkgc.exceptions import DataError

TriplesFile = Callable[..., Path]


def test_ids_are_lexicographic(triples_file: TriplesFile) -> None:
    """Test that entity and relation ids follow the order of their names."""
    store = load_triples(triples_file("train.txt", [("b", "p", "c"), ("a", "p", "b")]), None, None)

    assert store.num_entities == 3
    assert store.num_relations == 1
    assert store.entities == {"a": 0, "b": 1, "c": 2}
    assert store.train.tolist() == [[1, 0, 2], [0, 0, 1]]


def test_vocabularies_span_every_split(triples_file: TriplesFile) -> None:
    """Test that entities only seen in valid or test still get ids."""
    store = load_triples(
        triples_file("train.txt", [("a", "p", "b")]),
        triples_file("valid.txt", [("b", "q", "c")]),
        triples_file("test.txt", [("d", "p", "a")]),
    )

    assert store.entity_names == ["a", "b", "c", "d"]
    assert store.relation_names == ["p", "q"]
    assert len(store.valid) == 1 and len(store.test) == 1


def test_loading_twice_gives_identical_ids(triples_file: TriplesFile) -> None:
    """Test that loading is deterministic."""
    path = triples_file("train.txt", [("x", "r", "y"), ("y", "r", "z"), ("z", "s", "x")])

    first = load_triples(path, None, None)
    second = load_triples(path, None, None)

    assert first.equals(second)


def test_malformed_line_names_the_line(tmp_path: Path) -> None:
    """Test that a line with two fields is reported with its line number."""
    path = tmp_path / "train.txt"
    path.write_text("a\tp\tb\na\tp\n", encoding="utf-8")

    with pytest.raises(TripleParseError) as info:
        load_triples(path, None, None)

    assert info.value.line_number == 2
    assert info.value.exit_code == 3


def test_empty_train_split(tmp_path: Path) -> None:
    """Test that an empty train split is rejected."""
    path = tmp_path / "train.txt"
    path.write_text("\n", encoding="utf-8")

    with pytest.raises(DataValidationError):
        load_triples(path, None, None)


def test_duplicates_are_rejected(triples_file: TriplesFile) -> None:
    """Test that a split holding a triple twice is an error, not deduplicated."""
    with pytest.raises(DuplicateTripleError):
        load_triples(triples_file("train.txt", [("a", "p", "b"), ("a", "p", "b")]), None, None)


def test_missing_file_is_a_data_error(tmp_path: Path) -> None:
    """Test that an absent triples file raises a data error."""
    with pytest.raises(DataFileError):
        load_triples(tmp_path / "absent.txt", None, None)


def test_features_covering_every_entity(triples_file: TriplesFile, tmp_path: Path) -> None:
    """Test that rows are aligned to entity ids."""
    store = load_triples(triples_file("train.txt", [("a", "p", "b"), ("b", "p", "c")]), None, None)
    path = tmp_path / "image.txt"
    path.write_text("c\t3,3,3,3\na\t1,1,1,1\nb\t2,2,2,2\n", encoding="utf-8")

    table = load_features(path, Modality.IMAGE, store)

    assert table.rows.shape == (3, 4)
    assert table.dim == 4
    assert table.present.all()
    assert table.rows[:, 0].tolist() == [1.0, 2.0, 3.0]


def test_absent_entity_is_imputed(triples_file: TriplesFile, tmp_path: Path) -> None:
    """Test that an entity without a row is imputed and flagged as not present."""
    store = load_triples(triples_file("train.txt", [("a", "p", "b"), ("b", "p", "c")]), None, None)
    path = tmp_path / "text.txt"
    path.write_text("a\t1,0\nc\t3,2\n", encoding="utf-8")

    table = load_features(path, Modality.TEXT, store)

    assert table.present.tolist() == [True, False, True]
    assert np.all(np.isfinite(table.rows[1]))
    assert table.rows[0].tolist() == [1.0, 0.0]


def test_dimension_mismatch(triples_file: TriplesFile, tmp_path: Path) -> None:
    """Test that a row shorter than the first row is a format error."""
    store = load_triples(triples_file("train.txt", [("a", "p", "b")]), None, None)
    path = tmp_path / "image.txt"
    path.write_text("a\t1,2,3,4\nb\t1,2,3\n", encoding="utf-8")

    with pytest.raises(FeatureFormatError, match="dimension mismatch"):
        load_features(path, Modality.IMAGE, store)


def test_unknown_entities_are_listed(triples_file: TriplesFile, tmp_path: Path) -> None:
    """Test that feature rows for unknown entities name every offender."""
    store = load_triples(triples_file("train.txt", [("a", "p", "b")]), None, None)
    path = tmp_path / "image.txt"
    path.write_text("a\t1\nzed\t2\nyan\t3\n", encoding="utf-8")

    with pytest.raises(UnknownEntityError) as info:
        load_features(path, Modality.IMAGE, store)

    assert info.value.names == ["zed", "yan"]
    assert isinstance(info.value, DataError)


def test_structure_has_no_feature_file(triples_file: TriplesFile, tmp_path: Path) -> None:
    """Test that only image and text features can be loaded."""
    store = load_triples(triples_file("train.txt", [("a", "p", "b")]), None, None)
    path = tmp_path / "structure.txt"
    path.write_text("a\t1\n", encoding="utf-8")

    with pytest.raises(DataValidationError):
        load_features(path, Modality.STRUCTURE, store)


def test_binary_features_match_text_features(triples_file: TriplesFile, tmp_path: Path) -> None:
    """Test that the MMKF format loads the same rows as the text format."""
    store = load_triples(triples_file("train.txt", [("a", "p", "b"), ("b", "p", "c")]), None, None)
    text_path = tmp_path / "image.txt"
    text_path.write_text("a\t0.5,-1.25\nc\t2,4\n", encoding="utf-8")
    table = load_features(text_path, Modality.IMAGE, store)
    binary_path = tmp_path / "image.mmkf"

    write_features(binary_path, table, store, binary=True)
    loaded = load_features(binary_path, Modality.IMAGE, store)

    assert binary_path.read_bytes()[:4] == FEATURE_MAGIC
    assert loaded.equals(table)


def test_truncated_binary_file(triples_file: TriplesFile, tmp_path: Path) -> None:
    """Test that a binary file ending inside its name block is a format error."""
    store = load_triples(triples_file("train.txt", [("a", "p", "b")]), None, None)
    path = tmp_path / "image.mmkf"
    path.write_bytes(struct.pack("<4sII", FEATURE_MAGIC, 2, 3))

    with pytest.raises(FeatureFormatError):
        load_features(path, Modality.IMAGE, store)


def test_standardised_rows(triples_file: TriplesFile, tmp_path: Path) -> None:
    """Test that standardisation centres and scales the observed rows."""
    store = load_triples(triples_file("train.txt", [("a", "p", "b"), ("b", "p", "c")]), None, None)
    path = tmp_path / "image.txt"
    path.write_text("a\t1,10\nb\t2,20\nc\t3,60\n", encoding="utf-8")

    table = load_features(path, Modality.IMAGE, store, standardize_rows=True)

    assert np.allclose(table.rows.mean(axis=0), 0.0, atol=1e-6)
    assert np.allclose(table.rows.std(axis=0), 1.0, atol=1e-5)


def test_undecodable_triple_line_names_the_line(tmp_path: Path) -> None:
    """Test that a line which is not UTF-8 is a parse error on that line."""
    path = tmp_path / "train.txt"
    path.write_bytes(b"a\tp\tb\n\xff\tp\tb\n")

    with pytest.raises(TripleParseError) as info:
        load_triples(path, None, None)

    assert info.value.line_number == 2
    assert info.value.exit_code == 3


def test_undecodable_text_features(triples_file: TriplesFile, tmp_path: Path) -> None:
    """Test that a text feature file which is not UTF-8 is a format error."""
    store = load_triples(triples_file("train.txt", [("a", "p", "b")]), None, None)
    path = tmp_path / "image.txt"
    path.write_bytes(b"a\t1,2\n\xff\t3,4\n")

    with pytest.raises(FeatureFormatError, match="invalid UTF-8") as info:
        load_features(path, Modality.IMAGE, store)

    assert info.value.exit_code == 3


def test_undecodable_binary_entity_name(triples_file: TriplesFile, tmp_path: Path) -> None:
    """Test that a binary feature file with a non UTF-8 entity name is a format error."""
    store = load_triples(triples_file("train.txt", [("a", "p", "b")]), None, None)
    path = tmp_path / "image.mmkf"
    path.write_bytes(struct.pack("<4sIII", FEATURE_MAGIC, 1, 1, 2) + b"\xff\xfe" + struct.pack("<f", 1.0))

    with pytest.raises(FeatureFormatError) as info:
        load_features(path, Modality.IMAGE, store)

    assert info.value.exit_code == 3
