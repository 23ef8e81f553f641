"""Pytest test configuration shared by every test package."""
import shutil
from pathlib import Path
from typing import Callable, Dict, Sequence, Tuple

import numpy as np
import pytest

from mmkgc._helper import Config, validate_config
from mmkgc.data import FeatureTable, Modality, TripleStore, make_synthetic_dataset
from mmkgc.model import MultiModalKgcModel
from mmkgc.numeric import ParamStore, Rng

TOY_DIR = Path(__file__).resolve().parents[1] / "data" / "toy"

TripleNames = Sequence[Tuple[str, str, str]]


@pytest.fixture(scope="function")
def triples_file(tmp_path: Path) -> Callable[[str, TripleNames], Path]:
    """Pytest fixture writing `head<TAB>relation<TAB>tail` lines into the test's directory."""

    def write(name: str, triples: TripleNames) -> Path:
        path = tmp_path / name
        path.write_text("".join(f"{h}\t{r}\t{t}\n" for h, r, t in triples), encoding="utf-8")
        return path

    return write


@pytest.fixture(scope="function")
def toy_config(tmp_path: Path) -> Path:
    """Pytest fixture for a private copy of the bundled toy dataset; returns its config file."""
    target = tmp_path / "toy"
    shutil.copytree(TOY_DIR, target, ignore=shutil.ignore_patterns("runs"))
    return target / "toy.cfg"


@pytest.fixture(scope="function")
def small_config() -> Config:
    """Pytest fixture for a config small enough to train in a fraction of a second."""
    return validate_config({"dim": 4, "experts": 2, "epochs": 2, "batch_size": 8, "lr": 0.01, "seed": 0})


@pytest.fixture(scope="function")
def synthetic() -> Tuple[TripleStore, Dict[Modality, FeatureTable]]:
    """Pytest fixture for an 8 entity synthetic dataset with valid and test triples."""
    return make_synthetic_dataset(
        num_entities=8, num_relations=2, num_train=16, num_valid=3, num_test=4, feature_dim=5, num_clusters=2, seed=0
    )


@pytest.fixture(scope="function")
def tiny_model(synthetic: Tuple[TripleStore, Dict[Modality, FeatureTable]]) -> MultiModalKgcModel:
    """Pytest fixture for a 64-bit model with every component enabled over the synthetic dataset."""
    config = validate_config({"dim": 4, "experts": 2, "seed": 0})
    return MultiModalKgcModel(config, synthetic[0], synthetic[1], dtype=np.float64)


@pytest.fixture(scope="function")
def store() -> ParamStore:
    """Pytest fixture for an empty 64-bit parameter store."""
    return ParamStore(np.float64, name="test")


@pytest.fixture(scope="function")
def rng() -> Rng:
    """Pytest fixture for a seeded stream."""
    return Rng(0, ("test",))
