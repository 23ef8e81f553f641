"""Tests for the `trainer` module."""
import math
from pathlib import Path
from typing import Dict, Tuple

import numpy as np
import pytest

from mmkgc._helper import Config, load_config
from mmkgc.data import FeatureTable, Modality, TripleBatch, TripleStore, make_synthetic_dataset
from mmkgc.model import LossTerms, MultiModalKgcModel
from mmkgc.base import Toolkit
from mmkgc.numeric import Rng, load_checkpoint
from mmkgc.numeric.exceptions import NumericError
from mmkgc.training import Trainer, evaluate_split, train_run
from mmkgc.training.trainer import BEST_CHECKPOINT, CONFIG_FILE, LAST_CHECKPOINT, TRACE_FILE, trace_losses

Dataset = Tuple[TripleStore, Dict[Modality, FeatureTable]]


def test_outputs_of_a_run(small_config: Config, synthetic: Dataset, tmp_path: Path) -> None:
    """Test that a run writes its config, both checkpoints and one trace line per epoch."""
    result = train_run(small_config, synthetic[0], synthetic[1], str(tmp_path))

    assert len(result.trace) == 2
    assert result.checkpoint == tmp_path / LAST_CHECKPOINT
    assert (tmp_path / BEST_CHECKPOINT).exists()
    assert load_config(str(tmp_path / CONFIG_FILE)).dim == small_config.dim
    lines = (tmp_path / TRACE_FILE).read_text(encoding="utf-8").splitlines()
    assert [line.split("\t")[0] for line in lines] == ["1", "2"]
    assert all(len(line.split("\t")) == 5 for line in lines)
    assert all(math.isfinite(float(line.split("\t")[4])) for line in lines)
    assert 0 <= result.best_epoch <= 2


def test_runs_are_reproducible(small_config: Config, synthetic: Dataset, tmp_path: Path) -> None:
    """Test that the same config and data give byte-identical checkpoints."""
    train_run(small_config, synthetic[0], synthetic[1], str(tmp_path / "a"))
    train_run(small_config, synthetic[0], synthetic[1], str(tmp_path / "b"))

    assert (tmp_path / "a" / LAST_CHECKPOINT).read_bytes() == (tmp_path / "b" / LAST_CHECKPOINT).read_bytes()


def test_zero_lambda_matches_no_disentanglement(small_config: Config, synthetic: Dataset) -> None:
    """Test that a zero CLUB weight trains the model exactly like training without it."""
    with_exid = train_run(small_config.updated(**{"lambda": 0.0}), synthetic[0], synthetic[1])
    without_exid = train_run(small_config.updated(use_exid=False), synthetic[0], synthetic[1])

    assert with_exid.model.params.equals(without_exid.model.params)
    assert with_exid.trace[-1].exid != 0.0
    assert without_exid.trace[-1].exid == 0.0 and without_exid.trace[-1].club == 0.0


def test_joint_ablation_scores_base_modalities(small_config: Config, synthetic: Dataset) -> None:
    """Test that without joint training no joint loss is recorded."""
    result = train_run(small_config.updated(use_joint_training=False), synthetic[0], synthetic[1])

    assert set(result.trace[0].modality) == {"structure", "image", "text"}
    assert result.trace[0].kgc == pytest.approx(sum(result.trace[0].modality.values()))


def test_zero_epochs_checkpoint_the_initialisation(small_config: Config, synthetic: Dataset, tmp_path: Path) -> None:
    """Test that training for no epochs writes the initial parameters."""
    result = train_run(small_config.updated(epochs=0), synthetic[0], synthetic[1], str(tmp_path))
    initial = MultiModalKgcModel(small_config, synthetic[0], synthetic[1]).checkpoint_groups()

    groups = load_checkpoint(tmp_path / LAST_CHECKPOINT)

    assert result.trace == []
    assert list(groups) == list(initial)
    assert all(np.array_equal(groups[name], initial[name]) for name in groups)


def test_divergence_names_the_loss(
    small_config: Config, synthetic: Dataset, monkeypatch: pytest.MonkeyPatch
) -> None:
    """Test that a non-finite link prediction loss stops training with a numeric error."""

    def diverged(self: MultiModalKgcModel, *args: object, **kwargs: object) -> LossTerms:
        return LossTerms({Modality.STRUCTURE: float("nan")}, 0.0)

    monkeypatch.setattr(MultiModalKgcModel, "objective", diverged)

    with pytest.raises(NumericError, match="L_kgc"):
        train_run(small_config, synthetic[0], synthetic[1])


def test_train_step_updates_both_stores(small_config: Config, synthetic: Dataset) -> None:
    """Test that one step moves the model and the variational networks."""
    trainer = Trainer(small_config, synthetic[0], synthetic[1])
    params, qparams = trainer.model.params.copy(), trainer.model.qparams.copy()
    batch = TripleBatch.from_triples(synthetic[0].train[:8])

    record = trainer.train_step(batch, Rng(0, ("gate-noise",)))

    assert not trainer.model.params.equals(params)
    assert not trainer.model.qparams.equals(qparams)
    assert record.kgc > 0 and record.exid != 0.0


@pytest.mark.slow
def test_toy_graph_loss_drops(toy_config: Path) -> None:
    """Test that 200 epochs on the bundled toy graph cut the link prediction loss by 90%."""
    result = Toolkit(str(toy_config)).train(str(toy_config.parent / "runs"))

    losses = trace_losses(result.trace)
    assert len(losses) == 200
    assert losses[-1] <= 0.1 * losses[0]


@pytest.mark.slow
def test_memorisation(tmp_path: Path) -> None:
    """Test that a 50 entity graph is memorised to train Hit@1 of at least 0.95."""
    store, features = make_synthetic_dataset(num_entities=50, num_relations=5, num_train=300, feature_dim=16, seed=0)
    config = load_config(
        None, {"dim": 32, "experts": 3, "lambda": 1e-4, "lr": 0.005, "batch_size": 32, "epochs": 300, "eval_every": 0}
    )

    result = train_run(config, store, features)

    losses = trace_losses(result.trace)
    assert losses[-1] <= 0.1 * losses[0]
    assert evaluate_split(result.model, store, "train").hit1 >= 0.95
