"""Tests for the `model` module."""
from typing import Dict, Tuple

import numpy as np
import pytest

from mmkgc._helper import validate_config
from mmkgc.data import FeatureTable, Modality, TripleBatch, TripleStore
from mmkgc.exceptions import ConfigError
from mmkgc.model import MultiModalKgcModel, tucker_score
from mmkgc.numeric import Rng, gradient_check_report
from mmkgc.numeric.exceptions import CheckpointError, ContractViolation

Dataset = Tuple[TripleStore, Dict[Modality, FeatureTable]]


@pytest.mark.parametrize(
    "settings",
    [
        {},
        {"use_noise": False, "per_modality_temperature": True, "project_structure": False, "use_adaptive_fusion": False},
        {"modalities": "structure,text", "use_relation_temperature": False},
    ],
)
def test_objective_gradients(synthetic: Dataset, settings: dict) -> None:
    """Test that the link prediction, CLUB and likelihood gradients agree with finite differences."""
    config = validate_config({"dim": 4, "experts": 2, "seed": 1, **settings})
    model = MultiModalKgcModel(config, synthetic[0], synthetic[1], dtype=np.float64)
    batch = TripleBatch.from_triples(synthetic[0].train[:6])
    noise = model.draw_noise(Rng(1, ("noise",)))

    checks = [
        (lambda: model.kgc_loss(batch, noise), model.params),
        (lambda: model.club_loss(batch), model.params),
        (lambda: model.exid_loss(batch), model.qparams),
    ]
    for loss_fn, params in checks:
        report = gradient_check_report(loss_fn, params, eps=1e-5, sample_count=40, rng=Rng(2))
        assert report.max_relative_error < 1e-3


def test_kgc_loss_sums_the_modalities(tiny_model: MultiModalKgcModel, synthetic: Dataset) -> None:
    """Test that the link prediction loss is the sum over structure, image, text and joint."""
    batch = TripleBatch.from_triples(synthetic[0].train[:5])

    total = tiny_model.kgc_loss(batch, backward=False)
    parts = [tiny_model.modality_loss(batch, m) for m in tiny_model.scoring_modalities]

    assert tiny_model.scoring_modalities == [Modality.STRUCTURE, Modality.IMAGE, Modality.TEXT, Modality.JOINT]
    assert total == pytest.approx(sum(parts))
    assert all(part > 0 for part in parts)


def test_joint_training_can_be_disabled(synthetic: Dataset) -> None:
    """Test that the ablation without joint training scores the base modalities only."""
    config = validate_config({"dim": 4, "experts": 2, "use_joint_training": False})
    model = MultiModalKgcModel(config, synthetic[0], synthetic[1])

    assert model.scoring_modalities == [Modality.STRUCTURE, Modality.IMAGE, Modality.TEXT]
    assert model.fusion is None
    with pytest.raises(ContractViolation):
        model.modality_loss(TripleBatch.from_triples(synthetic[0].train[:2]), Modality.JOINT)


def test_single_modality_has_no_joint(synthetic: Dataset) -> None:
    """Test that the joint modality needs two base modalities."""
    config = validate_config({"dim": 4, "experts": 2, "modalities": "structure"})

    model = MultiModalKgcModel(config, synthetic[0], synthetic[1])

    assert model.scoring_modalities == [Modality.STRUCTURE]


def test_enabled_modality_needs_features(synthetic: Dataset) -> None:
    """Test that an image modality without an image table is a config error."""
    config = validate_config({"dim": 4, "experts": 2})

    with pytest.raises(ConfigError, match="image"):
        MultiModalKgcModel(config, synthetic[0], {Modality.TEXT: synthetic[1][Modality.TEXT]})


def test_scores_match_the_contraction(tiny_model: MultiModalKgcModel) -> None:
    """Test that every candidate score equals the Tucker contraction of its relation-guided embeddings."""
    scorer = tiny_model.scorer()
    h, r, t = 2, 1, 5

    tails = tiny_model.score_all_tails(h, r, Modality.IMAGE)
    heads = tiny_model.score_all_heads(r, t, Modality.JOINT)

    image = scorer.context(r).embeddings[Modality.IMAGE]
    joint = scorer.context(r).embeddings[Modality.JOINT]
    image_scorer, joint_scorer = tiny_model.scorers[Modality.IMAGE], tiny_model.scorers[Modality.JOINT]
    assert tails.shape == heads.shape == (tiny_model.num_entities,)
    for e in range(tiny_model.num_entities):
        assert tails[e] == pytest.approx(tucker_score(image[h], image_scorer.relation(r), image[e], image_scorer.core), abs=1e-6)
        assert heads[e] == pytest.approx(tucker_score(joint[e], joint_scorer.relation(r), joint[t], joint_scorer.core), abs=1e-6)


def test_inference_score_is_the_ensemble_sum(tiny_model: MultiModalKgcModel) -> None:
    """Test that the inference score adds the modality scores and is deterministic."""
    parts = [tiny_model.score_all_tails(0, 1, m)[3] for m in tiny_model.scoring_modalities]

    score = tiny_model.inference_score(0, 1, 3)

    assert score == pytest.approx(sum(parts), abs=1e-9)
    assert tiny_model.inference_score(0, 1, 3) == score


def test_structure_only_cores(tiny_model: MultiModalKgcModel) -> None:
    """Test that zeroing every other core leaves the structural score."""
    for m in (Modality.IMAGE, Modality.TEXT, Modality.JOINT):
        tiny_model.params[f"core.{m.value}"][...] = 0.0

    assert tiny_model.inference_score(4, 0, 1) == pytest.approx(tiny_model.score_all_tails(4, 0, Modality.STRUCTURE)[1])


def test_unknown_relation_is_rejected(tiny_model: MultiModalKgcModel) -> None:
    """Test that scoring a relation id outside the vocabulary is a contract violation."""
    with pytest.raises(ContractViolation):
        tiny_model.score_all_tails(0, tiny_model.num_relations)


def test_checkpoint_groups_restore(tiny_model: MultiModalKgcModel, synthetic: Dataset) -> None:
    """Test that groups of one model restore into a fresh model of the same shape, and only into one."""
    tiny_model.params["core.structure"][...] = 0.25
    config = validate_config({"dim": 4, "experts": 2, "seed": 5})
    fresh = MultiModalKgcModel(config, synthetic[0], synthetic[1], dtype=np.float64)

    fresh.load_groups(tiny_model.checkpoint_groups())

    assert fresh.params.equals(tiny_model.params)
    assert fresh.qparams.equals(tiny_model.qparams)
    groups = tiny_model.checkpoint_groups()
    groups["meta.shape"] = np.array([9, 2], dtype=np.float32)
    with pytest.raises(CheckpointError):
        fresh.load_groups(groups)
