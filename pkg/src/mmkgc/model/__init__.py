"""Relation-guided modality experts, joint decision scoring and expert disentanglement."""

from .exid import (
    QNet,
    club_loss,
    club_objective,
    club_pair_estimate,
    exid_loss,
    fit_qnet,
    gaussian_mi_oracle,
    q_log_prob,
    sample_bivariate_gaussian,
)
from .model import LossTerms, ModelScorer, MultiModalKgcModel
from .mujod import JointFusion, ModalityScorer, cross_entropy, fuse_joint, fusion_weights, tucker_score
from .remoke import (
    FeatureInput,
    ModalityExperts,
    RawInput,
    RelationTemps,
    StructureInput,
    ViewSet,
    expert_views,
    fuse_intra_modality,
    gate_weights,
)

__all__ = [
    "FeatureInput",
    "JointFusion",
    "LossTerms",
    "ModalityExperts",
    "ModalityScorer",
    "ModelScorer",
    "MultiModalKgcModel",
    "QNet",
    "RawInput",
    "RelationTemps",
    "StructureInput",
    "ViewSet",
    "club_loss",
    "club_objective",
    "club_pair_estimate",
    "cross_entropy",
    "exid_loss",
    "expert_views",
    "fit_qnet",
    "fuse_intra_modality",
    "fuse_joint",
    "fusion_weights",
    "gate_weights",
    "gaussian_mi_oracle",
    "q_log_prob",
    "sample_bivariate_gaussian",
    "tucker_score",
]
