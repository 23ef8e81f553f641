"""The assembled multi-modal knowledge graph completion model."""

import logging
from typing import Dict, List, Mapping, NamedTuple, Optional, Union

import numpy as np

from .._helper.config_loader import Config
from ..data.types import FeatureTable, Modality, TripleBatch, TripleStore
from ..exceptions import ConfigError
from ..numeric.checkpoint import restore_store, store_groups
from ..numeric.exceptions import CheckpointError, ContractViolation
from ..numeric.ops import softmax_temp
from ..numeric.params import DTypeLike, ParamStore
from ..numeric.rng import Rng
from .exid import QNet, club_objective, exid_loss
from .mujod import FusionCache, JointFusion, ModalityScorer
from .remoke import (
    ExpertsCache,
    FeatureInput,
    GateCache,
    ModalityExperts,
    RawInput,
    RelationTemps,
    StructureInput,
    ViewSet,
    fusion_backward,
    tempered_softmax_backward,
)

logger = logging.getLogger(__name__)

Noise = Optional[Dict[Modality, np.ndarray]]
"""Standard normal gate noise (|E|, K) per base modality, or `None` in evaluation mode."""

META_GROUP = "meta.shape"


class ModalityForward(NamedTuple):
    """Views and gate logits of every entity in one modality."""

    views: np.ndarray
    experts: ExpertsCache
    gate: GateCache


class RelationContext(NamedTuple):
    """Relation-guided embeddings of every entity under one relation."""

    embeddings: Dict[Modality, np.ndarray]
    weights: Dict[Modality, np.ndarray]
    fusion: Optional[FusionCache]


class LossTerms(NamedTuple):
    """Loss values of one objective evaluation."""

    modality: Dict[Modality, float]
    club: float

    @property
    def kgc(self) -> float:
        """Sum of the per-modality losses."""
        return float(sum(self.modality.values()))


class MultiModalKgcModel:
    """Relation-guided experts per modality, a joint modality and one Tucker scorer per modality.

    Parameters live in two stores: `params` for the model and `qparams` for the variational networks,
    so the two sides of the disentanglement can be optimised alternately.
    """

    def __init__(
        self,
        config: Config,
        store: TripleStore,
        features: Optional[Mapping[Modality, FeatureTable]] = None,
        dtype: DTypeLike = np.float32,
    ) -> None:
        """Build and initialise the model for a dataset.

        Args:
            config (Config): Dimensions, ablation switches and seed
            store (TripleStore): The dataset the vocabularies come from
            features (Optional[Mapping[Modality, FeatureTable]], optional): Feature tables of the enabled
                image and text modalities. Defaults to None.
            dtype (DTypeLike, optional): Parameter storage type. Defaults to np.float32.

        Raises:
            ConfigError: Raised if an enabled modality has no feature table
        """
        self.logger = logging.getLogger(__name__).getChild(self.__class__.__qualname__)
        self.config = config
        self.num_entities = store.num_entities
        self.num_relations = store.num_relations
        self.modalities: List[Modality] = list(config.modalities)
        self.joint_enabled = config.joint_enabled
        if config.use_joint_training and not self.joint_enabled:
            self.logger.warning("Joint training needs at least two modalities, the joint modality is disabled")
        self.scoring_modalities = self.modalities + ([Modality.JOINT] if self.joint_enabled else [])

        features = dict(features or {})
        rng = Rng(config.seed, ("init",))
        dim, hidden = config.dim, config.resolved_hidden_dim
        self.params = ParamStore(dtype=dtype, name="model")
        self.qparams = ParamStore(dtype=dtype, name="qnet")

        self.inputs: Dict[Modality, RawInput] = {}
        for m in self.modalities:
            if m == Modality.STRUCTURE:
                self.inputs[m] = StructureInput.create(self.params, self.num_entities, dim, config.init_std, rng.child("structure"))
            elif m in features:
                if features[m].num_entities != self.num_entities:
                    raise ConfigError(f"The {m.value} features hold {features[m].num_entities} rows, expected {self.num_entities}")
                self.inputs[m] = FeatureInput(features[m])
            else:
                raise ConfigError(f"The {m.value} modality is enabled but no {m.value}_features are configured")

        self.experts = {
            m: ModalityExperts.create(
                self.params,
                m,
                self.inputs[m].dim,
                hidden,
                dim,
                config.experts,
                rng.child(f"experts-{m.value}"),
                config.noise_floor,
            )
            for m in self.modalities
        }
        self.temps = RelationTemps.create(
            self.params,
            self.num_relations,
            self.modalities,
            config.per_modality_temperature,
            config.use_relation_temperature,
        )
        self.fusion = (
            JointFusion.create(
                self.params,
                self.modalities,
                dim,
                hidden,
                rng.child("fusion"),
                project_structure=config.project_structure,
                adaptive=config.use_adaptive_fusion,
            )
            if self.joint_enabled
            else None
        )
        self.scorers = {
            m: ModalityScorer.create(
                self.params, m, self.num_relations, dim, config.resolved_relation_dim, rng.child(f"scorer-{m.value}")
            )
            for m in self.scoring_modalities
        }
        self.qnets = (
            {
                m: QNet.create(self.qparams, f"qnet.{m.value}", dim, hidden, rng.child(f"qnet-{m.value}"), config.variance_floor)
                for m in self.modalities
            }
            if config.use_exid
            else {}
        )
        self.logger.debug(
            f"Built {self.params!r} and {self.qparams!r} for {self.num_entities} entities and {self.num_relations} relations"
        )

    def parameter_counts(self) -> Dict[str, int]:
        """Trainable scalars per store."""
        return {self.params.name: self.params.num_scalars(), self.qparams.name: self.qparams.num_scalars()}

    def draw_noise(self, rng: Rng) -> Noise:
        """Gate noise of one training step, or `None` when gating noise is disabled."""
        if not self.config.use_noise:
            return None
        return {m: rng.child(m.value).normal((self.num_entities, self.config.experts)) for m in self.modalities}

    def forward_modalities(self, noise: Noise = None) -> Dict[Modality, ModalityForward]:
        """Views and gate logits of every entity in every base modality."""
        forward = {}
        for m in self.modalities:
            views, cache = self.experts[m].forward(self.inputs[m].rows())
            gate = self.experts[m].gate(views, None if noise is None else noise[m])
            forward[m] = ModalityForward(views, cache, gate)
        return forward

    def relation_context(self, forward: Mapping[Modality, ModalityForward], relation: int) -> RelationContext:
        """Fuse the views of every entity under one relation, and build the joint modality."""
        embeddings, weights = {}, {}
        for m in self.modalities:
            weights[m] = softmax_temp(forward[m].gate.logits, self.temps.temperature(relation, m))
            embeddings[m] = np.einsum("nk,nkd->nd", weights[m], forward[m].views)
        fusion_cache = None
        if self.fusion is not None:
            embeddings[Modality.JOINT], fusion_cache = self.fusion.forward({m: embeddings[m] for m in self.modalities})
        return RelationContext(embeddings, weights, fusion_cache)

    def objective(
        self,
        batch: TripleBatch,
        noise: Noise = None,
        include_kgc: bool = True,
        club_weight: float = 0.0,
        backward: bool = True,
    ) -> LossTerms:
        """Evaluate the training objective on a batch and optionally accumulate its model gradients.

        The gradient is that of `kgc + club_weight * club`. Variational networks stay frozen.

        Args:
            batch (TripleBatch): The triples
            noise (Noise, optional): Frozen gate noise. Defaults to None.
            include_kgc (bool, optional): Include the link prediction losses. Defaults to True.
            club_weight (float, optional): Weight of the CLUB penalty; it is computed whenever the
                variational networks exist. Defaults to 0.0.
            backward (bool, optional): Accumulate gradients into `params`. Defaults to True.

        Returns:
            LossTerms: Per-modality losses and the unweighted CLUB penalty
        """
        forward = self.forward_modalities(noise)
        dviews = {m: np.zeros_like(forward[m].views) for m in self.modalities}
        dlogits = {m: np.zeros(forward[m].views.shape[:2]) for m in self.modalities}
        losses = {m: 0.0 for m in self.scoring_modalities}

        if include_kgc:
            for relation in np.unique(batch.triples[:, 1]).tolist():
                rows = batch.triples[batch.triples[:, 1] == relation]
                context = self.relation_context(forward, relation)
                dembeddings: Dict[Modality, np.ndarray] = {}
                for m in self.scoring_modalities:
                    loss, grad = self.scorers[m].loss(context.embeddings[m], rows[:, 0], relation, rows[:, 2], backward)
                    losses[m] += loss
                    if grad is not None:
                        dembeddings[m] = grad
                if not backward:
                    continue
                if self.fusion is not None and context.fusion is not None:
                    for m, grad in self.fusion.backward(context.fusion, dembeddings[Modality.JOINT]).items():
                        dembeddings[m] = dembeddings[m] + grad
                for m in self.modalities:
                    dv, dw = fusion_backward(forward[m].views, context.weights[m], dembeddings[m])
                    dviews[m] += dv
                    tau = self.temps.temperature(relation, m)
                    dl, dtau = tempered_softmax_backward(context.weights[m], forward[m].gate.logits, tau, dw)
                    dlogits[m] += dl
                    self.temps.backward(relation, m, dtau)

        club = 0.0
        if self.qnets and len(batch.entities) < 2:
            self.logger.debug("Skipping the CLUB penalty of a batch with a single entity")
        elif self.qnets:
            view_sets = {m: forward[m].views[batch.entities] for m in self.modalities}
            club, dclub = club_objective(
                self.qnets, view_sets, self.config.club_normalize_negatives, need_grad=backward and club_weight > 0
            )
            for m, grad in dclub.items():
                dviews[m][batch.entities] += club_weight * grad

        if backward:
            for m in self.modalities:
                dviews[m] += self.experts[m].gate_backward(forward[m].views, forward[m].gate, dlogits[m])
                self.inputs[m].backward(self.experts[m].backward(forward[m].experts, dviews[m]))
        return LossTerms(losses, club)

    def view_sets(self, entities: np.ndarray) -> Dict[Modality, ViewSet]:
        """Current expert views of selected entities."""
        forward = self.forward_modalities()
        return {m: ViewSet(modality=m, entities=entities, views=forward[m].views[entities]) for m in self.modalities}

    def kgc_loss(self, batch: TripleBatch, noise: Noise = None, backward: bool = True) -> float:
        """The summed link prediction loss over every scoring modality."""
        return self.objective(batch, noise, backward=backward).kgc

    def modality_loss(self, batch: TripleBatch, modality: Modality, noise: Noise = None) -> float:
        """The link prediction loss of one scoring modality.

        Raises:
            ContractViolation: Raised if the modality is not scored by this model
        """
        if modality not in self.scoring_modalities:
            raise ContractViolation(f"The {modality.value} modality is not scored by this model")
        return self.objective(batch, noise, backward=False).modality[modality]

    def club_loss(self, batch: TripleBatch, backward: bool = True) -> float:
        """The CLUB penalty of the batch entities' views; gradients reach the experts only."""
        return self.objective(batch, include_kgc=False, club_weight=1.0, backward=backward).club

    def exid_loss(self, batch: TripleBatch, accumulate: bool = True) -> float:
        """The variational networks' negative log-likelihood; gradients reach `qparams` only."""
        if not self.qnets:
            return 0.0
        forward = self.forward_modalities()
        return exid_loss(self.qnets, {m: forward[m].views[batch.entities] for m in self.modalities}, accumulate)

    def scorer(self) -> "ModelScorer":
        """An evaluation-mode scorer over the current parameters."""
        return ModelScorer(self)

    def score_all_tails(self, head: int, relation: int, modality: Optional[Modality] = None) -> np.ndarray:
        """Scores of (head, relation, e) for every entity e; the ensemble sum when no modality is given."""
        return self.scorer().tail_scores(head, relation, modality)

    def score_all_heads(self, relation: int, tail: int, modality: Optional[Modality] = None) -> np.ndarray:
        """Scores of (e, relation, tail) for every entity e; the ensemble sum when no modality is given."""
        return self.scorer().head_scores(relation, tail, modality)

    def inference_score(self, head: int, relation: int, tail: int) -> float:
        """The ensemble score, the sum of every scoring modality's Tucker score, without gate noise."""
        return float(self.scorer().tail_scores(head, relation)[tail])

    def checkpoint_groups(self) -> Dict[str, np.ndarray]:
        """Every parameter of both stores plus the vocabulary sizes."""
        groups = store_groups(self.params, self.qparams)
        groups[META_GROUP] = np.array([self.num_entities, self.num_relations], dtype=np.float32)
        return groups

    def load_groups(self, groups: Mapping[str, np.ndarray]) -> None:
        """Restore parameters from checkpoint groups.

        Raises:
            CheckpointError: Raised if the vocabulary sizes or any group shape differ
        """
        meta = groups.get(META_GROUP)
        if meta is not None:
            entities, relations = (int(value) for value in meta)
            if (entities, relations) != (self.num_entities, self.num_relations):
                raise CheckpointError(
                    f"The checkpoint was trained on {entities} entities and {relations} relations, "
                    f"the dataset has {self.num_entities} and {self.num_relations}"
                )
        restore_store(self.params, groups)
        restore_store(self.qparams, groups)


class ModelScorer:
    """Read-only evaluation-mode scoring; relation contexts are computed once and cached."""

    def __init__(self, model: MultiModalKgcModel) -> None:
        """Compute the noise-free views of every entity."""
        self.model = model
        self.forward = model.forward_modalities(None)
        self._contexts: Dict[int, RelationContext] = {}

    def context(self, relation: int) -> RelationContext:
        """Relation-guided embeddings of every entity under a relation."""
        if not 0 <= relation < self.model.num_relations:
            raise ContractViolation(f"Relation id {relation} is outside [0, {self.model.num_relations})")
        if relation not in self._contexts:
            self._contexts[relation] = self.model.relation_context(self.forward, relation)
        return self._contexts[relation]

    def _modalities(self, modality: Optional[Modality]) -> List[Modality]:
        if modality is None:
            return self.model.scoring_modalities
        if modality not in self.model.scoring_modalities:
            raise ContractViolation(f"The {modality.value} modality is not scored by this model")
        return [modality]

    def tail_scores(self, heads: Union[np.ndarray, int], relation: int, modality: Optional[Modality] = None) -> np.ndarray:
        """Scores of (h, relation, e) for every candidate e; one row per head when `heads` is an array."""
        single = np.ndim(heads) == 0
        ids = np.atleast_1d(np.asarray(heads, dtype=np.int64))
        context = self.context(relation)
        scores = sum(
            self.model.scorers[m].tail_scores(context.embeddings[m], ids, relation) for m in self._modalities(modality)
        )
        return np.asarray(scores)[0] if single else np.asarray(scores)

    def head_scores(self, relation: int, tails: Union[np.ndarray, int], modality: Optional[Modality] = None) -> np.ndarray:
        """Scores of (e, relation, t) for every candidate e; one row per tail when `tails` is an array."""
        single = np.ndim(tails) == 0
        ids = np.atleast_1d(np.asarray(tails, dtype=np.int64))
        context = self.context(relation)
        scores = sum(
            self.model.scorers[m].head_scores(context.embeddings[m], relation, ids) for m in self._modalities(modality)
        )
        return np.asarray(scores)[0] if single else np.asarray(scores)

    def gate_weights(self, relation: int) -> Dict[Modality, np.ndarray]:
        """Expert weights (|E|, K) of every base modality under a relation."""
        return self.context(relation).weights

    def fusion_weights(self, relation: int) -> Optional[np.ndarray]:
        """Modality weights (|E|, number of base modalities) under a relation, if the joint modality exists."""
        fusion = self.context(relation).fusion
        return None if fusion is None else fusion.weights
