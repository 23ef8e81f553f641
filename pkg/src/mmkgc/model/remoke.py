"""Relation-guided modality knowledge experts.

Each modality owns K expert networks that turn the entity's raw modality input into K views. A gate
scores every view, optionally perturbs the scores with learned Gaussian noise while training, and
mixes the views with a softmax whose temperature is tied to the relation of the current prediction.
"""

import logging
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from overrides import EnforceOverrides, overrides
from pydantic import BaseModel, ConfigDict, Field

from ..data.types import FeatureTable, Modality
from ..numeric.exceptions import ContractViolation, ShapeError
from ..numeric.ops import Mlp, MlpCache, sigmoid, softmax_backward, softmax_temp, softplus
from ..numeric.params import ParamStore, gaussian_init, xavier_uniform
from ..numeric.rng import Rng

logger = logging.getLogger(__name__)


class ViewSet(BaseModel):
    """The K expert views of a set of entities in one modality."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    modality: Modality = Field(..., description="The modality the views belong to.")
    entities: np.ndarray = Field(..., description="Entity ids, one per row of `views`.")
    views: np.ndarray = Field(..., description="Views of shape (n, K, d).")

    @property
    def num_experts(self) -> int:
        """K."""
        return int(self.views.shape[1])

    def subset(self, rows: np.ndarray) -> "ViewSet":
        """The views of selected rows."""
        return ViewSet(modality=self.modality, entities=self.entities[rows], views=self.views[rows])


class RawInput(EnforceOverrides):
    """Where a modality's raw entity input comes from."""

    modality: Modality

    def rows(self) -> np.ndarray:
        """The raw inputs of every entity, shape (|E|, in_dim), 64-bit."""
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> None:
        """Receive the gradient with respect to `rows()`."""
        raise NotImplementedError

    @property
    def dim(self) -> int:
        """Width of the raw input."""
        return int(self.rows().shape[1])


class FeatureInput(RawInput):
    """Precomputed image or text features; frozen during training."""

    def __init__(self, table: FeatureTable) -> None:
        """Wrap a feature table.

        Args:
            table (FeatureTable): The aligned features
        """
        self.modality = table.modality
        self._rows = table.rows.astype(np.float64)

    @overrides
    def rows(self) -> np.ndarray:
        return self._rows

    @overrides
    def backward(self, grad: np.ndarray) -> None:
        pass


class StructureInput(RawInput):
    """A trainable raw row per entity, learned from the triples alone."""

    def __init__(self, store: ParamStore, group: str) -> None:
        """Bind to the entity table group of a store.

        Args:
            store (ParamStore): The model store
            group (str): The (|E|, d) entity table group
        """
        self.modality = Modality.STRUCTURE
        self.store = store
        self.group = group

    @classmethod
    def create(cls, store: ParamStore, num_entities: int, dim: int, std: float, rng: Rng) -> "StructureInput":
        """Add a Gaussian-initialised entity table to the store."""
        group = "entity.structure"
        store.add(group, gaussian_init(rng, (num_entities, dim), std))
        return cls(store, group)

    @overrides
    def rows(self) -> np.ndarray:
        return self.store.value(self.group)

    @overrides
    def backward(self, grad: np.ndarray) -> None:
        self.store.accumulate(self.group, grad)


class ExpertsCache(NamedTuple):
    """Forward values of the K experts."""

    rows: np.ndarray
    caches: List[MlpCache]


class GateCache(NamedTuple):
    """Forward values of the gate over a ViewSet."""

    scores: np.ndarray
    noise_pre: np.ndarray
    noise_std: np.ndarray
    noise: Optional[np.ndarray]
    logits: np.ndarray


class ModalityExperts:
    """K expert networks of one modality plus its gate projection U_m and noise projection U'_m."""

    def __init__(
        self,
        store: ParamStore,
        modality: Modality,
        in_dim: int,
        hidden_dim: int,
        dim: int,
        num_experts: int,
        noise_floor: float = 1e-6,
    ) -> None:
        """Bind to the groups `expert.<m>.<i>.*`, `gate.<m>.*` and `noise.<m>.*` of a store.

        Args:
            store (ParamStore): The model store
            modality (Modality): The modality
            in_dim (int): Raw input width d_m
            hidden_dim (int): Hidden width of the experts
            dim (int): View width d
            num_experts (int): K
            noise_floor (float, optional): Noise std at or below which no noise is added. Defaults to 1e-6.
        """
        if num_experts < 1:
            raise ContractViolation("A modality needs at least one expert")
        self.store = store
        self.modality = modality
        self.in_dim = in_dim
        self.dim = dim
        self.num_experts = num_experts
        self.noise_floor = noise_floor
        self.experts = [
            Mlp(store, f"expert.{modality.value}.{i}", in_dim, hidden_dim, dim) for i in range(num_experts)
        ]
        self.gate_w, self.gate_b = f"gate.{modality.value}.w", f"gate.{modality.value}.b"
        self.noise_w, self.noise_b = f"noise.{modality.value}.w", f"noise.{modality.value}.b"

    @classmethod
    def create(
        cls,
        store: ParamStore,
        modality: Modality,
        in_dim: int,
        hidden_dim: int,
        dim: int,
        num_experts: int,
        rng: Rng,
        noise_floor: float = 1e-6,
    ) -> "ModalityExperts":
        """Add Xavier-initialised experts and projections to the store."""
        for i in range(num_experts):
            Mlp.create(store, f"expert.{modality.value}.{i}", in_dim, hidden_dim, dim, rng.child(f"expert-{i}"))
        gate_rng = rng.child("gate")
        store.add(f"gate.{modality.value}.w", xavier_uniform(gate_rng, (dim,), dim, 1))
        store.add(f"gate.{modality.value}.b", np.zeros(1))
        store.add(f"noise.{modality.value}.w", xavier_uniform(gate_rng, (dim,), dim, 1))
        store.add(f"noise.{modality.value}.b", np.zeros(1))
        return cls(store, modality, in_dim, hidden_dim, dim, num_experts, noise_floor)

    def forward(self, rows: np.ndarray) -> Tuple[np.ndarray, ExpertsCache]:
        """Run every expert over raw rows.

        Args:
            rows (np.ndarray): Raw inputs, shape (n, d_m)

        Raises:
            ShapeError: Raised if the raw width does not match the experts

        Returns:
            Tuple[np.ndarray, ExpertsCache]: Views of shape (n, K, d) and the backward cache
        """
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.in_dim:
            raise ShapeError(f"{self.modality.value} experts expect width {self.in_dim}, got shape {rows.shape}")
        outputs, caches = zip(*(expert.forward(rows) for expert in self.experts))
        return np.stack(outputs, axis=1), ExpertsCache(rows, list(caches))

    def backward(self, cache: ExpertsCache, dviews: np.ndarray) -> np.ndarray:
        """Backpropagate view gradients of shape (n, K, d); returns the raw input gradient."""
        drows = np.zeros_like(cache.rows)
        for i, expert in enumerate(self.experts):
            drows += expert.backward(cache.caches[i], dviews[:, i, :])
        return drows

    def gate(self, views: np.ndarray, noise: Optional[np.ndarray] = None) -> GateCache:
        """Noisy gate logits U_m(V) + delta, with delta = softplus(U'_m(V)) * noise.

        Args:
            views (np.ndarray): Views of shape (n, K, d)
            noise (Optional[np.ndarray], optional): Standard normal draws of shape (n, K); `None` disables
                the noise (evaluation mode). Defaults to None.

        Returns:
            GateCache: Logits and the values the backward pass needs
        """
        scores = views @ self.store.value(self.gate_w) + self.store.value(self.gate_b)[0]
        noise_pre = views @ self.store.value(self.noise_w) + self.store.value(self.noise_b)[0]
        spread = softplus(noise_pre)
        noise_std = np.where(spread > self.noise_floor, spread, 0.0)
        logits = scores + noise_std * noise if noise is not None else scores
        return GateCache(scores, noise_pre, noise_std, noise, logits)

    def gate_backward(self, views: np.ndarray, cache: GateCache, dlogits: np.ndarray) -> np.ndarray:
        """Backpropagate logit gradients (n, K) into U_m, U'_m; returns the view gradient (n, K, d)."""
        self.store.accumulate(self.gate_w, np.einsum("nk,nkd->d", dlogits, views))
        self.store.accumulate(self.gate_b, np.array([dlogits.sum()]))
        dviews = dlogits[..., None] * self.store.value(self.gate_w)
        if cache.noise is not None:
            dpre = dlogits * cache.noise * sigmoid(cache.noise_pre) * (cache.noise_std > 0)
            self.store.accumulate(self.noise_w, np.einsum("nk,nkd->d", dpre, views))
            self.store.accumulate(self.noise_b, np.array([dpre.sum()]))
            dviews = dviews + dpre[..., None] * self.store.value(self.noise_w)
        return dviews


class RelationTemps:
    """The learnable relation-aware gate temperature sigma(eps_r)."""

    GROUP = "temperature"

    def __init__(self, store: ParamStore, modalities: List[Modality], enabled: bool = True) -> None:
        """Bind to the `temperature` group of shape (|R|, 1) or (|R|, number of modalities).

        Args:
            store (ParamStore): The model store
            modalities (List[Modality]): Base modalities, in column order when temperatures are per modality
            enabled (bool, optional): Without relational temperature the gate uses temperature 1.
                Defaults to True.
        """
        self.store = store
        self.modalities = list(modalities)
        self.enabled = enabled

    @classmethod
    def create(
        cls, store: ParamStore, num_relations: int, modalities: List[Modality], per_modality: bool, enabled: bool
    ) -> "RelationTemps":
        """Add the temperature logits, initialised to 0 (temperature 0.5)."""
        columns = len(modalities) if per_modality else 1
        store.add(cls.GROUP, np.zeros((num_relations, columns)))
        return cls(store, modalities, enabled)

    def _column(self, modality: Modality) -> int:
        return self.modalities.index(modality) if self.store[self.GROUP].shape[1] > 1 else 0

    def temperature(self, relation: int, modality: Modality) -> float:
        """sigma(eps_r) in (0, 1), or 1 when relational temperature is disabled."""
        if not self.enabled:
            return 1.0
        return float(sigmoid(np.array(self.store.value(self.GROUP)[relation, self._column(modality)])))

    def backward(self, relation: int, modality: Modality, dtemperature: float) -> None:
        """Receive the gradient with respect to `temperature(relation, modality)`."""
        if not self.enabled:
            return
        tau = self.temperature(relation, modality)
        grad = np.zeros(self.store[self.GROUP].shape)
        grad[relation, self._column(modality)] = dtemperature * tau * (1.0 - tau)
        self.store.accumulate(self.GROUP, grad)


def expert_views(experts: ModalityExperts, e_m: np.ndarray, entities: Optional[np.ndarray] = None) -> ViewSet:
    """The K views V_{m,i} = W_{m,i}(e_m) of one raw vector or of a batch of raw rows.

    Args:
        experts (ModalityExperts): The modality's experts
        e_m (np.ndarray): A raw vector (d_m,) or rows (n, d_m)
        entities (Optional[np.ndarray], optional): Ids of the rows. Defaults to 0..n-1.

    Raises:
        ShapeError: Raised if the raw width does not match the experts

    Returns:
        ViewSet: Views of shape (n, K, d)
    """
    rows = np.atleast_2d(np.asarray(e_m, dtype=np.float64))
    views, _ = experts.forward(rows)
    ids = np.arange(len(rows)) if entities is None else np.asarray(entities)
    return ViewSet(modality=experts.modality, entities=ids, views=views)


def gate_weights(
    experts: ModalityExperts,
    views: ViewSet,
    relation: int,
    temps: RelationTemps,
    train_mode: bool = False,
    rng: Optional[Rng] = None,
) -> np.ndarray:
    """Relation-guided expert weights softmax((U_m(V) + delta) / sigma(eps_r)).

    Args:
        experts (ModalityExperts): The modality's experts and gate
        views (ViewSet): The views to weigh
        relation (int): The relation of the current prediction
        temps (RelationTemps): The relation temperatures
        train_mode (bool, optional): Add gating noise drawn from `rng`. Defaults to False.
        rng (Optional[Rng], optional): The noise stream, required in train mode. Defaults to None.

    Raises:
        ContractViolation: Raised in train mode without a stream

    Returns:
        np.ndarray: Non-negative weights of shape (n, K), rows summing to 1
    """
    noise = None
    if train_mode:
        if rng is None:
            raise ContractViolation("Train-mode gating needs a random stream")
        noise = rng.normal(views.views.shape[:2])
    cache = experts.gate(views.views, noise)
    return softmax_temp(cache.logits, temps.temperature(relation, views.modality))


def fuse_intra_modality(views: ViewSet, weights: np.ndarray) -> np.ndarray:
    """The weighted sum of each entity's views, sum_i w_i V_i.

    Args:
        views (ViewSet): Views of shape (n, K, d)
        weights (np.ndarray): Weights of shape (n, K) or (K,)

    Raises:
        ShapeError: Raised if there is not one weight per expert

    Returns:
        np.ndarray: Fused embeddings of shape (n, d)
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape[-1] != views.num_experts:
        raise ShapeError(f"Expected {views.num_experts} weights per entity, got shape {weights.shape}")
    weights = np.broadcast_to(weights, views.views.shape[:2])
    return np.einsum("nk,nkd->nd", weights, views.views)


def fusion_backward(views: np.ndarray, weights: np.ndarray, dfused: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Gradients of `fuse_intra_modality` with respect to the views and the weights."""
    dviews = weights[..., None] * dfused[:, None, :]
    dweights = np.einsum("nkd,nd->nk", views, dfused)
    return dviews, dweights


def tempered_softmax_backward(
    weights: np.ndarray, logits: np.ndarray, temperature: float, dweights: np.ndarray
) -> Tuple[np.ndarray, float]:
    """Gradients of softmax(logits / temperature) with respect to the logits and the temperature."""
    dscaled = softmax_backward(weights, dweights)
    dlogits = dscaled / temperature
    dtemperature = -float(np.sum(dscaled * logits)) / temperature**2
    return dlogits, dtemperature
