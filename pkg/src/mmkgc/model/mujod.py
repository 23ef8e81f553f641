"""Multi-modal joint decision: attention fusion into a joint modality and per-modality Tucker scoring."""

import logging
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..data.types import Modality
from ..numeric.exceptions import ContractViolation, ShapeError
from ..numeric.ops import Mlp, MlpCache, log_softmax, softmax, softmax_backward
from ..numeric.params import ParamStore, core_tensor_init, xavier_uniform
from ..numeric.rng import Rng

logger = logging.getLogger(__name__)


def tucker_score(h_emb: np.ndarray, r_emb: np.ndarray, t_emb: np.ndarray, core: np.ndarray) -> float:
    """The trilinear contraction sum_{i,k,j} W[i, k, j] h_i r_k t_j.

    Args:
        h_emb (np.ndarray): Head embedding (d,)
        r_emb (np.ndarray): Relation embedding (d_r,)
        t_emb (np.ndarray): Tail embedding (d,)
        core (np.ndarray): Core tensor (d, d_r, d)

    Raises:
        ShapeError: Raised if an embedding does not match the core tensor

    Returns:
        float: The score
    """
    core = np.asarray(core, dtype=np.float64)
    if core.ndim != 3 or np.shape(h_emb) != (core.shape[0],) or np.shape(r_emb) != (core.shape[1],):
        raise ShapeError(f"Embeddings {np.shape(h_emb)}, {np.shape(r_emb)} do not match a core of shape {core.shape}")
    if np.shape(t_emb) != (core.shape[2],):
        raise ShapeError(f"Tail embedding {np.shape(t_emb)} does not match a core of shape {core.shape}")
    return float(np.einsum("ikj,i,k,j->", core, h_emb, r_emb, t_emb))


def relation_matrix(core: np.ndarray, r_emb: np.ndarray) -> np.ndarray:
    """The core tensor contracted with a relation embedding, W_r[i, j] = sum_k W[i, k, j] r_k."""
    return np.einsum("ikj,k->ij", core, r_emb)


def cross_entropy(scores: np.ndarray, gold: np.ndarray) -> Tuple[float, np.ndarray]:
    """Summed softmax cross-entropy of rows of scores against gold columns.

    Args:
        scores (np.ndarray): Scores of shape (b, N)
        gold (np.ndarray): Gold column per row, shape (b,)

    Returns:
        Tuple[float, np.ndarray]: The loss and its gradient with respect to the scores
    """
    log_probs = log_softmax(scores, axis=1)
    rows = np.arange(len(gold))
    loss = -float(log_probs[rows, gold].sum())
    dscores = np.exp(log_probs)
    dscores[rows, gold] -= 1.0
    return loss, dscores


class ModalityScorer:
    """Relation table r_m and core tensor W_m of one scoring modality."""

    def __init__(self, store: ParamStore, modality: Modality) -> None:
        """Bind to the groups `relation.<m>` and `core.<m>` of a store."""
        self.store = store
        self.modality = modality
        self.relation_group = f"relation.{modality.value}"
        self.core_group = f"core.{modality.value}"

    @classmethod
    def create(
        cls, store: ParamStore, modality: Modality, num_relations: int, dim: int, relation_dim: int, rng: Rng
    ) -> "ModalityScorer":
        """Add a Xavier-initialised relation table and a uniform core tensor to the store."""
        store.add(f"relation.{modality.value}", xavier_uniform(rng, (num_relations, relation_dim), relation_dim, dim))
        store.add(f"core.{modality.value}", core_tensor_init(rng.child("core"), (dim, relation_dim, dim)))
        return cls(store, modality)

    @property
    def core(self) -> np.ndarray:
        """W_m, shape (d, d_r, d)."""
        return self.store.value(self.core_group)

    def relation(self, relation: int) -> np.ndarray:
        """r_m of one relation."""
        return self.store.value(self.relation_group)[relation]

    def relation_matrix(self, relation: int) -> np.ndarray:
        """W_m contracted with the relation embedding, shape (d, d)."""
        return relation_matrix(self.core, self.relation(relation))

    def relation_matrix_backward(self, relation: int, dmatrix: np.ndarray) -> None:
        """Accumulate the gradient of `relation_matrix(relation)` into the core and the relation row."""
        self.store.accumulate(self.core_group, np.einsum("ij,k->ikj", dmatrix, self.relation(relation)))
        self.store.accumulate_rows(self.relation_group, np.array([relation]), np.einsum("ikj,ij->k", self.core, dmatrix)[None, :])

    def tail_scores(self, embeddings: np.ndarray, heads: np.ndarray, relation: int) -> np.ndarray:
        """Scores of (h, r, e) for every candidate e, shape (len(heads), |E|)."""
        return embeddings[heads] @ self.relation_matrix(relation) @ embeddings.T

    def head_scores(self, embeddings: np.ndarray, relation: int, tails: np.ndarray) -> np.ndarray:
        """Scores of (e, r, t) for every candidate e, shape (len(tails), |E|)."""
        return embeddings[tails] @ self.relation_matrix(relation).T @ embeddings.T

    def loss(
        self, embeddings: np.ndarray, heads: np.ndarray, relation: int, tails: np.ndarray, backward: bool = True
    ) -> Tuple[float, Optional[np.ndarray]]:
        """Tail and head prediction cross-entropy over all entities for triples sharing one relation.

        Args:
            embeddings (np.ndarray): Entity embeddings under this relation, shape (|E|, d)
            heads (np.ndarray): Head ids of the triples
            relation (int): The shared relation
            tails (np.ndarray): Tail ids of the triples
            backward (bool, optional): Accumulate parameter gradients and return the embedding gradient.
                Defaults to True.

        Returns:
            Tuple[float, Optional[np.ndarray]]: The summed loss and the gradient with respect to `embeddings`
        """
        matrix = self.relation_matrix(relation)
        head_rows, tail_rows = embeddings[heads], embeddings[tails]
        tail_queries = head_rows @ matrix
        head_queries = tail_rows @ matrix.T
        tail_loss, dtail_scores = cross_entropy(tail_queries @ embeddings.T, tails)
        head_loss, dhead_scores = cross_entropy(head_queries @ embeddings.T, heads)
        if not backward:
            return tail_loss + head_loss, None

        dembeddings = dtail_scores.T @ tail_queries + dhead_scores.T @ head_queries
        dtail_queries = dtail_scores @ embeddings
        dhead_queries = dhead_scores @ embeddings
        np.add.at(dembeddings, heads, dtail_queries @ matrix.T)
        np.add.at(dembeddings, tails, dhead_queries @ matrix)
        self.relation_matrix_backward(relation, head_rows.T @ dtail_queries + dhead_queries.T @ tail_rows)
        return tail_loss + head_loss, dembeddings


class FusionCache(NamedTuple):
    """Forward values of a joint fusion."""

    modalities: List[Modality]
    projected: np.ndarray
    caches: List[Optional[MlpCache]]
    weights: np.ndarray


class JointFusion:
    """Shared attention vector W_attn and the projections P_m building the joint modality."""

    ATTENTION = "fusion.attention"

    def __init__(
        self,
        store: ParamStore,
        modalities: Sequence[Modality],
        dim: int,
        hidden_dim: int,
        project_structure: bool = True,
        adaptive: bool = True,
    ) -> None:
        """Bind to `fusion.attention` and the `projection.<m>.*` networks of a store.

        Args:
            store (ParamStore): The model store
            modalities (Sequence[Modality]): The fused base modalities
            dim (int): Embedding width d
            hidden_dim (int): Hidden width of the projections
            project_structure (bool, optional): Project the structure modality too; otherwise it enters the
                fusion unchanged. Defaults to True.
            adaptive (bool, optional): Attention weights; otherwise every modality weighs the same.
                Defaults to True.
        """
        self.store = store
        self.modalities = list(modalities)
        self.dim = dim
        self.adaptive = adaptive
        self.projections: Dict[Modality, Optional[Mlp]] = {
            m: None
            if m == Modality.STRUCTURE and not project_structure
            else Mlp(store, f"projection.{m.value}", dim, hidden_dim, dim)
            for m in self.modalities
        }

    @classmethod
    def create(
        cls,
        store: ParamStore,
        modalities: Sequence[Modality],
        dim: int,
        hidden_dim: int,
        rng: Rng,
        project_structure: bool = True,
        adaptive: bool = True,
    ) -> "JointFusion":
        """Add the attention vector and the projections to the store."""
        store.add(cls.ATTENTION, xavier_uniform(rng, (dim,), dim, 1))
        for m in modalities:
            if m != Modality.STRUCTURE or project_structure:
                Mlp.create(store, f"projection.{m.value}", dim, hidden_dim, dim, rng.child(m.value))
        return cls(store, modalities, dim, hidden_dim, project_structure, adaptive)

    def forward(self, embeddings: Mapping[Modality, np.ndarray]) -> Tuple[np.ndarray, FusionCache]:
        """Fuse relation-guided embeddings (n, d) of every base modality into joint embeddings (n, d).

        Raises:
            ContractViolation: Raised if fewer than two modalities are given
        """
        modalities = [m for m in self.modalities if m in embeddings]
        if len(modalities) < 2:
            raise ContractViolation("Joint fusion needs at least two modalities")
        projected, caches = [], []
        for m in modalities:
            projection = self.projections[m]
            if projection is None:
                projected.append(np.asarray(embeddings[m], dtype=np.float64))
                caches.append(None)
            else:
                output, cache = projection.forward(embeddings[m])
                projected.append(output)
                caches.append(cache)
        stacked = np.stack(projected)
        if self.adaptive:
            weights = softmax(np.einsum("mnd,d->nm", stacked, self.store.value(self.ATTENTION)), axis=1)
        else:
            weights = np.full((stacked.shape[1], len(modalities)), 1.0 / len(modalities))
        joint = np.einsum("nm,mnd->nd", weights, stacked)
        return joint, FusionCache(modalities, stacked, caches, weights)

    def backward(self, cache: FusionCache, djoint: np.ndarray) -> Dict[Modality, np.ndarray]:
        """Backpropagate the joint embedding gradient; returns the gradient of each input modality."""
        dprojected = cache.weights.T[..., None] * djoint[None, :, :]
        if self.adaptive:
            dweights = np.einsum("mnd,nd->nm", cache.projected, djoint)
            dscores = softmax_backward(cache.weights, dweights, axis=1)
            attention = self.store.value(self.ATTENTION)
            self.store.accumulate(self.ATTENTION, np.einsum("nm,mnd->d", dscores, cache.projected))
            dprojected = dprojected + dscores.T[..., None] * attention
        grads: Dict[Modality, np.ndarray] = {}
        for position, m in enumerate(cache.modalities):
            projection = self.projections[m]
            mlp_cache = cache.caches[position]
            if projection is None or mlp_cache is None:
                grads[m] = dprojected[position]
            else:
                grads[m] = projection.backward(mlp_cache, dprojected[position])
        return grads


def fuse_joint(modal_embeddings: Mapping[Modality, np.ndarray], fusion: JointFusion) -> np.ndarray:
    """The joint embedding sum_m alpha_m P_m(e_m) of one entity (vectors) or of rows.

    Args:
        modal_embeddings (Mapping[Modality, np.ndarray]): Relation-guided embedding per modality
        fusion (JointFusion): The attention vector and projections

    Raises:
        ContractViolation: Raised if fewer than two modalities are given

    Returns:
        np.ndarray: The joint embedding, with the leading shape of the inputs
    """
    single = all(np.ndim(value) == 1 for value in modal_embeddings.values())
    rows = {m: np.atleast_2d(np.asarray(value, dtype=np.float64)) for m, value in modal_embeddings.items()}
    joint, _ = fusion.forward(rows)
    return joint[0] if single else joint


def fusion_weights(modal_embeddings: Mapping[Modality, np.ndarray], fusion: JointFusion) -> np.ndarray:
    """The modality weights alpha of rows, shape (n, number of modalities)."""
    rows = {m: np.atleast_2d(np.asarray(value, dtype=np.float64)) for m, value in modal_embeddings.items()}
    return fusion.forward(rows)[1].weights
