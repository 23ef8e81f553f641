"""Expert information disentanglement.

A variational Gaussian network Q_m(V_j | V_i) per modality approximates how much one expert view
tells about another. The CLUB penalty built on Q upper-bounds the mutual information between the
views and is minimised by the experts while Q itself is fitted by maximum likelihood, alternately.
"""

import logging
import math
from typing import Dict, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from ..data.types import Modality
from ..numeric.exceptions import ContractViolation
from ..numeric.ops import Mlp, MlpCache
from ..numeric.optim import adam_step
from ..numeric.params import ParamStore
from ..numeric.rng import Rng
from .remoke import ViewSet

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)

ViewSets = Mapping[Modality, Union[ViewSet, np.ndarray]]


class QNetCache(NamedTuple):
    """Forward values of a `QNet`."""

    mean: MlpCache
    logvar: MlpCache
    raw_logvar: np.ndarray


class QNet:
    """A diagonal Gaussian q(y | x) = N(mu(x), exp(logvar(x))) with two two-layer ReLU networks."""

    def __init__(self, store: ParamStore, prefix: str, dim: int, hidden_dim: int, variance_floor: float = 1e-4) -> None:
        """Bind to the `<prefix>.mean.*` and `<prefix>.logvar.*` networks of a store.

        Args:
            store (ParamStore): The variational store
            prefix (str): Group name prefix
            dim (int): View width d
            hidden_dim (int): Hidden width
            variance_floor (float, optional): Smallest predicted variance. Defaults to 1e-4.
        """
        if not variance_floor > 0:
            raise ContractViolation("The variance floor must be positive")
        self.store = store
        self.dim = dim
        self.mean = Mlp(store, f"{prefix}.mean", dim, hidden_dim, dim)
        self.logvar = Mlp(store, f"{prefix}.logvar", dim, hidden_dim, dim)
        self.min_logvar = math.log(variance_floor)

    @classmethod
    def create(
        cls, store: ParamStore, prefix: str, dim: int, hidden_dim: int, rng: Rng, variance_floor: float = 1e-4
    ) -> "QNet":
        """Add both networks, Xavier-initialised, to the store."""
        Mlp.create(store, f"{prefix}.mean", dim, hidden_dim, dim, rng.child("mean"))
        Mlp.create(store, f"{prefix}.logvar", dim, hidden_dim, dim, rng.child("logvar"))
        return cls(store, prefix, dim, hidden_dim, variance_floor)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, QNetCache]:
        """Mean and floored log-variance of rows x, both of shape (n, d)."""
        mu, mean_cache = self.mean.forward(x)
        raw, logvar_cache = self.logvar.forward(x)
        return mu, np.maximum(raw, self.min_logvar), QNetCache(mean_cache, logvar_cache, raw)

    def backward(self, cache: QNetCache, dmu: np.ndarray, dlogvar: np.ndarray, accumulate: bool = True) -> np.ndarray:
        """Backpropagate mean and log-variance gradients; returns the gradient with respect to x."""
        dlogvar = dlogvar * (cache.raw_logvar > self.min_logvar)
        dx = self.mean.backward(cache.mean, dmu, accumulate=accumulate)
        return dx + self.logvar.backward(cache.logvar, dlogvar, accumulate=accumulate)

    def log_prob(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """log q(y_n | x_n) per row."""
        mu, logvar, _ = self.forward(np.atleast_2d(x))
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        return -0.5 * np.sum((y - mu) ** 2 * np.exp(-logvar) + logvar + LOG_2PI, axis=1)

    def negative_log_likelihood(self, x: np.ndarray, y: np.ndarray, weight: float = 1.0, accumulate: bool = True) -> float:
        """weight * sum_n -log q(y_n | x_n), with its gradient added to the store's buffers."""
        mu, logvar, cache = self.forward(x)
        precision = np.exp(-logvar)
        residual = np.asarray(y, dtype=np.float64) - mu
        loss = 0.5 * float(np.sum(residual**2 * precision + logvar + LOG_2PI))
        if accumulate:
            dmu = -weight * residual * precision
            dlogvar = 0.5 * weight * (1.0 - residual**2 * precision)
            self.backward(cache, dmu, dlogvar, accumulate=True)
        return weight * loss


def q_log_prob(q: QNet, x: np.ndarray, y: np.ndarray) -> float:
    """log q(y | x) of a diagonal Gaussian for one pair of view vectors.

    Args:
        q (QNet): The variational network
        x (np.ndarray): The conditioning view (d,)
        y (np.ndarray): The predicted view (d,)

    Returns:
        float: -1/2 sum_k [(y_k - mu_k)^2 / var_k + log var_k + log 2 pi]
    """
    return float(q.log_prob(np.asarray(x)[None, :], np.asarray(y)[None, :])[0])


def club_pair(
    q: QNet, x: np.ndarray, y: np.ndarray, negative_weight: float, need_grad: bool = False
) -> Tuple[float, Optional[np.ndarray], Optional[np.ndarray]]:
    """sum_e [log q(y_e | x_e) - negative_weight * sum_{e' != e} log q(y_e' | x_e)] over rows x, y.

    Gradients with respect to x and y flow through a frozen Q.

    Args:
        q (QNet): The variational network
        x (np.ndarray): Conditioning rows (n, d)
        y (np.ndarray): Predicted rows (n, d)
        negative_weight (float): Weight of each negative pair
        need_grad (bool, optional): Also return the gradients. Defaults to False.

    Returns:
        Tuple[float, Optional[np.ndarray], Optional[np.ndarray]]: The value and the gradients for x and y
    """
    n = len(x)
    mu, logvar, cache = q.forward(x)
    precision = np.exp(-logvar)
    y = np.asarray(y, dtype=np.float64)
    # distance[e, e'] = sum_k precision[e, k] (y[e', k] - mu[e, k])^2
    distance = precision @ (y**2).T - 2.0 * (precision * mu) @ y.T + np.sum(precision * mu**2, axis=1)[:, None]
    pair_weights = negative_weight * (1.0 - np.eye(n)) - np.eye(n)
    constant_weight = 1.0 - negative_weight * (n - 1)
    row_constants = np.sum(logvar, axis=1) + q.dim * LOG_2PI
    value = 0.5 * float(np.sum(pair_weights * distance)) - 0.5 * constant_weight * float(np.sum(row_constants))
    if not need_grad:
        return value, None, None

    ddistance = 0.5 * pair_weights
    row_sums = ddistance.sum(axis=1)[:, None]
    pulled = ddistance @ y
    dy = 2.0 * ((ddistance.T @ precision) * y - ddistance.T @ (precision * mu))
    dmu = -2.0 * precision * (pulled - row_sums * mu)
    dprecision = ddistance @ y**2 - 2.0 * mu * pulled + row_sums * mu**2
    dlogvar = -precision * dprecision - 0.5 * constant_weight
    dx = q.backward(cache, dmu, dlogvar, accumulate=False)
    return value, dx, dy


def _views(value: Union[ViewSet, np.ndarray]) -> np.ndarray:
    return value.views if isinstance(value, ViewSet) else np.asarray(value, dtype=np.float64)


def club_objective(
    qnets: Mapping[Modality, QNet], view_sets: ViewSets, normalize: bool = True, need_grad: bool = False
) -> Tuple[float, Dict[Modality, np.ndarray]]:
    """The CLUB penalty over every ordered expert pair of every modality, and its view gradients.

    Args:
        qnets (Mapping[Modality, QNet]): Variational network per modality
        view_sets (ViewSets): Views (n_B, K, d) of the batch entities per modality
        normalize (bool, optional): Average the negative term over the n_B - 1 other entities; otherwise
            sum it. Defaults to True.
        need_grad (bool, optional): Compute the view gradients. Defaults to False.

    Raises:
        ContractViolation: Raised if a batch holds fewer than two entities

    Returns:
        Tuple[float, Dict[Modality, np.ndarray]]: The penalty and the gradient per modality (empty
            without `need_grad`)
    """
    total = 0.0
    grads: Dict[Modality, np.ndarray] = {}
    for modality, value in view_sets.items():
        views = _views(value)
        n, k = views.shape[:2]
        if n < 2:
            raise ContractViolation("The CLUB penalty needs at least two entities per batch")
        if need_grad:
            grads[modality] = np.zeros_like(views)
        if k < 2:
            continue
        scale = 1.0 / k**2
        negative_weight = 1.0 / (n - 1) if normalize else 1.0
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                pair, dx, dy = club_pair(qnets[modality], views[:, i], views[:, j], negative_weight, need_grad)
                total += scale * pair
                if need_grad and dx is not None and dy is not None:
                    grads[modality][:, i] += scale * dx
                    grads[modality][:, j] += scale * dy
    return total, grads


def club_loss(qnets: Mapping[Modality, QNet], view_sets: ViewSets, normalize: bool = True) -> float:
    """The CLUB penalty (1/K^2) sum_m sum_e sum_{i != j} [log Q(V_j^e | V_i^e) - mean_{e' != e} log Q(V_j^e' | V_i^e)].

    Raises:
        ContractViolation: Raised if a batch holds fewer than two entities
    """
    return club_objective(qnets, view_sets, normalize=normalize)[0]


def exid_loss(qnets: Mapping[Modality, QNet], view_sets: ViewSets, accumulate: bool = False) -> float:
    """Mean negative log-likelihood of the positive view pairs under Q.

    Args:
        qnets (Mapping[Modality, QNet]): Variational network per modality
        view_sets (ViewSets): Views (n_B, K, d) per modality, treated as constants
        accumulate (bool, optional): Add the gradient to the variational store. Defaults to False.

    Returns:
        float: -(1 / (K (K - 1) n_B)) sum_m sum_e sum_{i != j} log Q(V_j^e | V_i^e)
    """
    total = 0.0
    for modality, value in view_sets.items():
        views = _views(value)
        n, k = views.shape[:2]
        if k < 2 or n == 0:
            continue
        weight = 1.0 / (k * (k - 1) * n)
        for i in range(k):
            for j in range(k):
                if i != j:
                    total += qnets[modality].negative_log_likelihood(views[:, i], views[:, j], weight, accumulate)
    return total


def gaussian_mi_oracle(rho: float) -> float:
    """Mutual information -1/2 log(1 - rho^2) of a bivariate unit Gaussian, in nats.

    Raises:
        ContractViolation: Raised if |rho| >= 1
    """
    if not abs(rho) < 1:
        raise ContractViolation(f"Correlation must lie in (-1, 1), got {rho}")
    return -0.5 * math.log(1.0 - rho**2)


def sample_bivariate_gaussian(rng: Rng, rho: float, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Draw `count` pairs of a bivariate unit Gaussian with correlation rho, as (count, 1) columns."""
    if not abs(rho) < 1:
        raise ContractViolation(f"Correlation must lie in (-1, 1), got {rho}")
    x = rng.normal((count, 1))
    y = rho * x + math.sqrt(1.0 - rho**2) * rng.normal((count, 1))
    return x, y


def fit_qnet(
    q: QNet,
    x: np.ndarray,
    y: np.ndarray,
    steps: int = 2000,
    lr: float = 1e-2,
    batch_size: int = 256,
    rng: Optional[Rng] = None,
) -> float:
    """Fit Q to paired samples by minibatch maximum likelihood with Adam.

    Args:
        q (QNet): The network, trained in place
        x (np.ndarray): Conditioning samples (n, d)
        y (np.ndarray): Predicted samples (n, d)
        steps (int, optional): Adam steps. Defaults to 2000.
        lr (float, optional): Learning rate. Defaults to 1e-2.
        batch_size (int, optional): Pairs per step. Defaults to 256.
        rng (Optional[Rng], optional): Minibatch stream. Defaults to seed 0.

    Returns:
        float: The mean negative log-likelihood over all samples after fitting
    """
    rng = rng if rng is not None else Rng(0, ("fit-qnet",))
    size = min(batch_size, len(x))
    for _ in range(steps):
        rows = rng.choice(len(x), size)
        q.negative_log_likelihood(x[rows], y[rows], weight=1.0 / size)
        adam_step(q.store, lr)
    return -float(np.mean(q.log_prob(x, y)))


def club_pair_estimate(q: QNet, x: np.ndarray, y: np.ndarray, normalize: bool = True) -> float:
    """The CLUB estimate of I(X; Y) on paired samples: mean positive minus mean negative log-likelihood."""
    n = len(x)
    if n < 2:
        raise ContractViolation("The CLUB estimate needs at least two samples")
    value, _, _ = club_pair(q, x, y, 1.0 / (n - 1) if normalize else 1.0)
    return value / n
