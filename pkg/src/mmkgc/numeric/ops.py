"""Elementary operations with hand-derived backward passes, and the two-layer ReLU network."""

from typing import NamedTuple, Tuple

import numpy as np

from .exceptions import ContractViolation, NumericError, ShapeError
from .params import ParamStore, xavier_uniform
from .rng import Rng


def relu(x: np.ndarray) -> np.ndarray:
    """max(0, x)."""
    return np.maximum(x, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """The logistic function, stable for large |x|."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    exp_x = np.exp(x[~positive])
    out[~positive] = exp_x / (1.0 + exp_x)
    return out


def softplus(x: np.ndarray) -> np.ndarray:
    """log(1 + exp(x)); its derivative is `sigmoid`."""
    return np.logaddexp(0.0, np.asarray(x, dtype=np.float64))


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Softmax along an axis, computed with max-subtraction.

    Raises:
        NumericError: Raised if any logit is non-finite
    """
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise NumericError("softmax received non-finite logits")
    shifted = np.exp(logits - logits.max(axis=axis, keepdims=True))
    return shifted / shifted.sum(axis=axis, keepdims=True)


def softmax_backward(probs: np.ndarray, dprobs: np.ndarray, axis: int = -1) -> np.ndarray:
    """Gradient with respect to the logits given the gradient with respect to the probabilities."""
    return probs * (dprobs - np.sum(probs * dprobs, axis=axis, keepdims=True))


def softmax_temp(logits: np.ndarray, temperature: float) -> np.ndarray:
    """Softmax of `logits / temperature`.

    Args:
        logits (np.ndarray): The logits (last axis is normalised)
        temperature (float): A positive temperature; smaller values sharpen the distribution

    Raises:
        ContractViolation: Raised if the temperature is not positive
        NumericError: Raised if any logit is non-finite

    Returns:
        np.ndarray: The probabilities
    """
    if not temperature > 0:
        raise ContractViolation(f"temperature must be positive, got {temperature}")
    return softmax(np.asarray(logits, dtype=np.float64) / temperature, axis=-1)


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """log(softmax(logits))."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


class MlpCache(NamedTuple):
    """Forward values the backward pass of an `Mlp` needs."""

    x: np.ndarray
    pre: np.ndarray
    act: np.ndarray


class Mlp:
    """A two-layer ReLU network y = W2 relu(W1 x + b1) + b2 over the groups `<prefix>.w1/b1/w2/b2`."""

    def __init__(self, store: ParamStore, prefix: str, in_dim: int, hidden_dim: int, out_dim: int) -> None:
        """Bind a network to its groups in a store (see `Mlp.create` to also add them).

        Args:
            store (ParamStore): The store holding the weights
            prefix (str): Group name prefix
            in_dim (int): Input width
            hidden_dim (int): Hidden width
            out_dim (int): Output width
        """
        self.store = store
        self.prefix = prefix
        self.in_dim = in_dim
        self.hidden_dim = hidden_dim
        self.out_dim = out_dim

    @classmethod
    def create(cls, store: ParamStore, prefix: str, in_dim: int, hidden_dim: int, out_dim: int, rng: Rng) -> "Mlp":
        """Add Xavier-initialised weights and zero biases to the store and bind a network to them."""
        mlp = cls(store, prefix, in_dim, hidden_dim, out_dim)
        store.add(f"{prefix}.w1", xavier_uniform(rng, (hidden_dim, in_dim), in_dim, hidden_dim))
        store.add(f"{prefix}.b1", np.zeros(hidden_dim))
        store.add(f"{prefix}.w2", xavier_uniform(rng, (out_dim, hidden_dim), hidden_dim, out_dim))
        store.add(f"{prefix}.b2", np.zeros(out_dim))
        return mlp

    @property
    def group_names(self) -> Tuple[str, ...]:
        """The four groups of the network."""
        return tuple(f"{self.prefix}.{part}" for part in ("w1", "b1", "w2", "b2"))

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, MlpCache]:
        """Apply the network to a batch of rows.

        Args:
            x (np.ndarray): Inputs of shape (n, in_dim)

        Raises:
            ShapeError: Raised if the input width does not match

        Returns:
            Tuple[np.ndarray, MlpCache]: Outputs of shape (n, out_dim) and the backward cache
        """
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"{self.prefix} expects inputs of width {self.in_dim}, got shape {x.shape}")
        pre = x @ self.store.value(f"{self.prefix}.w1").T + self.store.value(f"{self.prefix}.b1")
        act = relu(pre)
        y = act @ self.store.value(f"{self.prefix}.w2").T + self.store.value(f"{self.prefix}.b2")
        return y, MlpCache(x, pre, act)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Forward pass without the cache."""
        return self.forward(x)[0]

    def backward(self, cache: MlpCache, dy: np.ndarray, accumulate: bool = True) -> np.ndarray:
        """Backpropagate an output gradient.

        Args:
            cache (MlpCache): The cache of the matching forward pass
            dy (np.ndarray): Gradient with respect to the outputs, shape (n, out_dim)
            accumulate (bool, optional): Add weight gradients to the store; False keeps the weights frozen.
                Defaults to True.

        Returns:
            np.ndarray: Gradient with respect to the inputs, shape (n, in_dim)
        """
        w1 = self.store.value(f"{self.prefix}.w1")
        w2 = self.store.value(f"{self.prefix}.w2")
        dact = dy @ w2
        dpre = dact * (cache.pre > 0)
        if accumulate:
            self.store.accumulate(f"{self.prefix}.w2", dy.T @ cache.act)
            self.store.accumulate(f"{self.prefix}.b2", dy.sum(axis=0))
            self.store.accumulate(f"{self.prefix}.w1", dpre.T @ cache.x)
            self.store.accumulate(f"{self.prefix}.b1", dpre.sum(axis=0))
        return dpre @ w1


def mlp_apply(store: ParamStore, prefix: str, x: np.ndarray) -> np.ndarray:
    """Apply the two-layer ReLU network stored under `prefix` to one vector or a batch of rows.

    Args:
        store (ParamStore): The store holding `<prefix>.w1/b1/w2/b2`
        prefix (str): The group prefix
        x (np.ndarray): A vector of shape (in,) or rows of shape (n, in)

    Raises:
        ShapeError: Raised if the input width does not match the first layer

    Returns:
        np.ndarray: W2 max(0, W1 x + b1) + b2, with the leading shape of `x`
    """
    hidden_dim, in_dim = store[f"{prefix}.w1"].shape
    out_dim = store[f"{prefix}.w2"].shape[0]
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    y = Mlp(store, prefix, in_dim, hidden_dim, out_dim)(x[None, :] if single else x)
    return y[0] if single else y

