"""Named parameter groups with gradient and Adam moment buffers, and their initialisers."""

import logging
import math
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from .exceptions import ContractViolation, NumericError, ShapeError
from .rng import Rng

logger = logging.getLogger(__name__)

DTypeLike = Union[type, np.dtype]


class ParamStore:
    """Every trainable array of one optimiser, keyed by a dotted group name.

    Parameters are kept in `dtype` (32-bit for training, 64-bit for gradient checks). Gradient and
    moment buffers are 64-bit and always have the shape of their parameter.
    """

    def __init__(self, dtype: DTypeLike = np.float32, name: str = "model") -> None:
        """Create an empty store.

        Args:
            dtype (DTypeLike, optional): Storage type of the parameters. Defaults to np.float32.
            name (str, optional): Label used in log and error messages. Defaults to "model".
        """
        self.dtype = np.dtype(dtype)
        self.name = name
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}
        self.first_moments: Dict[str, np.ndarray] = {}
        self.second_moments: Dict[str, np.ndarray] = {}
        self.step = 0

    def __repr__(self) -> str:
        """The string representation of the `ParamStore` object."""
        return f"ParamStore(name={self.name}, groups={len(self.params)}, scalars={self.num_scalars()}, dtype={self.dtype})"

    def __contains__(self, name: object) -> bool:
        """Whether a group exists."""
        return name in self.params

    def __iter__(self) -> Iterator[str]:
        """Group names in creation order."""
        return iter(self.params)

    def __len__(self) -> int:
        """Number of groups."""
        return len(self.params)

    def __getitem__(self, name: str) -> np.ndarray:
        """The stored parameter array of a group."""
        return self.params[name]

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        """Register a new group.

        Args:
            name (str): The group name
            value (np.ndarray): The initial value

        Raises:
            ContractViolation: Raised if the group already exists

        Returns:
            np.ndarray: The stored array
        """
        if name in self.params:
            raise ContractViolation(f"Parameter group '{name}' already exists in {self.name}")
        stored = np.array(value, dtype=self.dtype, copy=True)
        self.params[name] = stored
        self.grads[name] = np.zeros(stored.shape, dtype=np.float64)
        self.first_moments[name] = np.zeros(stored.shape, dtype=np.float64)
        self.second_moments[name] = np.zeros(stored.shape, dtype=np.float64)
        return stored

    def value(self, name: str) -> np.ndarray:
        """A group's parameters as 64-bit values for computation."""
        return self.params[name].astype(np.float64, copy=False)

    def accumulate(self, name: str, grad: np.ndarray) -> None:
        """Add to a group's gradient buffer.

        Args:
            name (str): The group name
            grad (np.ndarray): A gradient of the group's shape

        Raises:
            ShapeError: Raised if the gradient shape differs from the parameter shape
        """
        buffer = self.grads[name]
        if np.shape(grad) != buffer.shape:
            raise ShapeError(f"Gradient for '{name}' has shape {np.shape(grad)}, expected {buffer.shape}")
        buffer += grad

    def accumulate_rows(self, name: str, rows: np.ndarray, grad: np.ndarray) -> None:
        """Scatter-add gradients into selected rows of a group (repeated rows add up)."""
        np.add.at(self.grads[name], rows, grad)

    def zero_grad(self) -> None:
        """Reset every gradient buffer to zero."""
        for buffer in self.grads.values():
            buffer.fill(0.0)

    def num_scalars(self, groups: Optional[List[str]] = None) -> int:
        """Number of scalar parameters, optionally of selected groups only."""
        names = groups if groups is not None else list(self.params)
        return int(sum(self.params[name].size for name in names))

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        """Shape of every group."""
        return {name: tuple(value.shape) for name, value in self.params.items()}

    def check_finite(self) -> None:
        """Verify every parameter is finite.

        Raises:
            NumericError: Raised naming the first group holding a non-finite value
        """
        for name, value in self.params.items():
            if not np.all(np.isfinite(value)):
                raise NumericError(f"Parameter group '{name}' of {self.name} holds non-finite values")

    def astype(self, dtype: DTypeLike) -> "ParamStore":
        """A copy with parameters stored in another type; buffers are copied too."""
        other = ParamStore(dtype=dtype, name=self.name)
        for name, value in self.params.items():
            other.add(name, value)
            other.grads[name][...] = self.grads[name]
            other.first_moments[name][...] = self.first_moments[name]
            other.second_moments[name][...] = self.second_moments[name]
        other.step = self.step
        return other

    def copy(self) -> "ParamStore":
        """A deep copy."""
        return self.astype(self.dtype)

    def equals(self, other: "ParamStore") -> bool:
        """Whether two stores hold bit-identical parameters under the same names."""
        return list(self.params) == list(other.params) and all(
            self.params[name].dtype == other.params[name].dtype and np.array_equal(self.params[name], other.params[name])
            for name in self.params
        )


def xavier_uniform(rng: Rng, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    """Uniform draws in +-sqrt(6 / (fan_in + fan_out))."""
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(shape, -bound, bound)


def gaussian_init(rng: Rng, shape: Tuple[int, ...], std: float) -> np.ndarray:
    """Zero-mean Gaussian draws."""
    return std * rng.normal(shape)


def core_tensor_init(rng: Rng, shape: Tuple[int, int, int]) -> np.ndarray:
    """Uniform draws in [-1, 1] scaled by 1/sqrt(d) for a (d, d_r, d) core tensor."""
    return rng.uniform(shape, -1.0, 1.0) / math.sqrt(shape[0])
