"""Seeded, splittable random streams."""

import zlib
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import ContractViolation

Shape = Union[int, Tuple[int, ...]]


class Rng:
    """A random stream derived from a 64-bit seed and a purpose path.

    Streams for different purposes (gating noise, imputation, batching, ...) are independent, so
    drawing from one never changes the draws of another. Identical seed, purpose and draw sequence
    give identical outputs.
    """

    def __init__(self, seed: int, purpose: Sequence[str] = ()) -> None:
        """Create a stream.

        Args:
            seed (int): The root seed, 0 <= seed < 2**64
            purpose (Sequence[str], optional): The purpose path below the root. Defaults to the root stream.
        """
        if not 0 <= int(seed) < 2**64:
            raise ContractViolation(f"Seed {seed} is outside [0, 2**64)")
        self.seed = int(seed)
        self.purpose: Tuple[str, ...] = tuple(purpose)
        spawn_key = tuple(zlib.crc32(part.encode("utf-8")) for part in self.purpose)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=spawn_key)
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    def __repr__(self) -> str:
        """The string representation of the `Rng` object."""
        return f"Rng(seed={self.seed}, purpose={'/'.join(self.purpose) or '<root>'})"

    def child(self, purpose: str) -> "Rng":
        """An independent stream for a sub-purpose (does not consume draws from this stream)."""
        return Rng(self.seed, self.purpose + (purpose,))

    @property
    def state(self) -> Dict[str, Any]:
        """The bit generator state, restorable with `Rng.state = ...`."""
        return dict(self._generator.bit_generator.state)

    @state.setter
    def state(self, value: Dict[str, Any]) -> None:
        self._generator.bit_generator.state = value

    def normal(self, shape: Shape, loc: float = 0.0, scale: float = 1.0) -> np.ndarray:
        """Gaussian draws in 64-bit."""
        return self._generator.normal(loc, scale, size=shape)

    def uniform(self, shape: Shape, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """Uniform draws in [low, high)."""
        return self._generator.uniform(low, high, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        """A random permutation of 0..n-1."""
        return self._generator.permutation(n)

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        """Draw `size` indices from 0..n-1."""
        return self._generator.choice(n, size=size, replace=replace)

    def integers(self, low: int, high: int, size: Optional[Shape] = None) -> Any:
        """Integers in [low, high)."""
        return self._generator.integers(low, high, size=size)


def gaussian_sample(rng: Rng, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Draw `mean + std * z` with `z` standard normal.

    Args:
        rng (Rng): The stream to draw from
        mean (np.ndarray): The mean vector
        std (np.ndarray): The element-wise standard deviation, non-negative

    Raises:
        ContractViolation: Raised if any std is negative

    Returns:
        np.ndarray: The sample
    """
    mean = np.asarray(mean, dtype=np.float64)
    std = np.broadcast_to(np.asarray(std, dtype=np.float64), mean.shape)
    if np.any(std < 0):
        raise ContractViolation("Gaussian standard deviations must be non-negative")
    return mean + std * rng.normal(mean.shape)
