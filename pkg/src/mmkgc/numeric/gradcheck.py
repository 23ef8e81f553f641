"""Central finite-difference verification of analytic gradients."""

import logging
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import ContractViolation
from .params import ParamStore
from .rng import Rng

logger = logging.getLogger(__name__)

LossFn = Callable[[], float]
"""Evaluates a loss at the store's current values and adds its analytic gradient to the store's buffers."""

DEFAULT_ATOL = 1e-5
KINK_THRESHOLD = 1e-4
"""Relative errors below this are never attributed to a kink."""


class GradientSample(NamedTuple):
    """One checked scalar parameter."""

    group: str
    index: int
    analytic: float
    numeric: float
    relative_error: float


class GradientCheckReport(NamedTuple):
    """Outcome of a finite-difference check."""

    max_relative_error: float
    samples: List[GradientSample]
    skipped_kinks: int
    requested: int

    @property
    def complete(self) -> bool:
        """Whether as many parameters were checked as requested."""
        return len(self.samples) >= self.requested

    @property
    def worst(self) -> Optional[GradientSample]:
        """The sample with the largest relative error."""
        return max(self.samples, key=lambda sample: sample.relative_error, default=None)


def relative_error(analytic: float, numeric: float, atol: float = DEFAULT_ATOL) -> float:
    """|a - n| / max(|a|, |n|, atol)."""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), atol)


def gradient_check_report(
    loss_fn: LossFn,
    store: ParamStore,
    eps: float,
    sample_count: int,
    rng: Optional[Rng] = None,
    groups: Optional[Sequence[str]] = None,
    atol: float = DEFAULT_ATOL,
) -> GradientCheckReport:
    """Compare analytic gradients with central differences on randomly chosen scalar parameters.

    A perturbation that crosses a ReLU or clamp kink shows up as disagreeing one-sided differences
    which explain the error; such parameters are skipped and another one is drawn. When every parameter
    has been tried the report holds fewer samples than requested and a warning is logged.

    Args:
        loss_fn (LossFn): The deterministic loss (all stochastic draws frozen)
        store (ParamStore): The parameters, preferably 64-bit
        eps (float): Perturbation size
        sample_count (int): Number of scalar parameters to check
        rng (Optional[Rng], optional): Stream choosing the parameters. Defaults to seed 0.
        groups (Optional[Sequence[str]], optional): Restrict sampling to these groups. Defaults to all.
        atol (float, optional): Floor of the relative error denominator. Defaults to 1e-5.

    Raises:
        ContractViolation: Raised if nothing can be sampled

    Returns:
        GradientCheckReport: The per-sample comparison
    """
    names = list(groups) if groups is not None else list(store)
    sizes = np.asarray([store[name].size for name in names], dtype=np.int64)
    total = int(sizes.sum())
    if total == 0:
        raise ContractViolation("No parameters to check")
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = rng if rng is not None else Rng(0, ("gradcheck",))

    store.zero_grad()
    base_loss = float(loss_fn())
    analytic = {name: store.grads[name].copy() for name in names}

    order = rng.permutation(total)
    samples: List[GradientSample] = []
    skipped = 0
    for flat in order:
        if len(samples) >= sample_count:
            break
        position = int(np.searchsorted(offsets, flat, side="right") - 1)
        name = names[position]
        index = int(flat - offsets[position])
        values = store[name].reshape(-1)
        original = values[index].copy()

        values[index] = original + eps
        loss_plus = float(loss_fn())
        values[index] = original - eps
        loss_minus = float(loss_fn())
        values[index] = original

        numeric = (loss_plus - loss_minus) / (2.0 * eps)
        expected = float(analytic[name].reshape(-1)[index])
        error = relative_error(expected, numeric, atol)
        one_sided_gap = abs((loss_plus - base_loss) - (base_loss - loss_minus)) / eps
        if error > KINK_THRESHOLD and one_sided_gap >= abs(numeric - expected):
            skipped += 1
            continue
        samples.append(GradientSample(name, index, expected, numeric, error))

    store.zero_grad()
    max_error = max((sample.relative_error for sample in samples), default=0.0)
    report = GradientCheckReport(max_error, samples, skipped, sample_count)
    if not report.complete:
        logger.warning(
            f"Only {len(samples)} of {sample_count} requested parameters could be checked "
            f"({total} in total, {skipped} on kinks)"
        )
    logger.debug(f"Checked {len(samples)} parameters ({skipped} kinks skipped), max relative error {max_error:.3e}")
    return report


def finite_diff_check(
    loss_fn: LossFn,
    store: ParamStore,
    eps: float,
    sample_count: int,
    rng: Optional[Rng] = None,
    groups: Optional[Sequence[str]] = None,
) -> float:
    """The maximum relative error of `gradient_check_report`."""
    return gradient_check_report(loss_fn, store, eps, sample_count, rng=rng, groups=groups).max_relative_error
