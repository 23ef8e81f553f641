"""Adam with bias correction over a `ParamStore`."""

import logging
from typing import Optional

import numpy as np

from .exceptions import ContractViolation, NumericError
from .params import ParamStore

logger = logging.getLogger(__name__)


def adam_step(
    store: ParamStore,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    step_index: Optional[int] = None,
) -> ParamStore:
    """Apply one Adam update to every group, then zero the gradient buffers.

    Args:
        store (ParamStore): The parameters, with gradients populated for this step
        lr (float): Learning rate
        beta1 (float, optional): Decay of the first moment. Defaults to 0.9.
        beta2 (float, optional): Decay of the second moment. Defaults to 0.999.
        eps (float, optional): Denominator offset. Defaults to 1e-8.
        step_index (Optional[int], optional): 1-based step used for bias correction. Defaults to the
            store's step counter plus one.

    Raises:
        ContractViolation: Raised if `step_index` is below 1
        NumericError: Raised naming the group if a gradient is non-finite (nothing is updated)

    Returns:
        ParamStore: The same store, updated in place
    """
    t = store.step + 1 if step_index is None else int(step_index)
    if t < 1:
        raise ContractViolation(f"Adam steps are 1-based, got step {t}")
    for name, grad in store.grads.items():
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"Non-finite gradient in group '{name}' of {store.name}")

    bias_correction1 = 1.0 - beta1**t
    bias_correction2 = 1.0 - beta2**t
    step_size = lr / bias_correction1

    for name, param in store.params.items():
        grad = store.grads[name]
        m = store.first_moments[name]
        v = store.second_moments[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * (grad * grad)
        denom = np.sqrt(v / bias_correction2) + eps
        param[...] = (param.astype(np.float64) - step_size * m / denom).astype(store.dtype)

    store.step = t
    store.zero_grad()
    return store
