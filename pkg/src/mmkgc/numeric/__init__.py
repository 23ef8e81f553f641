"""Numeric substrate: parameter stores, seeded streams, two-layer ReLU networks, Adam and gradient checks."""

from . import exceptions
from .checkpoint import load_checkpoint, restore_store, save_checkpoint, store_groups
from .gradcheck import GradientCheckReport, finite_diff_check, gradient_check_report
from .ops import Mlp, log_softmax, mlp_apply, sigmoid, softmax, softmax_backward, softmax_temp, softplus
from .optim import adam_step
from .params import ParamStore
from .rng import Rng, gaussian_sample

__all__ = [
    "GradientCheckReport",
    "Mlp",
    "ParamStore",
    "Rng",
    "adam_step",
    "exceptions",
    "finite_diff_check",
    "gaussian_sample",
    "gradient_check_report",
    "load_checkpoint",
    "log_softmax",
    "mlp_apply",
    "restore_store",
    "save_checkpoint",
    "sigmoid",
    "softmax",
    "softmax_backward",
    "softmax_temp",
    "softplus",
    "store_groups",
]
