"""Small dense numeric core: autodiff tensors, layers, Adam, gradient checks."""

from .gradcheck import GradCheckReport, grad_check
from .layers import bigru, dense, embed, glorot, gru, init_gru
from .params import ParamStore, adam_step, load_params, save_params
from .tensor import Tensor, no_grad

__all__ = [
    "GradCheckReport",
    "ParamStore",
    "Tensor",
    "adam_step",
    "bigru",
    "dense",
    "embed",
    "glorot",
    "grad_check",
    "gru",
    "init_gru",
    "load_params",
    "no_grad",
    "save_params",
]
