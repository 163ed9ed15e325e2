"""Minimal dense-tensor autodiff core: Tensor, Tape, reverse sweep, GRU cell."""
from . import kernels
from .tensor import (
    GruParams,
    Tape,
    Tensor,
    backward,
    cross_entropy,
    gru_cell,
    parameter,
)

__all__ = [
    "GruParams",
    "Tape",
    "Tensor",
    "backward",
    "cross_entropy",
    "gru_cell",
    "parameter",
    "kernels",
]
