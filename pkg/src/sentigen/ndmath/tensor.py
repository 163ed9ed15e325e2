"""Dense-tensor reverse-mode automatic differentiation on a linear tape.

A Tensor is a named or anonymous wrapper around a numpy array. Operations
are methods on a Tape; each call computes the forward value immediately and,
when the tape is recording and any input requires a gradient, appends a
record (output, parents, vjp). Because records are appended in execution
order and every output is produced by exactly one record, the tape is
already topologically sorted and `backward` is a single reverse sweep with
per-node gradient accumulation.

Elementwise nonlinearities, row softmax, the GRU gate blend and the clamped
row NLL run through the kernel backend (compiled core or numpy fallback);
everything shape-related and all matrix products are plain numpy.

Float32 is the working precision; pass float64 parameters for gradient
checking. Every forward output is checked for NaN/Inf unless CHECK_FINITE
is switched off.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import NonFiniteError, ShapeError
from . import kernels

CHECK_FINITE = True


class Tensor:
    __slots__ = ("data", "name", "requires_grad")

    def __init__(self, data, name: Optional[str] = None, requires_grad: Optional[bool] = None):
        self.data = np.asarray(data)
        self.name = name
        self.requires_grad = bool(name) if requires_grad is None else requires_grad

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{tag})"


def parameter(data, name: str) -> Tensor:
    return Tensor(data, name=name, requires_grad=True)


@dataclass
class TapeRecord:
    out: Tensor
    parents: tuple
    vjp: Callable  # grad_out -> tuple of grads aligned with parents


class Tape:
    """Execution trace for one forward pass.

    With record=False the ops still compute values (inference mode) but
    nothing is stored and backward is unavailable.
    """

    def __init__(self, record: bool = True):
        self.record = record
        self.records: list = []

    # -- plumbing ----------------------------------------------------------

    def _wrap(self, value, opname: str, parents: tuple, vjp: Callable) -> Tensor:
        if CHECK_FINITE and not np.all(np.isfinite(value)):
            raise NonFiniteError(f"non-finite values produced by op '{opname}'")
        needs = any(p.requires_grad for p in parents)
        out = Tensor(value, requires_grad=needs)
        if self.record and needs:
            self.records.append(TapeRecord(out, parents, vjp))
        return out

    def constant(self, data, dtype=None) -> Tensor:
        arr = np.asarray(data, dtype=dtype)
        return Tensor(arr, requires_grad=False)

    @staticmethod
    def _coerce(x, like: Tensor) -> Tensor:
        if isinstance(x, Tensor):
            return x
        return Tensor(np.asarray(x, dtype=like.dtype), requires_grad=False)

    # -- elementwise / broadcasting ----------------------------------------

    def add(self, a: Tensor, b) -> Tensor:
        b = self._coerce(b, a)
        value = _try(np.add, a.data, b.data)

        def vjp(g):
            return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

        return self._wrap(value, "add", (a, b), vjp)

    def sub(self, a: Tensor, b) -> Tensor:
        b = self._coerce(b, a)
        value = _try(np.subtract, a.data, b.data)

        def vjp(g):
            return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

        return self._wrap(value, "sub", (a, b), vjp)

    def mul(self, a: Tensor, b) -> Tensor:
        b = self._coerce(b, a)
        value = _try(np.multiply, a.data, b.data)
        ad, bd = a.data, b.data

        def vjp(g):
            return _unbroadcast(g * bd, a.shape), _unbroadcast(g * ad, b.shape)

        return self._wrap(value, "mul", (a, b), vjp)

    def sigmoid(self, a: Tensor) -> Tensor:
        y = kernels.sigmoid_fwd(a.data)

        def vjp(g):
            return (kernels.sigmoid_bwd(y, g),)

        return self._wrap(y, "sigmoid", (a,), vjp)

    def tanh(self, a: Tensor) -> Tensor:
        y = kernels.tanh_fwd(a.data)

        def vjp(g):
            return (kernels.tanh_bwd(y, g),)

        return self._wrap(y, "tanh", (a,), vjp)

    def lerp_gate(self, z: Tensor, h: Tensor, hbar: Tensor) -> Tensor:
        if not (z.shape == h.shape == hbar.shape):
            raise ShapeError(
                f"lerp_gate needs equal shapes, got {z.shape}, {h.shape}, {hbar.shape}"
            )
        value = kernels.lerp_gate_fwd(z.data, h.data, hbar.data)
        zd, hd, hbard = z.data, h.data, hbar.data

        def vjp(g):
            return kernels.lerp_gate_bwd(zd, hd, hbard, g)

        return self._wrap(value, "lerp_gate", (z, h, hbar), vjp)

    # -- linear algebra ------------------------------------------------------

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.data.shape[-1] != b.data.shape[-2 if b.data.ndim > 1 else 0]:
            raise ShapeError(f"matmul inner dims differ: {a.shape} @ {b.shape}")
        value = _try(np.matmul, a.data, b.data)
        ad, bd = a.data, b.data

        def vjp(g):
            ga = _unbroadcast(np.matmul(g, np.swapaxes(bd, -1, -2)), a.shape)
            gb = _unbroadcast(np.matmul(np.swapaxes(ad, -1, -2), g), b.shape)
            return ga, gb

        return self._wrap(value, "matmul", (a, b), vjp)

    # -- shape manipulation --------------------------------------------------

    def concat(self, tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
        value = _try(np.concatenate, [t.data for t in tensors], axis=axis)
        sizes = [t.data.shape[axis] for t in tensors]
        offsets = np.cumsum(sizes)[:-1]

        def vjp(g):
            return tuple(np.split(g, offsets, axis=axis))

        return self._wrap(value, "concat", tuple(tensors), vjp)

    def gather_rows(self, a: Tensor, indices) -> Tensor:
        idx = np.asarray(indices, dtype=np.int64)
        value = a.data[idx]
        shape = a.shape
        dtype = a.dtype

        def vjp(g):
            out = np.zeros(shape, dtype=dtype)
            np.add.at(out, idx, g)
            return (out,)

        return self._wrap(value, "gather_rows", (a,), vjp)

    def reshape(self, a: Tensor, shape) -> Tensor:
        value = a.data.reshape(shape)
        old = a.shape

        def vjp(g):
            return (g.reshape(old),)

        return self._wrap(value, "reshape", (a,), vjp)

    def transpose01(self, a: Tensor) -> Tensor:
        value = np.swapaxes(a.data, 0, 1)

        def vjp(g):
            return (np.swapaxes(g, 0, 1),)

        return self._wrap(value, "transpose01", (a,), vjp)

    def sum_all(self, a: Tensor) -> Tensor:
        value = np.sum(a.data)
        shape = a.shape
        dtype = a.dtype

        def vjp(g):
            return (np.full(shape, g, dtype=dtype),)

        return self._wrap(value, "sum_all", (a,), vjp)

    # -- rows ops ------------------------------------------------------------

    def softmax_rows(self, a: Tensor) -> Tensor:
        rows = a.data.reshape(-1, a.data.shape[-1])
        y2 = kernels.softmax_rows_fwd(rows)
        value = y2.reshape(a.shape)

        def vjp(g):
            g2 = g.reshape(-1, g.shape[-1])
            return (kernels.softmax_rows_bwd(y2, g2).reshape(a.shape),)

        return self._wrap(value, "softmax_rows", (a,), vjp)

    def cross_entropy_rows(self, probs: Tensor, targets) -> Tensor:
        """Per-row -log(probs[row, target]) with the probability clamped to
        at least the kernel floor; targets is a plain integer array."""
        if probs.data.ndim != 2:
            raise ShapeError(f"cross_entropy_rows expects 2-D probs, got {probs.shape}")
        tgt = np.asarray(targets, dtype=np.int64)
        if tgt.min(initial=0) < 0 or tgt.max(initial=0) >= probs.shape[1]:
            raise IndexError("target index out of range")
        value = kernels.ce_rows_fwd(probs.data, tgt)
        pd = probs.data

        def vjp(g):
            return (kernels.ce_rows_bwd(pd, tgt, g),)

        return self._wrap(value, "cross_entropy_rows", (probs,), vjp)


def backward(loss: Tensor, tape: Tape, params: Sequence[Tensor]) -> dict:
    """Reverse sweep from a scalar loss; returns name -> gradient array.

    Parameters the loss never touched get zero gradients. Each record's
    output gradient is popped once it is consumed, so peak memory stays
    proportional to the live frontier rather than the whole tape.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads: dict = {id(loss): np.ones_like(loss.data)}
    for rec in reversed(tape.records):
        g = grads.pop(id(rec.out), None)
        if g is None:
            continue
        for parent, pg in zip(rec.parents, rec.vjp(g)):
            if not parent.requires_grad:
                continue
            slot = grads.get(id(parent))
            if slot is None:
                grads[id(parent)] = np.array(pg, copy=True)
            else:
                slot += pg
    out = {}
    for p in params:
        if p.name is None:
            raise ValueError("backward: every parameter needs a name")
        out[p.name] = grads.get(id(p), np.zeros_like(p.data))
    return out


# ---------------------------------------------------------------------------
# composite ops
# ---------------------------------------------------------------------------

@dataclass
class GruParams:
    """Gate weights for one GRU: W* act on the input, U* on the state."""

    Wz: Tensor
    Uz: Tensor
    bz: Tensor
    Wr: Tensor
    Ur: Tensor
    br: Tensor
    Wh: Tensor
    Uh: Tensor
    bh: Tensor


def gru_cell(tape: Tape, x: Tensor, h_prev: Tensor, p: GruParams) -> Tensor:
    """One GRU step over a batch of row vectors.

    z = sigmoid(x Wz + h Uz + bz), r = sigmoid(x Wr + h Ur + br),
    hbar = tanh(x Wh + (r * h) Uh + bh), h' = (1 - z) * h + z * hbar.
    The update gate z scales the candidate; z = 0 carries the state through.
    """
    t = tape
    z = t.sigmoid(t.add(t.add(t.matmul(x, p.Wz), t.matmul(h_prev, p.Uz)), p.bz))
    r = t.sigmoid(t.add(t.add(t.matmul(x, p.Wr), t.matmul(h_prev, p.Ur)), p.br))
    rh = t.mul(r, h_prev)
    hbar = t.tanh(t.add(t.add(t.matmul(x, p.Wh), t.matmul(rh, p.Uh)), p.bh))
    return t.lerp_gate(z, h_prev, hbar)


def cross_entropy(dist, target: int) -> float:
    """Negative log likelihood of one probability row at the target index,
    with the picked probability clamped to at least 1e-12."""
    row = np.asarray(dist, dtype=np.float64)
    if not 0 <= target < row.shape[0]:
        raise IndexError(f"target {target} out of range for {row.shape[0]} classes")
    return float(-np.log(max(row[target], kernels.CE_FLOOR)))


def _unbroadcast(g, shape):
    """Sum a broadcast gradient back down to the original operand shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _try(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValueError as exc:
        raise ShapeError(str(exc)) from exc
