"""Numpy reference implementation of the hot elementwise kernels.

The compiled `_core` extension provides the same function set with fused
single-pass loops; this module is the always-available fallback and the
semantic reference the extension is tested against. Matrix products are not
here on purpose: BLAS already owns those in both backends.

All forward kernels return freshly allocated arrays of the input dtype and
all 2-D kernels expect C-contiguous rows.
"""
import numpy as np

CE_FLOOR = 1e-12


def sigmoid_fwd(x):
    out = np.empty_like(x)
    np.negative(x, out=out)
    np.exp(out, out=out)
    out += 1.0
    np.reciprocal(out, out=out)
    return out


def sigmoid_bwd(y, gy):
    return gy * y * (1.0 - y)


def tanh_fwd(x):
    return np.tanh(x)


def tanh_bwd(y, gy):
    return gy * (1.0 - y * y)


def softmax_rows_fwd(x):
    """Row softmax with max subtraction; x is 2-D (rows, classes)."""
    shifted = x - x.max(axis=1, keepdims=True)
    np.exp(shifted, out=shifted)
    shifted /= shifted.sum(axis=1, keepdims=True)
    return shifted


def softmax_rows_bwd(y, gy):
    dot = np.sum(gy * y, axis=1, keepdims=True)
    return y * (gy - dot)


def lerp_gate_fwd(z, h, hbar):
    """Gated blend (1 - z) * h + z * hbar used by the GRU state update."""
    return h + z * (hbar - h)


def lerp_gate_bwd(z, h, hbar, g):
    gz = g * (hbar - h)
    gh = g * (1.0 - z)
    ghbar = g * z
    return gz, gh, ghbar


def ce_rows_fwd(probs, targets):
    """Per-row negative log likelihood with a floor clamp on the picked
    probability; probs is 2-D, targets a 1-D integer array."""
    picked = probs[np.arange(probs.shape[0]), targets]
    return -np.log(np.maximum(picked, CE_FLOOR)).astype(probs.dtype, copy=False)


def ce_rows_bwd(probs, targets, g):
    rows = np.arange(probs.shape[0])
    picked = np.maximum(probs[rows, targets], CE_FLOOR)
    gp = np.zeros_like(probs)
    gp[rows, targets] = -g / picked
    return gp
