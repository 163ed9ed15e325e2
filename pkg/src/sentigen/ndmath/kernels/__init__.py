"""Kernel backend selection.

Imports the compiled Cython core when it is available, otherwise falls back
to the numpy reference implementation. Set SENTIGEN_BACKEND=python to force
the fallback (used by the benchmark and by backend-equivalence tests).
"""
import os

from . import pyref

if os.environ.get("SENTIGEN_BACKEND", "").lower() in ("py", "python", "numpy"):
    impl = pyref
    BACKEND = "python"
else:
    try:
        from . import _core as impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        impl = pyref
        BACKEND = "python"

CE_FLOOR = pyref.CE_FLOOR

sigmoid_fwd = impl.sigmoid_fwd
sigmoid_bwd = impl.sigmoid_bwd
tanh_fwd = impl.tanh_fwd
tanh_bwd = impl.tanh_bwd
softmax_rows_fwd = impl.softmax_rows_fwd
softmax_rows_bwd = impl.softmax_rows_bwd
lerp_gate_fwd = impl.lerp_gate_fwd
lerp_gate_bwd = impl.lerp_gate_bwd
ce_rows_fwd = impl.ce_rows_fwd
ce_rows_bwd = impl.ce_rows_bwd
