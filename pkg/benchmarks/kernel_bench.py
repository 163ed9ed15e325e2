#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy fallback.

Times each elementwise kernel on training-shaped arrays and a full
forward+backward+Adam step of the dual-decoder model with either backend.
Run from the repo root:

    python benchmarks/kernel_bench.py [--steps 30]
"""
import argparse
import time

import numpy as np

from sentigen.ndmath.kernels import pyref

try:
    from sentigen.ndmath.kernels import _core
except ImportError:
    _core = None


def time_call(fn, *args, repeat=200):
    fn(*args)  # warm up
    tick = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - tick) / repeat


def bench_kernels():
    rng = np.random.default_rng(0)
    b, h, v = 64, 100, 30004
    cases = [
        ("sigmoid_fwd (64x100)", "sigmoid_fwd", (rng.standard_normal((b, h), dtype=np.float32),)),
        ("tanh_fwd (64x100)", "tanh_fwd", (rng.standard_normal((b, h), dtype=np.float32),)),
        ("lerp_gate_fwd (64x100)", "lerp_gate_fwd",
         tuple(rng.random((b, h), dtype=np.float32) for _ in range(3))),
        ("softmax_rows_fwd (64x30004)", "softmax_rows_fwd",
         (rng.standard_normal((b, v), dtype=np.float32),)),
        ("softmax_rows_fwd (64x50)", "softmax_rows_fwd",
         (rng.standard_normal((b, 50), dtype=np.float32),)),
        ("ce_rows_fwd (64x30004)", "ce_rows_fwd",
         (pyref.softmax_rows_fwd(rng.standard_normal((b, v), dtype=np.float32)),
          rng.integers(0, v, size=b))),
    ]
    print(f"{'kernel':34s} {'numpy':>10s} {'cython':>10s} {'speedup':>8s}")
    for name, fn_name, args in cases:
        t_py = time_call(getattr(pyref, fn_name), *args)
        if _core is None:
            print(f"{name:34s} {t_py*1e6:9.1f}us {'n/a':>10s}")
            continue
        t_cy = time_call(getattr(_core, fn_name), *args)
        print(f"{name:34s} {t_py*1e6:9.1f}us {t_cy*1e6:9.1f}us {t_py/t_cy:7.2f}x")


def bench_train_step(steps: int):
    from sentigen.corpus import RESERVED, Instance, Vocabulary
    from sentigen.model import batch_loss, init_params, make_batch
    from sentigen.ndmath import Tape, backward
    from sentigen.train import AdamState, TrainConfig, adam_step, clip_gradients

    rng = np.random.default_rng(1)
    vocab = Vocabulary(list(RESERVED) + [f"w{i}" for i in range(500)])
    insts = []
    for i in range(64):
        post = tuple(f"w{j}" for j in rng.integers(0, 500, size=10))
        resp = tuple(f"w{j}" for j in rng.integers(0, 500, size=12))
        insts.append(Instance(post, resp, 1 if i % 2 == 0 else -1))
    params = init_params("dual", len(vocab), len(vocab), emb_dim=128, hidden=100, seed=0)
    config = TrainConfig(embedding_dim=128,
                         learning_rate=1e-3, batch_size=64, max_epochs=1)
    state = AdamState.for_params(params)
    batch = make_batch(insts, vocab, vocab)

    def step():
        tape = Tape()
        loss = batch_loss(tape, params, batch)
        grads = backward(loss, tape, params.named())
        clip_gradients(grads, config.grad_clip_norm)
        adam_step(params, grads, state, config)

    step()  # warm up
    tick = time.perf_counter()
    for _ in range(steps):
        step()
    per = (time.perf_counter() - tick) / steps
    return per


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=30, help="training steps to time")
    args = ap.parse_args()

    from sentigen.ndmath import kernels
    print(f"active backend: {kernels.BACKEND}")
    print()
    bench_kernels()
    print()
    per = bench_train_step(args.steps)
    print(f"dual-decoder train step (batch 64, emb 128, hidden 100, vocab 504): "
          f"{per*1e3:.1f} ms with backend={kernels.BACKEND}")
    print("rerun with SENTIGEN_BACKEND=python to time the fallback end to end")


if __name__ == "__main__":
    main()
