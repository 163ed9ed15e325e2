"""Adam training loop with gradient clipping, early stopping and seeded
reproducibility. One optimizer pass owns the parameters; validation runs on
non-recording tapes."""
from __future__ import annotations

import dataclasses
import json
import logging
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .checkpoint import save_checkpoint
from .corpus import Instance, SplitCorpus, Vocabulary
from .errors import NonFiniteError
from .model import ModelParams, batch_loss, init_params, make_batch
from .ndmath import Tape, backward

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    embedding_dim: int = 300
    hidden_dim: int = 100
    learning_rate: float = 0.0002
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 64
    max_epochs: int = 30
    patience: int = 5
    grad_clip_norm: float = 5.0
    seed: int = 0
    model_kind: str = "dual"
    max_src_len: int = 50
    max_tgt_len: int = 50

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")

    @classmethod
    def from_file(cls, path, **overrides) -> "TrainConfig":
        """Parse `key=value` lines (# comments allowed); keyword overrides
        win over file values, which win over defaults."""
        values = {}
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        casts = {"int": int, "float": float, "str": str}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key=value")
                key, _, raw = line.partition("=")
                key, raw = key.strip(), raw.strip()
                if key not in types:
                    raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = casts[str(types[key])](raw)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        return cls(
            m={n: np.zeros_like(t.data) for n, t in params.tensors.items()},
            v={n: np.zeros_like(t.data) for n, t in params.tensors.items()},
        )


def adam_step(params: ModelParams, grads: dict, state: AdamState,
              config: TrainConfig) -> tuple:
    """Bias-corrected Adam update, in place. A non-finite gradient aborts
    the step before any parameter or moment is touched."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for parameter {name!r}")
    state.step += 1
    t = state.step
    b1, b2 = config.beta1, config.beta2
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t
    for name, tensor in params.tensors.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / correction1
        v_hat = v / correction2
        tensor.data -= (config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)).astype(
            tensor.data.dtype, copy=False
        )
    return params, state


def clip_gradients(grads: dict, max_norm: float) -> float:
    """Scale all gradients in place so the global L2 norm is at most
    max_norm; returns the pre-clip norm."""
    total = 0.0
    for g in grads.values():
        total += float(np.sum(np.square(g, dtype=np.float64)))
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    valid_loss: Optional[float]
    wall_seconds: float


@dataclass
class TrainResult:
    params: ModelParams            # best-validation snapshot
    history: list = field(default_factory=list)
    first_step_loss: float = float("nan")
    stopped_early: bool = False


def _truncate(instances: Sequence[Instance], max_src: int, max_tgt: int) -> list:
    out, clipped = [], 0
    for inst in instances:
        if len(inst.post) > max_src or len(inst.response) > max_tgt:
            clipped += 1
            inst = Instance(inst.post[:max_src], inst.response[:max_tgt], inst.label)
        out.append(inst)
    if clipped:
        log.warning("truncated %d instance(s) to max lengths (%d, %d)",
                    clipped, max_src, max_tgt)
    return out


def mean_loss(params: ModelParams, instances: Sequence[Instance],
              post_vocab: Vocabulary, resp_vocab: Vocabulary,
              batch_size: int = 64) -> float:
    """Mean per-instance loss over a dataset, forward only."""
    total = 0.0
    for start in range(0, len(instances), batch_size):
        chunk = instances[start : start + batch_size]
        batch = make_batch(chunk, post_vocab, resp_vocab)
        loss = batch_loss(Tape(record=False), params, batch)
        total += float(loss.data) * len(chunk)
    return total / len(instances)


def train(corpus: SplitCorpus, post_vocab: Vocabulary, resp_vocab: Vocabulary,
          config: TrainConfig, out_dir=None) -> TrainResult:
    """Optimize a freshly initialized model on the corpus train split.

    Shuffles instances each epoch with a generator seeded from config.seed,
    clips by global gradient norm, validates every epoch and keeps the
    best-validation parameter snapshot; stops early after `patience` epochs
    without improvement. With an out_dir, writes best.ckpt plus an
    epochs.jsonl log with one record per epoch.
    """
    if not corpus.train:
        raise ValueError("empty training split")
    params = init_params(
        config.model_kind, len(post_vocab), len(resp_vocab),
        config.embedding_dim, config.hidden_dim, seed=config.seed,
    )
    state = AdamState.for_params(params)
    rng = random.Random(config.seed)

    train_insts = _truncate(corpus.train, config.max_src_len, config.max_tgt_len)
    valid_insts = _truncate(corpus.valid, config.max_src_len, config.max_tgt_len)

    result = TrainResult(params=params)
    best_valid = float("inf")
    stale = 0
    log_fh = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        log_fh = open(out_dir / "epochs.jsonl", "w", encoding="utf-8")

    order = list(range(len(train_insts)))
    try:
        for epoch in range(1, config.max_epochs + 1):
            tick = time.monotonic()
            rng.shuffle(order)
            epoch_loss = 0.0
            for batch_id, start in enumerate(range(0, len(order), config.batch_size)):
                chunk = [train_insts[i] for i in order[start : start + config.batch_size]]
                batch = make_batch(chunk, post_vocab, resp_vocab)
                tape = Tape()
                try:
                    loss = batch_loss(tape, params, batch)
                    grads = backward(loss, tape, params.named())
                    clip_gradients(grads, config.grad_clip_norm)
                    adam_step(params, grads, state, config)
                except NonFiniteError as exc:
                    raise NonFiniteError(
                        f"epoch {epoch} batch {batch_id}: {exc}"
                    ) from exc
                if np.isnan(result.first_step_loss):
                    result.first_step_loss = float(loss.data)
                epoch_loss += float(loss.data) * len(chunk)
            train_loss = epoch_loss / len(train_insts)

            valid_loss = None
            if valid_insts:
                valid_loss = mean_loss(params, valid_insts, post_vocab, resp_vocab,
                                       config.batch_size)
            stats = EpochStats(epoch, train_loss, valid_loss,
                               time.monotonic() - tick)
            result.history.append(stats)
            if log_fh is not None:
                log_fh.write(json.dumps({
                    "epoch": stats.epoch,
                    "train_loss": stats.train_loss,
                    "valid_loss": stats.valid_loss,
                    "wall_seconds": round(stats.wall_seconds, 3),
                }) + "\n")
                log_fh.flush()
            log.info("epoch %d train %.4f valid %s (%.1fs)", epoch, train_loss,
                     f"{valid_loss:.4f}" if valid_loss is not None else "-",
                     stats.wall_seconds)

            monitored = valid_loss if valid_loss is not None else train_loss
            if monitored < best_valid:
                best_valid = monitored
                result.params = params.copy()
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    result.stopped_early = True
                    break
    finally:
        if log_fh is not None:
            log_fh.close()

    if out_dir is not None:
        save_checkpoint(result.params, out_dir / "best.ckpt")
    return result
