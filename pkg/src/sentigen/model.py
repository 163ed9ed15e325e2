"""Dual-decoder GRU sequence-to-sequence model and its two single-decoder
baselines, as parameterized forward / loss computations on the autodiff tape.

Architecture: a shared unidirectional GRU encoder reads the post; each
decoder branch owns its additive-attention parameters, GRU, initial-state
projection and output projection, while the response embedding table is
shared. Per instance the sentiment label routes the loss through exactly
one branch via the (alpha, beta) gate, so the inactive branch's exclusive
parameters receive exactly zero gradient.

Model kinds:
  dual      two decoder branches ("pos", "neg"), label selects the branch
  s2s       one decoder ("dec"), label ignored
  s2s-sent  one decoder whose initial state mixes in a learned sentiment
            embedding passed through a dense layer
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .corpus import EOS_ID, Instance, PAD_ID, SOS_ID, Vocabulary, encode
from .errors import EmptyResponseError, LengthError, ShapeError
from .ndmath import GruParams, Tape, Tensor, gru_cell, parameter

KINDS = ("dual", "s2s", "s2s-sent")

MAX_SRC_LEN = 50
MAX_TGT_LEN = 50

INIT_SCALE = 0.08
ATTN_MASK = -1e9


@dataclass(frozen=True)
class LossGate:
    """Branch selector (alpha, beta): (1, 0) for label 1, (0, 1) for label -1."""

    alpha: float
    beta: float

    def __post_init__(self):
        if (self.alpha, self.beta) not in ((1.0, 0.0), (0.0, 1.0)):
            raise ValueError(f"invalid gate ({self.alpha}, {self.beta})")

    @classmethod
    def for_label(cls, label: int) -> "LossGate":
        if label == 1:
            return cls(1.0, 0.0)
        if label == -1:
            return cls(0.0, 1.0)
        raise ValueError(f"label must be 1 or -1, got {label}")


def _gru_layout(prefix: str, in_dim: int, hidden: int) -> list:
    shapes = []
    for gate in ("z", "r", "h"):
        shapes.append((f"{prefix}.W{gate}", (in_dim, hidden)))
        shapes.append((f"{prefix}.U{gate}", (hidden, hidden)))
        shapes.append((f"{prefix}.b{gate}", (hidden,)))
    return shapes


def param_layout(kind: str, emb_dim: int, hidden: int, post_vocab: int, resp_vocab: int) -> list:
    """Ordered (name, shape) table; the single source of truth for parameter
    creation and checkpoint validation."""
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    layout = [("emb.post", (post_vocab, emb_dim)), ("emb.resp", (resp_vocab, emb_dim))]
    layout += _gru_layout("enc", emb_dim, hidden)
    if kind == "s2s-sent":
        layout += [
            ("sent.emb", (2, hidden)),
            ("sent.W", (hidden, hidden)),
            ("sent.b", (hidden,)),
        ]
    branches = ("pos", "neg") if kind == "dual" else ("dec",)
    init_in = 2 * hidden if kind == "s2s-sent" else hidden
    for b in branches:
        layout += [
            (f"{b}.attn.Ws", (hidden, hidden)),
            (f"{b}.attn.Wh", (hidden, hidden)),
            (f"{b}.attn.v", (hidden, 1)),
            (f"{b}.init.W", (init_in, hidden)),
            (f"{b}.init.b", (hidden,)),
        ]
        layout += _gru_layout(f"{b}.gru", emb_dim + hidden, hidden)
        layout += [(f"{b}.out.W", (hidden, resp_vocab)), (f"{b}.out.b", (resp_vocab,))]
    return layout


@dataclass
class ModelParams:
    kind: str
    emb_dim: int
    hidden: int
    post_vocab: int
    resp_vocab: int
    tensors: dict  # name -> Tensor, in layout order

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def named(self) -> list:
        return list(self.tensors.values())

    def names(self) -> list:
        return list(self.tensors)

    def gru(self, prefix: str) -> GruParams:
        g = self.tensors
        return GruParams(
            g[f"{prefix}.Wz"], g[f"{prefix}.Uz"], g[f"{prefix}.bz"],
            g[f"{prefix}.Wr"], g[f"{prefix}.Ur"], g[f"{prefix}.br"],
            g[f"{prefix}.Wh"], g[f"{prefix}.Uh"], g[f"{prefix}.bh"],
        )

    @property
    def dtype(self):
        return self.tensors["emb.post"].dtype

    def branches(self) -> tuple:
        return ("pos", "neg") if self.kind == "dual" else ("dec",)

    def branch_for_label(self, label: int) -> str:
        if self.kind == "dual":
            return "pos" if label == 1 else "neg"
        return "dec"

    def copy(self) -> "ModelParams":
        tensors = {n: parameter(t.data.copy(), n) for n, t in self.tensors.items()}
        return ModelParams(self.kind, self.emb_dim, self.hidden,
                           self.post_vocab, self.resp_vocab, tensors)

    def astype(self, dtype) -> "ModelParams":
        tensors = {n: parameter(t.data.astype(dtype), n) for n, t in self.tensors.items()}
        return ModelParams(self.kind, self.emb_dim, self.hidden,
                           self.post_vocab, self.resp_vocab, tensors)

    def load_arrays(self, arrays: dict) -> None:
        for name, arr in arrays.items():
            self.tensors[name].data[...] = arr


def init_params(
    kind: str,
    post_vocab: int,
    resp_vocab: int,
    emb_dim: int = 300,
    hidden: int = 100,
    seed: int = 0,
    dtype=np.float32,
) -> ModelParams:
    """Seeded uniform [-0.08, 0.08] initialization in layout order."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in param_layout(kind, emb_dim, hidden, post_vocab, resp_vocab):
        data = rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape).astype(dtype)
        tensors[name] = parameter(data, name)
    return ModelParams(kind, emb_dim, hidden, post_vocab, resp_vocab, tensors)


# ---------------------------------------------------------------------------
# single-sequence forward ops (contract surface, batch size 1 internally)
# ---------------------------------------------------------------------------

def encode_post(tape: Tape, post: Sequence[int], params: ModelParams,
                max_src_len: int = MAX_SRC_LEN) -> tuple:
    """Run the encoder GRU over one post; returns (all states (n, H), final
    state (1, H)). The initial state is zero."""
    if not 1 <= len(post) <= max_src_len:
        raise LengthError(f"post length {len(post)} outside [1, {max_src_len}]")
    enc = params.gru("enc")
    emb = params["emb.post"]
    h = tape.constant(np.zeros((1, params.hidden), dtype=params.dtype))
    states = []
    for tok in post:
        x = tape.gather_rows(emb, [tok])
        h = gru_cell(tape, x, h, enc)
        states.append(h)
    h_all = tape.concat(states, axis=0)
    return h_all, h


def attend(tape: Tape, s_prev: Tensor, h_all: Tensor, Ws: Tensor, Wh: Tensor,
           v: Tensor) -> tuple:
    """Additive attention: e_i = v^T tanh(Ws s_prev + Wh h_i), weights are
    the softmax of e, context the weight-sum of the encoder states.

    s_prev is (1, H), h_all (n, H); returns context (1, H), weights (1, n).
    """
    pre = tape.tanh(tape.add(tape.matmul(h_all, Wh), tape.matmul(s_prev, Ws)))
    e = tape.reshape(tape.matmul(pre, v), (1, h_all.shape[0]))
    weights = tape.softmax_rows(e)
    context = tape.matmul(weights, h_all)
    return context, weights


def init_decoder_state(tape: Tape, params: ModelParams, branch: str,
                       h_last: Tensor, labels=None) -> Tensor:
    """tanh-affine projection of the encoder final state; the s2s-sent
    variant first concatenates the dense-layer sentiment representation."""
    if params.kind == "s2s-sent":
        if labels is None:
            raise ValueError("s2s-sent needs labels for the initial state")
        sent_idx = [0 if l == 1 else 1 for l in np.atleast_1d(labels)]
        hs_in = tape.gather_rows(params["sent.emb"], sent_idx)
        h_s = tape.tanh(tape.add(tape.matmul(hs_in, params["sent.W"]), params["sent.b"]))
        h_last = tape.concat([h_last, h_s], axis=1)
    return tape.tanh(
        tape.add(tape.matmul(h_last, params[f"{branch}.init.W"]), params[f"{branch}.init.b"])
    )


def decode_step(tape: Tape, branch: str, s_prev: Tensor, r_prev: int,
                h_all: Tensor, params: ModelParams) -> tuple:
    """One teacher-forcing / generation step of the selected branch.

    Attends with the previous decoder state, feeds [embedding(r_prev),
    context] to the branch GRU and softmaxes the output projection.
    Returns (s_next (1, H), vocab distribution (1, V)).
    """
    if branch not in params.branches():
        raise ShapeError(f"branch {branch!r} not in model kind {params.kind!r}")
    context, _ = attend(
        tape, s_prev, h_all,
        params[f"{branch}.attn.Ws"], params[f"{branch}.attn.Wh"], params[f"{branch}.attn.v"],
    )
    r_emb = tape.gather_rows(params["emb.resp"], [r_prev])
    x = tape.concat([r_emb, context], axis=1)
    s_next = gru_cell(tape, x, s_prev, params.gru(f"{branch}.gru"))
    logits = tape.add(tape.matmul(s_next, params[f"{branch}.out.W"]), params[f"{branch}.out.b"])
    dist = tape.softmax_rows(logits)
    return s_next, dist


# ---------------------------------------------------------------------------
# batched training path
# ---------------------------------------------------------------------------

@dataclass
class Batch:
    post_idx: np.ndarray   # (B, Tp) int64, PAD on the right
    post_lens: np.ndarray  # (B,)
    resp_in: np.ndarray    # (B, Td) SOS + response
    resp_tgt: np.ndarray   # (B, Td) response + EOS
    resp_lens: np.ndarray  # (B,) number of target steps (len + 1)
    labels: np.ndarray     # (B,) in {1, -1}

    @property
    def size(self) -> int:
        return len(self.labels)


def make_batch(instances: Sequence[Instance], post_vocab: Vocabulary,
               resp_vocab: Vocabulary, max_src_len: int = MAX_SRC_LEN,
               max_tgt_len: int = MAX_TGT_LEN) -> Batch:
    """Encode and right-pad a group of instances. Posts and responses are
    truncated to the maximum lengths (callers log truncation up front)."""
    posts, resps, labels = [], [], []
    for inst in instances:
        if not inst.response:
            raise EmptyResponseError("instance with empty response")
        posts.append(encode(inst.post[:max_src_len], post_vocab))
        resps.append(encode(inst.response[:max_tgt_len], resp_vocab))
        labels.append(inst.label)
    B = len(posts)
    post_lens = np.array([len(p) for p in posts], dtype=np.int64)
    resp_lens = np.array([len(r) + 1 for r in resps], dtype=np.int64)
    Tp, Td = post_lens.max(), resp_lens.max()
    post_idx = np.full((B, Tp), PAD_ID, dtype=np.int64)
    resp_in = np.full((B, Td), PAD_ID, dtype=np.int64)
    resp_tgt = np.full((B, Td), PAD_ID, dtype=np.int64)
    for i, (p, r) in enumerate(zip(posts, resps)):
        post_idx[i, : len(p)] = p
        resp_in[i, 0] = SOS_ID
        resp_in[i, 1 : len(r) + 1] = r
        resp_tgt[i, : len(r)] = r
        resp_tgt[i, len(r)] = EOS_ID
    return Batch(post_idx, post_lens, resp_in, resp_tgt, resp_lens,
                 np.array(labels, dtype=np.int64))


def _encode_batch(tape: Tape, params: ModelParams, batch: Batch) -> tuple:
    """Returns (h3 (B, Tp, H) all encoder states, h_last (B, H) per-example
    final state gathered at each true post length)."""
    t = tape
    B, Tp = batch.post_idx.shape
    enc = params.gru("enc")
    emb = params["emb.post"]
    h = t.constant(np.zeros((B, params.hidden), dtype=params.dtype))
    states = []
    for step in range(Tp):
        x = t.gather_rows(emb, batch.post_idx[:, step])
        h = gru_cell(t, x, h, enc)
        states.append(h)
    flat = t.concat(states, axis=0)  # (Tp*B, H), step-major
    h3 = t.transpose01(t.reshape(flat, (Tp, B, params.hidden)))
    pick = np.zeros((B, 1, Tp), dtype=params.dtype)
    pick[np.arange(B), 0, batch.post_lens - 1] = 1.0
    h_last = t.reshape(t.matmul(t.constant(pick), h3), (B, params.hidden))
    return h3, h_last


def _attend_batch(tape: Tape, params: ModelParams, branch: str, s_prev: Tensor,
                  h3: Tensor, hW3: Tensor, attn_mask: Tensor) -> tuple:
    """Batched additive attention over padded sources; padded positions get
    a large negative additive score so their weights are exactly zero."""
    t = tape
    B, Tp, H = h3.shape
    sW = t.matmul(s_prev, params[f"{branch}.attn.Ws"])
    pre = t.tanh(t.add(hW3, t.reshape(sW, (B, 1, H))))
    e = t.reshape(t.matmul(pre, params[f"{branch}.attn.v"]), (B, Tp))
    weights = t.softmax_rows(t.add(e, attn_mask))
    context = t.reshape(t.matmul(t.reshape(weights, (B, 1, Tp)), h3), (B, H))
    return context, weights


def _branch_loss_sum(tape: Tape, params: ModelParams, branch: str, h3: Tensor,
                     h_last: Tensor, attn_mask_np: np.ndarray, resp_in: np.ndarray,
                     resp_tgt: np.ndarray, resp_lens: np.ndarray,
                     labels=None) -> Tensor:
    """Teacher-forced decode of one branch over its sub-batch; returns the
    SUM over instances of mean per-token cross entropy."""
    t = tape
    k, Td = resp_in.shape
    H = params.hidden
    Tp = h3.shape[1]
    hW3 = t.matmul(h3, params[f"{branch}.attn.Wh"])
    attn_mask = t.constant(attn_mask_np)
    gru = params.gru(f"{branch}.gru")
    emb = params["emb.resp"]
    s = init_decoder_state(t, params, branch, h_last, labels)
    states = []
    for step in range(Td):
        r_emb = t.gather_rows(emb, resp_in[:, step])
        context, _ = _attend_batch(t, params, branch, s, h3, hW3, attn_mask)
        x = t.concat([r_emb, context], axis=1)
        s = gru_cell(t, x, s, gru)
        states.append(s)
    flat = t.concat(states, axis=0)  # (Td*k, H) step-major
    logits = t.add(t.matmul(flat, params[f"{branch}.out.W"]), params[f"{branch}.out.b"])
    probs = t.softmax_rows(logits)
    tgt_flat = resp_tgt.T.reshape(-1)
    ce = t.cross_entropy_rows(probs, tgt_flat)
    # step-major weights: 1/len_i inside each instance's target span, else 0
    live = np.arange(Td)[:, None] < resp_lens[None, :]
    w = (live / resp_lens[None, :]).astype(params.dtype).reshape(-1)
    return t.sum_all(t.mul(ce, t.constant(w)))


def batch_loss(tape: Tape, params: ModelParams, batch: Batch) -> Tensor:
    """Mean per-instance loss of a padded batch.

    For the dual model the batch is routed by label: positive rows go
    through the "pos" branch, negative rows through "neg", which realizes
    the (alpha, beta) gate exactly, one active branch per instance.
    """
    t = tape
    h3, h_last = _encode_batch(tape, params, batch)
    mask_np = np.where(
        np.arange(batch.post_idx.shape[1])[None, :] < batch.post_lens[:, None],
        0.0, ATTN_MASK,
    ).astype(params.dtype)

    def rows_loss(branch, rows):
        h3_b = t.gather_rows(h3, rows)
        h_last_b = t.gather_rows(h_last, rows)
        Td_b = int(batch.resp_lens[rows].max())
        return _branch_loss_sum(
            t, params, branch, h3_b, h_last_b, mask_np[rows],
            batch.resp_in[rows][:, :Td_b], batch.resp_tgt[rows][:, :Td_b],
            batch.resp_lens[rows], labels=batch.labels[rows],
        )

    if params.kind == "dual":
        total = None
        for branch, label in (("pos", 1), ("neg", -1)):
            rows = np.where(batch.labels == label)[0]
            if rows.size == 0:
                continue
            part = rows_loss(branch, rows)
            total = part if total is None else t.add(total, part)
    else:
        total = rows_loss("dec", np.arange(batch.size))
    return t.mul(total, 1.0 / batch.size)


def instance_loss(tape: Tape, inst: Instance, params: ModelParams,
                  post_vocab: Vocabulary, resp_vocab: Vocabulary,
                  max_src_len: int = MAX_SRC_LEN,
                  max_tgt_len: int = MAX_TGT_LEN) -> Tensor:
    """Loss of a single instance; teacher forcing with SOS-prefixed inputs
    and EOS-suffixed targets, mean over target positions."""
    batch = make_batch([inst], post_vocab, resp_vocab, max_src_len, max_tgt_len)
    return batch_loss(tape, params, batch)
