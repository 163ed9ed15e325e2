"""Greedy decoding from a trained model for a requested sentiment label."""
from __future__ import annotations

import json
from typing import Optional, Sequence

import numpy as np

from .corpus import EOS_ID, SOS_ID, Vocabulary, decode as decode_ids, encode
from .lexicon import SentimentLexicon, score_sentence
from .model import MAX_SRC_LEN, ModelParams, decode_step, encode_post, init_decoder_state
from .ndmath import Tape

GENERATION_HEADER = "# sentigen generations v1: post, label, response, sent_score"


def greedy_decode(post: Sequence, label: int, params: ModelParams,
                  post_vocab: Vocabulary, resp_vocab: Vocabulary,
                  max_len: int = 50) -> list:
    """Argmax decoding (ties resolved to the lowest index) until EOS or
    max_len emitted tokens; SOS/EOS never appear in the output.

    For the dual model the label picks the decoder branch, for s2s-sent it
    picks the sentiment embedding, and plain s2s ignores it. Only the
    selected branch's parameters are ever evaluated.
    """
    tape = Tape(record=False)
    post_ids = encode(post[:MAX_SRC_LEN], post_vocab)
    h_all, h_last = encode_post(tape, post_ids, params)
    branch = params.branch_for_label(label)
    s = init_decoder_state(tape, params, branch, h_last, labels=[label])
    out = []
    token = SOS_ID
    for _ in range(max_len):
        s, dist = decode_step(tape, branch, s, token, h_all, params)
        token = int(np.argmax(dist.data[0]))  # argmax takes the first max
        if token == EOS_ID:
            break
        out.append(token)
    return decode_ids(out, resp_vocab)


def batch_generate(posts: Sequence, labels: Sequence[int], params: ModelParams,
                   post_vocab: Vocabulary, resp_vocab: Vocabulary,
                   lex: Optional[SentimentLexicon] = None, out_path=None,
                   max_len: int = 50) -> list:
    """Generate one response per (post, label) pair, preserving order.

    Returns the record list and, when out_path is given, writes JSON lines
    with keys post/label/response/sent_score behind one '#' header line.
    """
    if len(posts) != len(labels):
        raise ValueError(f"{len(posts)} posts but {len(labels)} labels")
    records = []
    for post, label in zip(posts, labels):
        response = greedy_decode(post, label, params, post_vocab, resp_vocab, max_len)
        score = score_sentence(response, lex).score if lex is not None else 0
        records.append({
            "post": list(post),
            "label": int(label),
            "response": response,
            "sent_score": score,
        })
    if out_path is not None:
        write_generations(records, out_path)
    return records


def write_generations(records: Sequence[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(GENERATION_HEADER + "\n")
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n")


def read_generations(path) -> list:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            records.append(json.loads(line))
    return records
