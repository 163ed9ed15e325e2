"""Triple mining, instance rewriting, strict post-disjoint splitting and
vocabulary construction for (post, response) conversation data.

Pipeline: raw pairs are grouped by exact post equality, every positive
response is cross-paired with every negative response of the same post
(both strictly longer than ``min_len`` tokens) to form triples, each triple
is rewritten into a (post, response, +1) and a (post, response, -1)
instance, and the instances are split 80/10/10 so that no post appears in
more than one split.
"""
from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InsufficientDataError
from .lexicon import SentimentLexicon, score_sentence

PAD, SOS, EOS, UNK = "<pad>", "<sos>", "<eos>", "<unk>"
RESERVED = (PAD, SOS, EOS, UNK)
PAD_ID, SOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3

SPLIT_NAMES = ("train", "valid", "test")


@dataclass(frozen=True)
class RawPair:
    post: tuple
    response: tuple


@dataclass(frozen=True)
class Triple:
    post: tuple
    resp_pos: tuple
    resp_neg: tuple


@dataclass(frozen=True)
class Instance:
    post: tuple
    response: tuple
    label: int  # 1 positive, -1 negative


@dataclass
class SplitCorpus:
    train: list
    valid: list
    test: list
    post_groups: dict  # post tuple -> split name

    def split(self, name: str) -> list:
        return getattr(self, name)


def group_by_post(pairs: Iterable[RawPair]) -> dict:
    """Group responses under exact-token-equal posts, dropping duplicate
    (post, response) pairs while keeping first occurrences in input order."""
    groups: dict = {}
    seen = set()
    for pair in pairs:
        key = (pair.post, pair.response)
        if key in seen:
            continue
        seen.add(key)
        groups.setdefault(pair.post, []).append(pair.response)
    return groups


def mine_triples(groups: dict, lex: SentimentLexicon, min_len: int = 5) -> list:
    """Emit the full positive x negative cross-product per post.

    A response qualifies as positive (negative) when its lexicon score is
    strictly positive (negative) and its token length is strictly greater
    than ``min_len``. Output order is deterministic: post insertion order,
    then response order within the group.
    """
    triples = []
    for post, responses in groups.items():
        pos, neg = [], []
        for resp in responses:
            if len(resp) <= min_len:
                continue
            polarity = score_sentence(resp, lex).score
            if polarity > 0:
                pos.append(resp)
            elif polarity < 0:
                neg.append(resp)
        for rp in pos:
            for rn in neg:
                triples.append(Triple(post, rp, rn))
    return triples


def rewrite_instances(triples: Sequence[Triple]) -> list:
    """Rewrite each triple into a label=1 and a label=-1 instance, in that
    order, so that |instances| = 2 * |triples|."""
    instances = []
    for t in triples:
        instances.append(Instance(t.post, t.resp_pos, 1))
        instances.append(Instance(t.post, t.resp_neg, -1))
    return instances


def strict_split(
    instances: Sequence[Instance],
    ratios: tuple = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> SplitCorpus:
    """Post-disjoint split sized by instance count toward the given ratios.

    Distinct posts are shuffled with a seeded generator, then train and
    valid are filled post group by post group while adding the next group
    keeps the cumulative instance count at least as close to the target as
    stopping would; the remainder becomes test. All instances of one post
    land in one split, so exact proportions hold only up to one post group.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")

    by_post: dict = {}
    for inst in instances:
        by_post.setdefault(inst.post, []).append(inst)
    posts = list(by_post)
    if len(posts) < 3:
        raise InsufficientDataError(
            f"need at least 3 distinct posts to split, got {len(posts)}"
        )

    rng = random.Random(seed)
    rng.shuffle(posts)

    total = len(instances)
    assignment = {name: [] for name in SPLIT_NAMES}
    i = 0
    for name, ratio in zip(SPLIT_NAMES[:2], ratios[:2]):
        target = ratio * total
        cum = 0
        while i < len(posts):
            size = len(by_post[posts[i]])
            if abs(cum + size - target) > abs(cum - target):
                break
            assignment[name].append(posts[i])
            cum += size
            i += 1
    assignment["test"] = posts[i:]

    # Tiny corpora can leave a split empty; repair by moving tail posts out
    # of the most populated split so every split holds at least one post.
    for name in SPLIT_NAMES:
        if not assignment[name]:
            donor = max(SPLIT_NAMES, key=lambda n: len(assignment[n]))
            assignment[name].append(assignment[donor].pop())

    post_groups = {}
    buckets = {name: [] for name in SPLIT_NAMES}
    for name in SPLIT_NAMES:
        for post in assignment[name]:
            post_groups[post] = name
            buckets[name].extend(by_post[post])
    return SplitCorpus(buckets["train"], buckets["valid"], buckets["test"], post_groups)


@dataclass
class Vocabulary:
    index_to_token: list
    token_to_index: dict = field(init=False)

    def __post_init__(self):
        self.token_to_index = {tok: i for i, tok in enumerate(self.index_to_token)}

    def __len__(self) -> int:
        return len(self.index_to_token)

    def __contains__(self, token) -> bool:
        return token in self.token_to_index


def build_vocab(sequences: Iterable[Sequence], cap: int = 30000) -> Vocabulary:
    """Keep the ``cap`` most frequent tokens (ties broken lexicographically)
    behind the four reserved symbols PAD, SOS, EOS, UNK.

    Corpus tokens spelled like a reserved symbol are excluded from counting
    so the token<->index mapping stays a bijection.
    """
    counts = Counter()
    for seq in sequences:
        counts.update(seq)
    for sym in RESERVED:
        counts.pop(sym, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [tok for tok, _ in ranked[:cap]]
    return Vocabulary(list(RESERVED) + kept)


def encode(tokens: Sequence, vocab: Vocabulary) -> list:
    """Map tokens to indices; out-of-vocabulary tokens become UNK. No SOS or
    EOS is inserted here, callers add those explicitly."""
    t2i = vocab.token_to_index
    return [t2i.get(tok, UNK_ID) for tok in tokens]


def decode(indices: Sequence[int], vocab: Vocabulary) -> list:
    return [vocab.index_to_token[i] for i in indices]


def vocab_coverage(sequences: Iterable[Sequence], vocab: Vocabulary) -> float:
    """Fraction of token occurrences that are in-vocabulary."""
    total = covered = 0
    for seq in sequences:
        for tok in seq:
            total += 1
            if tok in vocab:
                covered += 1
    return covered / total if total else 0.0


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def read_pairs_tsv(path) -> list:
    """Read `post<TAB>response` lines with space-separated tokens."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 tab-separated fields")
            post = tuple(parts[0].split())
            resp = tuple(parts[1].split())
            if not post or not resp:
                raise ValueError(f"{path}:{lineno}: empty post or response")
            pairs.append(RawPair(post, resp))
    return pairs


def write_triples_tsv(triples: Sequence[Triple], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in triples:
            fh.write(
                " ".join(t.post) + "\t" + " ".join(t.resp_pos) + "\t" + " ".join(t.resp_neg) + "\n"
            )


def write_instances_jsonl(instances: Sequence[Instance], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(
                json.dumps(
                    {"post": list(inst.post), "response": list(inst.response), "label": inst.label},
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
                + "\n"
            )


def read_instances_jsonl(path) -> list:
    instances = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            instances.append(Instance(tuple(obj["post"]), tuple(obj["response"]), int(obj["label"])))
    return instances


def write_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tok in vocab.index_to_token:
            fh.write(tok + "\n")


def read_vocab(path) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
    if tokens[: len(RESERVED)] != list(RESERVED):
        raise ValueError(f"{path}: reserved symbols missing or out of order")
    return Vocabulary(tokens)
