"""Evaluation metrics: sentiment accuracy, corpus distinct-n, corpus BLEU,
embedding Average, and the sentiment-word usage table.

Error-rate derivation for the usage table: for the generations requested
with one label, err is the share of distinct opposite-polarity lexicon
words among all distinct lexicon words observed, i.e.
100 * wrong_distinct / (wrong_distinct + right_distinct). Distinct word
counts, not token counts, enter the ratio.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyInputError, ZeroDenominatorError
from .lexicon import SentimentLexicon, score_sentence


@dataclass
class EvalReport:
    sentiment_accuracy: float
    distinct1: float
    distinct2: float
    bleu1: float
    bleu2: float
    average: float
    n_items: int

    def to_dict(self) -> dict:
        return {
            "sentiment_accuracy": self.sentiment_accuracy,
            "distinct1": self.distinct1,
            "distinct2": self.distinct2,
            "bleu1": self.bleu1,
            "bleu2": self.bleu2,
            "average": self.average,
            "n_items": self.n_items,
        }


@dataclass
class SentiUsageRow:
    label_filter: str  # "all", "1" or "-1"
    pos_distinct: int
    pos_tokens: int
    neg_distinct: int
    neg_tokens: int
    err: Optional[float]  # None for the "all" row
    err_defined: bool = True

    def to_dict(self) -> dict:
        return {
            "label_filter": self.label_filter,
            "pos_distinct": self.pos_distinct,
            "pos_tokens": self.pos_tokens,
            "neg_distinct": self.neg_distinct,
            "neg_tokens": self.neg_tokens,
            "err": self.err,
            "err_defined": self.err_defined,
        }


def sentiment_accuracy(generations: Sequence[tuple], lex: SentimentLexicon) -> float:
    """Percent of generations whose lexicon score sign matches the requested
    label; neutral (score 0) counts as incorrect."""
    if not generations:
        raise EmptyInputError("no generations to score")
    correct = 0
    for response, label in generations:
        score = score_sentence(response, lex).score
        if (label == 1 and score > 0) or (label == -1 and score < 0):
            correct += 1
    return 100.0 * correct / len(generations)


def _ngrams(tokens: Sequence, n: int) -> list:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def distinct_n(responses: Sequence[Sequence], n: int) -> float:
    """100 * unique n-grams / total n-grams across all responses."""
    if n < 1:
        raise ValueError("n must be at least 1")
    unique = set()
    total = 0
    for resp in responses:
        grams = _ngrams(resp, n)
        total += len(grams)
        unique.update(grams)
    if total == 0:
        raise ZeroDenominatorError(f"no {n}-grams in any response")
    return 100.0 * len(unique) / total


def err_rate(wrong_distinct: int, right_distinct: int) -> Optional[float]:
    """Share of distinct sentiment words contradicting the requested label."""
    denom = wrong_distinct + right_distinct
    if denom == 0:
        return None
    return 100.0 * wrong_distinct / denom


def senti_usage(generations: Sequence[tuple], lex: SentimentLexicon) -> list:
    """Distinct/token counts of positive and negative lexicon words in the
    generations, overall and per requested label."""
    rows = []
    for label_filter in ("all", "1", "-1"):
        if label_filter == "all":
            subset = [resp for resp, _ in generations]
        else:
            subset = [resp for resp, label in generations if str(label) == label_filter]
        pos_counts: Counter = Counter()
        neg_counts: Counter = Counter()
        for resp in subset:
            for tok in resp:
                if tok in lex.positive:
                    pos_counts[tok] += 1
                elif tok in lex.negative:
                    neg_counts[tok] += 1
        pos_distinct, pos_tokens = len(pos_counts), sum(pos_counts.values())
        neg_distinct, neg_tokens = len(neg_counts), sum(neg_counts.values())
        if label_filter == "all":
            err, defined = None, True
        else:
            wrong, right = (
                (neg_distinct, pos_distinct) if label_filter == "1"
                else (pos_distinct, neg_distinct)
            )
            err = err_rate(wrong, right)
            defined = err is not None
            if err is None:
                err = 0.0
        rows.append(SentiUsageRow(label_filter, pos_distinct, pos_tokens,
                                  neg_distinct, neg_tokens, err, defined))
    return rows


def bleu_n(candidates: Sequence[Sequence], references: Sequence[Sequence], n: int) -> float:
    """Corpus-level BLEU-n without smoothing.

    Clipped modified n-gram precisions are aggregated over the whole corpus
    for orders 1..n, combined by geometric mean and multiplied by the
    brevity penalty exp(min(0, 1 - r/c)), where r sums per-candidate
    closest-reference lengths (ties toward the shorter reference).
    """
    if len(candidates) != len(references):
        raise ValueError(f"{len(candidates)} candidates but {len(references)} reference sets")
    if not candidates:
        raise EmptyInputError("no candidates to score")
    for refs in references:
        if not refs:
            raise ValueError("empty reference set")

    matched = [0] * n
    possible = [0] * n
    cand_len = 0
    ref_len = 0
    for cand, refs in zip(candidates, references):
        cand_len += len(cand)
        ref_len += min((abs(len(r) - len(cand)), len(r)) for r in refs)[1]
        for k in range(1, n + 1):
            cand_counts = Counter(_ngrams(cand, k))
            if not cand_counts:
                continue
            max_ref: Counter = Counter()
            for ref in refs:
                for gram, cnt in Counter(_ngrams(ref, k)).items():
                    if cnt > max_ref[gram]:
                        max_ref[gram] = cnt
            possible[k - 1] += sum(cand_counts.values())
            matched[k - 1] += sum(min(cnt, max_ref[gram]) for gram, cnt in cand_counts.items())

    if any(p == 0 for p in possible) or any(m == 0 for m in matched):
        return 0.0
    log_prec = sum(math.log(m / p) for m, p in zip(matched, possible)) / n
    bp = math.exp(min(0.0, 1.0 - ref_len / cand_len)) if cand_len > 0 else 0.0
    return 100.0 * bp * math.exp(log_prec)


def _mean_vector(tokens: Sequence, embeddings: dict, dim: int) -> np.ndarray:
    vec = np.zeros(dim, dtype=np.float64)
    if not tokens:
        return vec
    for tok in tokens:
        emb = embeddings.get(tok)
        if emb is not None:
            vec += emb
    return vec / len(tokens)


def embedding_average(candidates: Sequence[Sequence], references: Sequence[Sequence],
                      embeddings: dict) -> float:
    """Cosine similarity between mean candidate and mean reference vectors,
    averaged over the corpus (x100). Out-of-table tokens contribute zero
    vectors; a zero mean vector on either side scores 0 for that pair, and
    negative cosines are floored at 0 so the corpus value stays in [0, 100].
    Multi-reference pairs take the best reference.
    """
    if len(candidates) != len(references):
        raise ValueError(f"{len(candidates)} candidates but {len(references)} reference sets")
    if not candidates:
        raise EmptyInputError("no candidates to score")
    if not embeddings:
        raise ValueError("empty embedding table")
    dim = len(next(iter(embeddings.values())))

    total = 0.0
    for cand, refs in zip(candidates, references):
        cvec = _mean_vector(cand, embeddings, dim)
        cnorm = np.linalg.norm(cvec)
        best = 0.0
        for ref in refs:
            rvec = _mean_vector(ref, embeddings, dim)
            rnorm = np.linalg.norm(rvec)
            if cnorm == 0.0 or rnorm == 0.0:
                continue
            cos = float(np.dot(cvec, rvec) / (cnorm * rnorm))
            best = max(best, cos)
        total += max(0.0, best)
    return 100.0 * total / len(candidates)


def evaluate_generations(generations: Sequence[tuple], references: Sequence[Sequence],
                         lex: SentimentLexicon, embeddings: dict) -> tuple:
    """Full metric bundle over aligned (response, label) generations and
    per-item reference sets; returns (EvalReport, usage rows)."""
    if not generations:
        raise EmptyInputError("no generations to evaluate")
    responses = [resp for resp, _ in generations]
    report = EvalReport(
        sentiment_accuracy=sentiment_accuracy(generations, lex),
        distinct1=distinct_n(responses, 1),
        distinct2=distinct_n(responses, 2),
        bleu1=bleu_n(responses, references, 1),
        bleu2=bleu_n(responses, references, 2),
        average=embedding_average(responses, references, embeddings),
        n_items=len(generations),
    )
    return report, senti_usage(generations, lex)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def report_json(report: EvalReport, usage: Sequence[SentiUsageRow], model: str = "") -> str:
    doc = {"model": model, "report": report.to_dict(),
           "senti_usage": [row.to_dict() for row in usage]}
    return json.dumps(doc, indent=2, sort_keys=True)


def render_report(report: EvalReport, usage: Sequence[SentiUsageRow], model: str = "model") -> str:
    """Aligned-column text rendering of the metric bundle, one decimal."""
    head = ["model", "sentiment accuracy", "distinct-1", "distinct-2",
            "bleu-1", "bleu-2", "average"]
    row = [model, f"{report.sentiment_accuracy:.1f}", f"{report.distinct1:.1f}",
           f"{report.distinct2:.1f}", f"{report.bleu1:.1f}", f"{report.bleu2:.1f}",
           f"{report.average:.1f}"]
    widths = [max(len(a), len(b)) for a, b in zip(head, row)]
    lines = [
        "  ".join(h.rjust(w) for h, w in zip(head, widths)),
        "  ".join(r.rjust(w) for r, w in zip(row, widths)),
        "",
        "sentiment word usage (distinct / tokens)",
    ]
    uhead = ["rows", "positive", "negative", "Err"]
    urows = []
    for r in usage:
        name = model if r.label_filter == "all" else f"--label = {r.label_filter}"
        err = "" if r.err is None or r.label_filter == "all" else (
            f"{r.err:.1f}%" if r.err_defined else "n/a"
        )
        urows.append([name, f"{r.pos_distinct} / {r.pos_tokens:,}",
                      f"{r.neg_distinct} / {r.neg_tokens:,}", err])
    uw = [max(len(uhead[i]), *(len(r[i]) for r in urows)) for i in range(4)]
    lines.append("  ".join(h.rjust(w) for h, w in zip(uhead, uw)))
    for r in urows:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, uw)))
    return "\n".join(lines) + "\n"
