"""Sentiment lexicon loading and occurrence-count sentence scoring.

A sentence score is the number of token occurrences found in the positive
word set minus the number found in the negative set; the sign of the score
decides the polarity, with zero meaning neutral. Repeated tokens count once
per occurrence, and matching is exact token equality after whitespace trim.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyLexiconError, OverlapError

POSITIVE = "positive"
NEGATIVE = "negative"
NEUTRAL = "neutral"


@dataclass(frozen=True)
class SentimentLexicon:
    positive: frozenset
    negative: frozenset
    removed_stopwords: frozenset

    def swapped(self) -> "SentimentLexicon":
        """Lexicon with the polarity sets exchanged (used by symmetry tests)."""
        return SentimentLexicon(self.negative, self.positive, self.removed_stopwords)


@dataclass(frozen=True)
class SentimentScore:
    score: int
    polarity: str

    @classmethod
    def from_score(cls, score: int) -> "SentimentScore":
        if score > 0:
            return cls(score, POSITIVE)
        if score < 0:
            return cls(score, NEGATIVE)
        return cls(0, NEUTRAL)


def read_token_file(path) -> list:
    """Read a one-token-per-line UTF-8 file.

    Lines are stripped; blank lines and lines starting with '#' are skipped.
    Duplicates are preserved here and collapsed by the caller.
    """
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tok = line.strip()
            if not tok or tok.startswith("#"):
                continue
            tokens.append(tok)
    return tokens


def load_lexicon(positive_path, negative_path, stopwords: Iterable = ()) -> SentimentLexicon:
    """Load positive/negative word lists and drop the given stopwords.

    Raises OverlapError if any token appears in both raw files, and
    EmptyLexiconError if either set is empty after stopword removal.
    """
    positive = set(read_token_file(positive_path))
    negative = set(read_token_file(negative_path))

    overlap = positive & negative
    if overlap:
        sample = ", ".join(sorted(overlap)[:5])
        raise OverlapError(f"{len(overlap)} token(s) in both lexicon files: {sample}")

    stop = {s.strip() for s in stopwords if s.strip()}
    removed = (positive | negative) & stop
    positive -= stop
    negative -= stop

    if not positive or not negative:
        raise EmptyLexiconError("a polarity set is empty after stopword filtering")
    return SentimentLexicon(frozenset(positive), frozenset(negative), frozenset(removed))


def score_sentence(tokens: Sequence, lex: SentimentLexicon) -> SentimentScore:
    """Occurrence-count score: each token occurrence in the positive set adds
    one, each occurrence in the negative set subtracts one."""
    score = 0
    for tok in tokens:
        if tok in lex.positive:
            score += 1
        elif tok in lex.negative:
            score -= 1
    return SentimentScore.from_score(score)
