"""Visual grounding ratios from caption-corpus word statistics.

A word is considered grounded when it occurs strictly more than a threshold
number of times in a caption corpus; the grounding ratio of a text set is
the fraction of its tokens that are grounded.  Tokenization is lowercase +
split on non-letter characters (digits and underscores are separators).
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "GroundedVocab",
    "tokenize_letters",
    "build_grounded_vocab",
    "grounding_ratio",
    "save_vocab",
    "load_vocab",
]

_LETTER_RUN = re.compile(r"[^\W\d_]+", re.UNICODE)


def tokenize_letters(text: str) -> list[str]:
    """Lowercase letter runs of ``text``; everything else is a separator."""
    return _LETTER_RUN.findall(text.lower())


@dataclass(frozen=True)
class GroundedVocab:
    """Words seen strictly more than ``threshold`` times in ``corpus_id``."""

    words: frozenset[str]
    threshold: int = 100
    corpus_id: str = ""

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)


def build_grounded_vocab(
    captions: Iterable[str], threshold: int = 100, corpus_id: str = ""
) -> GroundedVocab:
    """Count caption tokens and keep those with count > ``threshold``."""
    counts: Counter = Counter()
    for caption in captions:
        counts.update(tokenize_letters(caption))
    kept = frozenset(w for w, c in counts.items() if c > threshold)
    return GroundedVocab(words=kept, threshold=threshold, corpus_id=corpus_id)


def grounding_ratio(
    texts: Sequence[str], vocab: GroundedVocab, *, phrase_level: bool = False
) -> float:
    """Fraction of tokens (default) or of texts (``phrase_level``) that are grounded.

    Token level counts every token of every text; phrase level counts a text
    as grounded when any of its tokens is.  Returns 0.0 for empty input.
    """
    if phrase_level:
        if not texts:
            return 0.0
        hits = sum(1 for t in texts if any(tok in vocab for tok in tokenize_letters(t)))
        return hits / len(texts)
    total = 0
    grounded = 0
    for t in texts:
        for tok in tokenize_letters(t):
            total += 1
            if tok in vocab:
                grounded += 1
    return grounded / total if total else 0.0


def save_vocab(vocab: GroundedVocab, path: str | Path) -> None:
    """Persist as sorted lowercase words, one per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for w in sorted(vocab.words):
            fh.write(w + "\n")


def load_vocab(path: str | Path, threshold: int = 100, corpus_id: str = "") -> GroundedVocab:
    with open(path, "r", encoding="utf-8") as fh:
        words = frozenset(line.strip() for line in fh if line.strip())
    return GroundedVocab(words=words, threshold=threshold, corpus_id=corpus_id)
