"""Prompt construction: MLM probe queries, keyword selection, final prompts.

The pipeline is: probe a masked language model with ``"{phrase} is a [mask]"``,
filter its top predictions into domain keywords, then assemble the encoder
prompt ``"A photo of {phrase}. A {k1}, {k2}, {k3}"``.  All functions here are
pure and deterministic; identical prediction lists produce identical keyword
sets.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .core import KeywordSet, Phrase, PromptConfig, is_valid_keyword

log = logging.getLogger(__name__)

__all__ = [
    "MASK_PLACEHOLDER",
    "MlmPrediction",
    "EmptyKeywordSetWarning",
    "build_mlm_query",
    "select_keywords",
    "build_prompt",
    "save_keyword_cache",
    "load_keyword_cache",
    "prompts_for",
]

# Literal placeholder; providers substitute their model's actual mask token.
MASK_PLACEHOLDER = "[mask]"


class EmptyKeywordSetWarning(UserWarning):
    """No MLM prediction survived filtering; the prompt degrades to its plain form."""


@dataclass(frozen=True)
class MlmPrediction:
    """One fill-in candidate from a masked language model."""

    token: str
    score: float
    is_subword: bool = False


def build_mlm_query(phrase: Phrase) -> str:
    """Probe query for one phrase: ``{surface} is a [mask]``."""
    return f"{phrase.surface} is a {MASK_PLACEHOLDER}"


def select_keywords(
    phrase: Phrase,
    predictions: Sequence[MlmPrediction],
    config: PromptConfig,
    *,
    include_subwords: bool = False,
) -> KeywordSet:
    """Filter ranked MLM predictions down to at most ``config.num_keywords``.

    Predictions are scanned in order; a token is kept iff it passes the
    whole-word filter (letters only, length >= 2), is not a subword
    continuation (unless ``include_subwords``), does not case-fold to any
    whitespace token of the phrase, and is not a case-folded duplicate of an
    earlier keep.  Kept tokens are lowercased.  The result may hold fewer
    than ``num_keywords`` keywords; zero survivors emit
    :class:`EmptyKeywordSetWarning`.
    """
    prev = None
    for p in predictions:
        if prev is not None and p.score > prev:
            raise ValueError("predictions must be ordered by non-increasing score")
        prev = p.score

    surface_tokens = {t.casefold() for t in phrase.surface.split()}
    kept: list[str] = []
    seen: set[str] = set()
    for p in predictions:
        if len(kept) >= config.num_keywords:
            break
        token = p.token
        if not is_valid_keyword(token):
            continue
        if p.is_subword and not include_subwords:
            continue
        folded = token.casefold()
        if folded in surface_tokens or folded in seen:
            continue
        kept.append(token.lower())
        seen.add(folded)

    if not kept and config.num_keywords > 0:
        warnings.warn(
            f"no keywords survived filtering for {phrase.surface!r}",
            EmptyKeywordSetWarning,
            stacklevel=2,
        )
    return KeywordSet(phrase_surface=phrase.surface, keywords=tuple(kept))


def build_prompt(phrase: Phrase, keywords: KeywordSet) -> str:
    """Assemble the encoder prompt for one phrase.

    With keywords: ``A photo of {surface}. A {k1}, {k2}, {k3}`` (comma-space
    separated, no trailing period).  Without: ``A photo of {surface}``.
    """
    if keywords.phrase_surface != phrase.surface:
        raise ValueError(
            f"keyword set belongs to {keywords.phrase_surface!r}, not {phrase.surface!r}"
        )
    if not keywords.keywords:
        return f"A photo of {phrase.surface}"
    return f"A photo of {phrase.surface}. A {', '.join(keywords.keywords)}"


def save_keyword_cache(path: str | Path, keyword_sets: Iterable[KeywordSet]) -> None:
    """Persist keyword sets, one line per phrase: ``surface<TAB>k1,k2,...``.

    Keywords are letters-only so the comma join is unambiguous; the surface
    field is everything before the last tab, so tabs in surfaces round-trip.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for ks in keyword_sets:
            fh.write(f"{ks.phrase_surface}\t{','.join(ks.keywords)}\n")


def load_keyword_cache(path: str | Path) -> dict[str, KeywordSet]:
    """Read a keyword cache back into a surface -> KeywordSet mapping."""
    cache: dict[str, KeywordSet] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                raise ValueError(f"{path}: line {line_no}: expected 'surface<TAB>keywords'")
            surface, joined = line.rsplit("\t", 1)
            keywords = tuple(k for k in joined.split(",") if k)
            cache[surface] = KeywordSet(phrase_surface=surface, keywords=keywords)
    return cache


def prompts_for(
    phrases: Sequence[Phrase],
    cache: Mapping[str, KeywordSet] | None,
    num_keywords: int,
    *,
    prompted: bool = True,
) -> list[str]:
    """Prompt texts for a batch of phrases.

    ``prompted=False`` passes surfaces through verbatim (the no-prompt
    condition).  Otherwise each phrase uses its cached keywords truncated to
    ``num_keywords``; phrases missing from the cache fall back to zero
    keywords.
    """
    if not prompted:
        return [p.surface for p in phrases]
    texts = []
    misses = 0
    for p in phrases:
        ks = cache.get(p.surface) if cache else None
        if ks is None:
            misses += 1
            ks = KeywordSet(p.surface, ())
        texts.append(build_prompt(p, ks.truncated(num_keywords)))
    if misses and num_keywords > 0:
        log.warning("%d phrase(s) missing from keyword cache; used zero-keyword prompts", misses)
    return texts
