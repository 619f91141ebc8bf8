"""Dataset ingestion: BIO span extraction, type-level dedup, benchmark files.

Two input families are supported:

* token/tag files in BIO convention (one token per line, whitespace-separated
  columns, blank line = sentence break, ``-DOCSTART-`` lines skipped), and
* the canonical tab-separated entity-list and seed-query files this package
  writes itself (see :func:`save_entity_list` / :func:`load_seed_queries`).

Parsing is streaming and single-threaded; the resulting corpora are
immutable and shareable.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .core import PhemError, Phrase

log = logging.getLogger(__name__)

__all__ = [
    "MalformedLineError",
    "UnresolvedSeedError",
    "BioParse",
    "LabeledCorpus",
    "SeedQuery",
    "ExpansionBenchmark",
    "DedupResult",
    "extract_spans",
    "parse_bio_corpus",
    "dedup_entities",
    "save_entity_list",
    "load_entity_list",
    "load_seed_queries",
    "load_expansion_benchmark",
]


class MalformedLineError(PhemError):
    """A line that cannot be interpreted under the expected format."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UnresolvedSeedError(PhemError):
    """Seed surfaces that do not occur in the benchmark vocabulary."""

    def __init__(self, missing: Sequence[str]):
        self.missing = tuple(missing)
        super().__init__(
            "seed surfaces missing from vocabulary: " + ", ".join(repr(m) for m in self.missing)
        )


@dataclass(frozen=True)
class LabeledCorpus:
    """Deduplicated phrases plus the class inventory they are labeled with."""

    dataset_id: str
    classes: tuple[str, ...]
    phrases: tuple[Phrase, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "phrases", tuple(self.phrases))
        seen: set[str] = set()
        for p in self.phrases:
            if p.label is None or not (0 <= p.label < len(self.classes)):
                raise ValueError(f"phrase {p.surface!r} has label {p.label} outside class inventory")
            if p.surface in seen:
                raise ValueError(f"duplicate surface in corpus: {p.surface!r}")
            seen.add(p.surface)

    @property
    def surfaces(self) -> list[str]:
        return [p.surface for p in self.phrases]

    @property
    def labels(self) -> list[int]:
        return [p.label for p in self.phrases]  # type: ignore[misc]


@dataclass(frozen=True)
class SeedQuery:
    """A 3-entity seed set drawn from one class."""

    class_id: int
    seeds: tuple[Phrase, Phrase, Phrase]

    def __post_init__(self) -> None:
        object.__setattr__(self, "seeds", tuple(self.seeds))
        if len(self.seeds) != 3:
            raise ValueError("a seed query holds exactly 3 seeds")
        surfaces = [s.surface for s in self.seeds]
        if len(set(surfaces)) != 3:
            raise ValueError(f"seeds must be pairwise distinct, got {surfaces}")

    @property
    def seed_surfaces(self) -> tuple[str, str, str]:
        return tuple(s.surface for s in self.seeds)  # type: ignore[return-value]


@dataclass(frozen=True)
class ExpansionBenchmark:
    """A labeled vocabulary plus seed queries for set expansion."""

    dataset_id: str
    classes: tuple[str, ...]
    vocabulary: tuple[Phrase, ...]
    queries: tuple[SeedQuery, ...]

    def __post_init__(self) -> None:
        vocab_surfaces = {p.surface for p in self.vocabulary}
        for q in self.queries:
            if not (0 <= q.class_id < len(self.classes)):
                raise ValueError(f"query class_id {q.class_id} outside class inventory")
            for s in q.seeds:
                if s.surface not in vocab_surfaces:
                    raise ValueError(f"seed {s.surface!r} not in vocabulary")
                if s.label != q.class_id:
                    raise ValueError(
                        f"seed {s.surface!r} labeled {s.label}, query class is {q.class_id}"
                    )

    def counts(self) -> dict[str, int]:
        return {
            "classes": len(self.classes),
            "entities": len(self.vocabulary),
            "queries": len(self.queries),
        }


@dataclass(frozen=True)
class BioParse:
    """Spans extracted from a BIO stream plus any per-line issues seen."""

    spans: tuple[tuple[str, str], ...]
    issues: tuple[str, ...] = ()


@dataclass(frozen=True)
class DedupResult:
    corpus: LabeledCorpus
    dropped: tuple[str, ...]


def _split_tag(tag: str) -> tuple[str, str | None]:
    """Split ``B-LOC`` into ("B", "LOC"); ``O`` into ("O", None)."""
    if tag == "O":
        return "O", None
    if len(tag) > 2 and tag[1] == "-" and tag[0] in ("B", "I"):
        return tag[0], tag[2:]
    return "?", None


def extract_spans(tagged: Sequence[tuple[str, str]], *, strict: bool = False) -> list[tuple[str, str]]:
    """Assemble entity spans from one contiguous run of (token, tag) pairs.

    Each maximal ``B-X (I-X)*`` run yields one span whose surface is its
    tokens joined by single spaces.  An ``I-X`` with no open span of class X
    starts a new span (lenient default); with ``strict`` it raises.
    """
    spans: list[tuple[str, str]] = []
    cur_tokens: list[str] = []
    cur_class: str | None = None

    def close() -> None:
        nonlocal cur_tokens, cur_class
        if cur_tokens:
            spans.append((" ".join(cur_tokens), cur_class))  # type: ignore[arg-type]
        cur_tokens = []
        cur_class = None

    for token, tag in tagged:
        marker, cls = _split_tag(tag)
        if marker == "B":
            close()
            cur_tokens = [token]
            cur_class = cls
        elif marker == "I":
            if cur_class == cls and cur_tokens:
                cur_tokens.append(token)
            else:
                if strict:
                    raise ValueError(f"I-{cls} without an open {cls} span")
                close()
                cur_tokens = [token]
                cur_class = cls
        else:
            close()
    close()
    return spans


def parse_bio_corpus(
    lines: Iterable[str],
    excluded_classes: Iterable[str] = (),
    *,
    tag_column: int = -1,
    token_column: int = 0,
    strict: bool = False,
) -> BioParse:
    """Extract (surface, class) spans from a BIO-tagged token stream.

    Malformed lines (wrong field count, unrecognized tag shape) are reported
    with their line number; parsing continues in lenient mode and aborts in
    strict mode.  Spans whose class is in ``excluded_classes`` are dropped
    after assembly.  Spans are returned in document order.
    """
    excluded = set(excluded_classes)
    spans: list[tuple[str, str]] = []
    issues: list[str] = []
    sentence: list[tuple[str, str]] = []

    def flush() -> None:
        nonlocal sentence
        if sentence:
            spans.extend(extract_spans(sentence, strict=strict))
            sentence = []

    for line_no, raw in enumerate(lines, 1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            flush()
            continue
        if line.startswith("-DOCSTART-"):
            flush()
            continue
        fields = line.split()
        try:
            if len(fields) < 2:
                raise IndexError  # token and tag cannot share a field
            token = fields[token_column]
            tag = fields[tag_column]
        except IndexError:
            msg = f"expected token and tag columns, got {len(fields)} field(s)"
            if strict:
                raise MalformedLineError(line_no, msg) from None
            issues.append(f"line {line_no}: {msg}")
            continue
        marker, _ = _split_tag(tag)
        if marker == "?":
            msg = f"unrecognized tag {tag!r}"
            if strict:
                raise MalformedLineError(line_no, msg)
            issues.append(f"line {line_no}: {msg}; treated as O")
            tag = "O"
        sentence.append((token, tag))
    flush()

    kept = tuple(s for s in spans if s[1] not in excluded)
    return BioParse(spans=kept, issues=tuple(issues))


def dedup_entities(spans: Sequence[tuple[str, str]], dataset_id: str = "") -> DedupResult:
    """Merge exact-surface duplicates into a type-level corpus.

    The merged label is the majority label among mentions; label ties drop
    the surface entirely (listed in the drop report).  Class inventory and
    phrase order follow first appearance.
    """
    mention_labels: dict[str, Counter] = {}
    surface_order: list[str] = []
    for surface, cls in spans:
        if surface not in mention_labels:
            mention_labels[surface] = Counter()
            surface_order.append(surface)
        mention_labels[surface][cls] += 1

    classes: list[str] = []
    class_index: dict[str, int] = {}
    phrases: list[Phrase] = []
    dropped: list[str] = []
    for surface in surface_order:
        counts = mention_labels[surface]
        best = counts.most_common()
        if len(best) > 1 and best[0][1] == best[1][1]:
            dropped.append(surface)
            continue
        winner = best[0][0]
        if winner not in class_index:
            class_index[winner] = len(classes)
            classes.append(winner)
        phrases.append(Phrase(surface, label=class_index[winner], dataset_id=dataset_id))

    corpus = LabeledCorpus(dataset_id=dataset_id, classes=tuple(classes), phrases=tuple(phrases))
    if dropped:
        log.warning("dropped %d surface(s) with tied labels: %s", len(dropped), ", ".join(dropped[:10]))
    return DedupResult(corpus=corpus, dropped=tuple(dropped))


def save_entity_list(corpus: LabeledCorpus, path: str | Path) -> None:
    """Write the canonical entity-list file: ``surface<TAB>class_name`` per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in corpus.phrases:
            fh.write(f"{p.surface}\t{corpus.classes[p.label]}\n")  # type: ignore[index]


def load_entity_list(path: str | Path, dataset_id: str = "") -> LabeledCorpus:
    """Parse the canonical entity-list file back into a corpus.

    The split is on the *last* tab so surfaces containing tabs round-trip;
    class order follows first appearance, so ``load(save(c)) == c`` for any
    corpus whose classes all occur.
    """
    classes: list[str] = []
    class_index: dict[str, int] = {}
    phrases: list[Phrase] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                raise MalformedLineError(line_no, "expected 'surface<TAB>class_name'")
            surface, cls = line.rsplit("\t", 1)
            if not cls:
                raise MalformedLineError(line_no, "empty class name")
            if cls not in class_index:
                class_index[cls] = len(classes)
                classes.append(cls)
            phrases.append(Phrase(surface, label=class_index[cls], dataset_id=dataset_id))
    return LabeledCorpus(dataset_id=dataset_id, classes=tuple(classes), phrases=tuple(phrases))


def load_seed_queries(path: str | Path) -> list[tuple[str, tuple[str, str, str]]]:
    """Parse the seed file: ``class_name<TAB>seed1<TAB>seed2<TAB>seed3`` per line."""
    queries: list[tuple[str, tuple[str, str, str]]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise MalformedLineError(line_no, f"expected 4 tab-separated fields, got {len(fields)}")
            cls, s1, s2, s3 = fields
            queries.append((cls, (s1, s2, s3)))
    return queries


def load_expansion_benchmark(
    vocab_path: str | Path,
    seed_path: str | Path,
    dataset_id: str = "",
) -> ExpansionBenchmark:
    """Load a set-expansion benchmark from an entity list and a seed file.

    Seeds resolve against the vocabulary by case-sensitive exact match;
    any miss raises :class:`UnresolvedSeedError` listing all missing
    surfaces.
    """
    vocab = load_entity_list(vocab_path, dataset_id=dataset_id)
    by_surface = {p.surface: p for p in vocab.phrases}
    class_index = {c: i for i, c in enumerate(vocab.classes)}

    missing: list[str] = []
    queries: list[SeedQuery] = []
    for cls, seed_surfaces in load_seed_queries(seed_path):
        if cls not in class_index:
            raise ValueError(f"seed query class {cls!r} not present in vocabulary classes")
        seeds = []
        for s in seed_surfaces:
            p = by_surface.get(s)
            if p is None:
                missing.append(s)
            else:
                seeds.append(p)
        if len(seeds) == 3:
            queries.append(SeedQuery(class_id=class_index[cls], seeds=tuple(seeds)))
    if missing:
        raise UnresolvedSeedError(sorted(set(missing)))

    bench = ExpansionBenchmark(
        dataset_id=dataset_id,
        classes=vocab.classes,
        vocabulary=vocab.phrases,
        queries=tuple(queries),
    )
    log.info("loaded benchmark %s: %s", dataset_id or vocab_path, bench.counts())
    return bench
