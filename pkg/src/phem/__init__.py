"""phem: phrase-embedding toolkit.

Builds instance-level prompts by probing a masked language model, embeds
phrases through pluggable providers (remote service, on-disk store, or
deterministic synthetic generators), and evaluates the representations on
entity clustering (matched accuracy, NMI), entity set expansion (MAP@K),
and caption-corpus grounding ratios.
"""

from .core import (
    DimensionMismatchError,
    EmbeddingVector,
    InvariantViolation,
    KeywordSet,
    PhemError,
    Phrase,
    PromptConfig,
    ZeroVectorError,
    cosine_similarity,
    l2_normalize,
)
from .clustering import ClusteringResult, clustering_accuracy, hungarian_max, kmeans, nmi
from .expansion import RankedList, ap_at_k, expand, map_at_k
from .grounding import GroundedVocab, build_grounded_vocab, grounding_ratio
from .ingest import (
    ExpansionBenchmark,
    LabeledCorpus,
    SeedQuery,
    dedup_entities,
    load_entity_list,
    load_expansion_benchmark,
    parse_bio_corpus,
    save_entity_list,
)
from .prompting import (
    MlmPrediction,
    build_mlm_query,
    build_prompt,
    load_keyword_cache,
    save_keyword_cache,
    select_keywords,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "PhemError",
    "ZeroVectorError",
    "DimensionMismatchError",
    "InvariantViolation",
    "Phrase",
    "EmbeddingVector",
    "KeywordSet",
    "PromptConfig",
    "l2_normalize",
    "cosine_similarity",
    "LabeledCorpus",
    "SeedQuery",
    "ExpansionBenchmark",
    "parse_bio_corpus",
    "dedup_entities",
    "save_entity_list",
    "load_entity_list",
    "load_expansion_benchmark",
    "MlmPrediction",
    "build_mlm_query",
    "select_keywords",
    "build_prompt",
    "save_keyword_cache",
    "load_keyword_cache",
    "ClusteringResult",
    "kmeans",
    "hungarian_max",
    "clustering_accuracy",
    "nmi",
    "RankedList",
    "expand",
    "ap_at_k",
    "map_at_k",
    "GroundedVocab",
    "build_grounded_vocab",
    "grounding_ratio",
]
