"""Embedding backends: binary store format, providers, MLM clients."""

from .mlm import MlmProvider, RemoteMlmProvider, StaticMlmProvider
from .providers import (
    CachingProvider,
    EmbeddingProvider,
    ProviderUnavailableError,
    RemoteProvider,
    StoreProvider,
    SyntheticBlobProvider,
    SyntheticHashProvider,
    TextNotFoundError,
    TransportError,
    UnknownTextError,
    stack_vectors,
)
from .store import (
    MAGIC,
    STORE_VERSION,
    BadMagicError,
    DuplicateTextError,
    EmbeddingStore,
    StoreError,
    TruncatedFileError,
    UnsupportedVersionError,
    export_jsonl,
    read_store,
    write_store,
)

__all__ = [
    "MlmProvider",
    "RemoteMlmProvider",
    "StaticMlmProvider",
    "CachingProvider",
    "EmbeddingProvider",
    "ProviderUnavailableError",
    "RemoteProvider",
    "StoreProvider",
    "SyntheticBlobProvider",
    "SyntheticHashProvider",
    "TextNotFoundError",
    "TransportError",
    "UnknownTextError",
    "stack_vectors",
    "MAGIC",
    "STORE_VERSION",
    "BadMagicError",
    "DuplicateTextError",
    "EmbeddingStore",
    "StoreError",
    "TruncatedFileError",
    "UnsupportedVersionError",
    "export_jsonl",
    "read_store",
    "write_store",
]
