"""On-disk embedding store with a bit-exact binary layout.

File layout, little-endian throughout::

    magic   4 bytes  b"PHEM"
    version u32      (= 1)
    dim     u32
    count   u64
    records count of: [text_len u32][UTF-8 text bytes][dim x f32]

Float bits survive a write/read round trip unchanged.  A lossy JSON-lines
export exists for eyeballing stores, nothing else.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from ..core import DimensionMismatchError, PhemError

__all__ = [
    "MAGIC",
    "STORE_VERSION",
    "StoreError",
    "BadMagicError",
    "UnsupportedVersionError",
    "TruncatedFileError",
    "DuplicateTextError",
    "EmbeddingStore",
    "write_store",
    "read_store",
    "export_jsonl",
]

MAGIC = b"PHEM"
STORE_VERSION = 1

_HEADER = struct.Struct("<4sIIQ")
_TEXTLEN = struct.Struct("<I")


class StoreError(PhemError):
    """Base class for store format errors."""


class BadMagicError(StoreError):
    pass


class UnsupportedVersionError(StoreError):
    pass


class TruncatedFileError(StoreError):
    pass


class DuplicateTextError(StoreError):
    pass


@dataclass(frozen=True)
class EmbeddingStore:
    """An in-memory view of a store file: (text, float32 vector) records."""

    dim: int
    records: tuple[tuple[str, np.ndarray], ...]

    @property
    def count(self) -> int:
        return len(self.records)

    def as_dict(self) -> dict[str, np.ndarray]:
        return {text: vec for text, vec in self.records}


def _coerce_records(
    records: Iterable[tuple[str, Sequence[float] | np.ndarray]],
    dim: int | None,
) -> tuple[list[tuple[str, np.ndarray]], int]:
    out: list[tuple[str, np.ndarray]] = []
    seen: set[str] = set()
    for text, vec in records:
        if text in seen:
            raise DuplicateTextError(f"duplicate text in store: {text!r}")
        seen.add(text)
        arr = np.asarray(vec, dtype=np.float32)
        if arr.ndim != 1:
            raise ValueError(f"vector for {text!r} is not 1-D")
        if dim is None:
            dim = int(arr.shape[0])
        elif arr.shape[0] != dim:
            raise DimensionMismatchError(
                f"vector for {text!r} has dim {arr.shape[0]}, store dim is {dim}"
            )
        out.append((text, arr))
    return out, (dim if dim is not None else 0)


def write_store(
    path: str | Path,
    records: Iterable[tuple[str, Sequence[float] | np.ndarray]],
    *,
    dim: int | None = None,
) -> int:
    """Write records to ``path``; returns the record count.

    Texts must be unique.  ``dim`` is inferred from the first record when
    not given; an empty store needs an explicit ``dim`` (defaults to 0).
    """
    coerced, dim = _coerce_records(records, dim)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, STORE_VERSION, dim, len(coerced)))
        for text, arr in coerced:
            raw = text.encode("utf-8")
            fh.write(_TEXTLEN.pack(len(raw)))
            fh.write(raw)
            fh.write(arr.tobytes())
    return len(coerced)


def _read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise TruncatedFileError(f"unexpected end of file while reading {what}")
    return buf


def read_store(path: str | Path) -> EmbeddingStore:
    """Read a store file, validating magic, version, and record framing."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise TruncatedFileError("file shorter than the store header")
        magic, version, dim, count = _HEADER.unpack(header)
        if magic != MAGIC:
            raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != STORE_VERSION:
            raise UnsupportedVersionError(f"store version {version} not supported")
        records: list[tuple[str, np.ndarray]] = []
        seen: set[str] = set()
        vec_bytes = dim * 4
        for i in range(count):
            (text_len,) = _TEXTLEN.unpack(_read_exact(fh, _TEXTLEN.size, f"record {i} text length"))
            text = _read_exact(fh, text_len, f"record {i} text").decode("utf-8")
            if text in seen:
                raise DuplicateTextError(f"duplicate text in store: {text!r}")
            seen.add(text)
            vec = np.frombuffer(_read_exact(fh, vec_bytes, f"record {i} vector"), dtype="<f4").copy()
            vec.setflags(write=False)
            records.append((text, vec))
        if fh.read(1):
            raise StoreError("trailing data after the last record")
    return EmbeddingStore(dim=dim, records=tuple(records))


def export_jsonl(store: EmbeddingStore, path: str | Path) -> None:
    """Debug-only lossy export: one ``{"text":…, "vector":…}`` object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for text, vec in store.records:
            fh.write(json.dumps({"text": text, "vector": [float(x) for x in vec]}) + "\n")
