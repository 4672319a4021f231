"""Teacher embedding tables: the TEB1 binary format and a synthetic teacher.

TEB1 layout (little-endian): magic ``TEB1``, u32 record count, u32 dim,
then per record a u32 UTF-8 byte length, the text bytes, and dim float32
values. The same format carries text teachers and image-embedding tables
(the text field then holds a class label or ``label/index`` image id).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Sequence

import numpy as np

MAGIC = b"TEB1"
_HEADER = struct.Struct("<4sII")
_U32 = struct.Struct("<I")


class TebError(ValueError):
    """Malformed TEB1 stream (bad magic, truncation, non-finite floats)."""


@dataclass
class TeacherTable:
    """Ordered (text, vector) records; lookups let later duplicates win."""

    dim: int
    records: list[tuple[str, np.ndarray]]
    _lookup: dict[str, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        for text, vec in self.records:
            if vec.shape != (self.dim,):
                raise TebError(
                    f"record {text!r} has {vec.shape[0] if vec.ndim == 1 else vec.shape} "
                    f"values, expected {self.dim}"
                )
        self._lookup = {text: vec for text, vec in self.records}

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, text: str) -> bool:
        return text in self._lookup

    def lookup(self, text: str) -> np.ndarray:
        return self._lookup[text]

    def texts(self) -> list[str]:
        return [text for text, _ in self.records]


def read_teb(stream: BinaryIO) -> TeacherTable:
    """Parse a TEB1 stream; rejects trailing bytes so writes round-trip."""
    header = stream.read(_HEADER.size)
    if len(header) < _HEADER.size:
        raise TebError("truncated header")
    magic, count, dim = _HEADER.unpack(header)
    if magic != MAGIC:
        raise TebError(f"bad magic {magic!r}")
    records: list[tuple[str, np.ndarray]] = []
    for i in range(count):
        raw_len = stream.read(_U32.size)
        if len(raw_len) < _U32.size:
            raise TebError(f"record {i}: truncated text length")
        (text_len,) = _U32.unpack(raw_len)
        text_bytes = stream.read(text_len)
        if len(text_bytes) < text_len:
            raise TebError(f"record {i}: truncated text")
        try:
            text = text_bytes.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TebError(f"record {i}: invalid UTF-8 text") from exc
        vec_bytes = stream.read(4 * dim)
        if len(vec_bytes) < 4 * dim:
            raise TebError(f"record {i}: truncated vector")
        vec = np.frombuffer(vec_bytes, dtype="<f4").copy()
        if not np.all(np.isfinite(vec)):
            raise TebError(f"record {i} ({text!r}): non-finite float")
        records.append((text, vec))
    if stream.read(1):
        raise TebError("trailing bytes after last record")
    return TeacherTable(dim=dim, records=records)


def write_teb(table: TeacherTable, stream: BinaryIO) -> int:
    """Serialize a table; exact inverse of read_teb. Returns bytes written."""
    written = stream.write(_HEADER.pack(MAGIC, len(table.records), table.dim))
    for text, vec in table.records:
        data = text.encode("utf-8")
        written += stream.write(_U32.pack(len(data)))
        written += stream.write(data)
        written += stream.write(np.ascontiguousarray(vec, dtype="<f4").tobytes())
    return written


def _bigram_histogram(text: str) -> np.ndarray:
    # Byte bigrams folded into 256 bins; a leading NUL sentinel keeps
    # single-character texts distinguishable from each other.
    data = b"\x00" + text.encode("utf-8")
    hist = np.zeros(256, dtype=np.float64)
    for a, b in zip(data, data[1:]):
        hist[(a * 131 + b) % 256] += 1.0
    return hist


def synthetic_teacher(texts: Sequence[str] | Iterable[str], dim: int,
                      seed: int) -> TeacherTable:
    """Deterministic stand-in for a frozen text encoder.

    vector(text) = tanh(A . h(text)) where h is the 256-bin byte-bigram
    count histogram of the UTF-8 text and A is a (dim, 256) matrix drawn
    once from a seeded generator with entries ~ Normal(0, 1/16). Identical
    texts always get identical vectors.
    """
    rng = np.random.default_rng(seed)
    mix = rng.normal(0.0, 0.25, size=(dim, 256))
    records = []
    for text in texts:
        vec = np.tanh(mix @ _bigram_histogram(text)).astype(np.float32)
        records.append((text, vec))
    return TeacherTable(dim=dim, records=records)
