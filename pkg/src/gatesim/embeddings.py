"""Owner enrollment database, cosine matching and the EMBDB1 file format.

File layout (all integers little-endian)::

    b"EMBDB1\\n"            magic
    u32                     format version (1)
    u32 + bytes             identity, UTF-8, length-prefixed
    u32                     embedding count
    count * 128 * f64       unit-norm components, row-major
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

EMBEDDING_DIM = 128
DEFAULT_MATCH_THRESHOLD = 0.7
DEFAULT_ENROLLMENT_SIZE = 100

MAGIC = b"EMBDB1\n"
FORMAT_VERSION = 1


class DegenerateEmbeddingError(ValueError):
    pass


class DatabaseFormatError(ValueError):
    pass


class NotADatabaseError(DatabaseFormatError):
    pass


class UnsupportedVersionError(DatabaseFormatError):
    def __init__(self, version: int):
        super().__init__(f"unsupported format version {version}")
        self.version = version


class TruncatedDatabaseError(DatabaseFormatError):
    pass


def as_embedding(vector) -> np.ndarray:
    v = np.asarray(vector, dtype=np.float64)
    if v.shape != (EMBEDDING_DIM,):
        raise ValueError(f"embedding must have shape ({EMBEDDING_DIM},), got {v.shape}")
    return v


def _norm(v: np.ndarray) -> float:
    n = float(np.linalg.norm(v))
    if not np.isfinite(n) or n == 0.0:
        raise DegenerateEmbeddingError("degenerate embedding")
    return n


def normalize(vector) -> np.ndarray:
    v = as_embedding(vector)
    return v / _norm(v)


def cosine_similarity(a, b) -> float:
    a = as_embedding(a)
    b = as_embedding(b)
    sim = float(np.dot(a, b)) / (_norm(a) * _norm(b))
    return min(1.0, max(-1.0, sim))


@dataclass(frozen=True, eq=False)
class OwnerDatabase:
    identity: str
    embeddings: np.ndarray  # (n, 128), unit rows
    format_version: int = FORMAT_VERSION
    created_at: float = field(default_factory=time.time, compare=False)

    def __post_init__(self):
        emb = np.asarray(self.embeddings, dtype=np.float64)
        if emb.ndim != 2 or emb.shape[1] != EMBEDDING_DIM:
            raise ValueError(f"embeddings must have shape (n, {EMBEDDING_DIM}), got {emb.shape}")
        if emb.shape[0] == 0:
            raise ValueError("enrollment requires at least one embedding")
        if not np.allclose(np.linalg.norm(emb, axis=1), 1.0, rtol=0, atol=1e-9):
            raise ValueError("stored embeddings must be unit-norm")
        emb = emb.copy()
        emb.flags.writeable = False
        object.__setattr__(self, "embeddings", emb)

    def __len__(self) -> int:
        return self.embeddings.shape[0]

    def __eq__(self, other):
        if not isinstance(other, OwnerDatabase):
            return NotImplemented
        return (
            self.identity == other.identity
            and self.format_version == other.format_version
            and self.embeddings.shape == other.embeddings.shape
            and self.embeddings.tobytes() == other.embeddings.tobytes()
        )

    __hash__ = None


@dataclass(frozen=True)
class MatchResult:
    similarity: float
    is_owner: bool
    matched_identity: str | None


def enroll(identity: str, embeddings: Sequence) -> OwnerDatabase:
    """Build a database from raw embeddings, normalizing each one."""
    if len(embeddings) == 0:
        raise ValueError("enrollment requires at least one embedding")
    rows = np.stack([normalize(e) for e in embeddings])
    return OwnerDatabase(identity=identity, embeddings=rows)


def match(db: OwnerDatabase, probe, threshold: float = DEFAULT_MATCH_THRESHOLD) -> MatchResult:
    """Nearest-neighbour match: max cosine similarity over the enrolled set."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    p = normalize(probe)
    similarity = float(np.max(db.embeddings @ p))
    similarity = min(1.0, max(-1.0, similarity))
    is_owner = similarity >= threshold
    return MatchResult(similarity, is_owner, db.identity if is_owner else None)


def dumps_database(db: OwnerDatabase) -> bytes:
    name = db.identity.encode("utf-8")
    header = MAGIC + struct.pack("<I", db.format_version) + struct.pack("<I", len(name)) + name
    body = struct.pack("<I", len(db)) + db.embeddings.astype("<f8").tobytes()
    return header + body


def loads_database(data: bytes) -> OwnerDatabase:
    if not data.startswith(MAGIC):
        raise NotADatabaseError("not an embedding database")
    pos = len(MAGIC)

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise TruncatedDatabaseError(f"truncated database: need {n} bytes at offset {pos}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    (version,) = struct.unpack("<I", take(4))
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(version)
    (name_len,) = struct.unpack("<I", take(4))
    try:
        identity = take(name_len).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DatabaseFormatError(f"identity is not valid UTF-8: {exc}") from None
    (count,) = struct.unpack("<I", take(4))
    raw = take(count * EMBEDDING_DIM * 8)
    if pos != len(data):
        raise DatabaseFormatError(f"{len(data) - pos} trailing bytes after embeddings")
    emb = np.frombuffer(raw, dtype="<f8").reshape(count, EMBEDDING_DIM).astype(np.float64)
    try:
        return OwnerDatabase(identity=identity, embeddings=emb, format_version=version)
    except ValueError as exc:
        raise DatabaseFormatError(str(exc)) from None


def save_database(db: OwnerDatabase, path) -> None:
    Path(path).write_bytes(dumps_database(db))


def load_database(path) -> OwnerDatabase:
    return loads_database(Path(path).read_bytes())
