"""Trained subword embedding tables: lookup, OOV composition, persistence."""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError, UsageError
from .subword import extract_ngrams, hash_ngram

MODEL_MAGIC = b"CSEMB1"


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_ngram: int = 3
    max_ngram: int = 6
    bucket_count: int = 100_000
    subsample_t: float = 1e-4
    min_word_count: int = 1
    seed: int = 1
    workers: int = 1
    oov_combine: str = "mean"

    def validate(self) -> None:
        from ..errors import ConfigError

        if not 1 <= self.min_ngram <= self.max_ngram:
            raise ConfigError("need 1 <= min_ngram <= max_ngram")
        if self.bucket_count < 1 or self.dim < 1:
            raise ConfigError("bucket_count and dim must be >= 1")
        if self.window < 1 or self.negatives < 0 or self.epochs < 1:
            raise ConfigError("window >= 1, negatives >= 0, epochs >= 1 required")
        if self.min_word_count < 1 or self.workers < 1:
            raise ConfigError("min_word_count and workers must be >= 1")
        if self.oov_combine not in ("mean", "sum"):
            raise ConfigError("oov_combine must be 'mean' or 'sum'")

    def training_key(self) -> dict:
        """Fields that influence trained values (workers only does when > 1)."""
        return asdict(self)


class EmbeddingTable:
    """Word, n-gram bucket and context vectors plus the word vocabulary.

    A vocabulary word's vector is the mean of its word vector and its
    n-gram bucket vectors.  Any other string is composed from its n-gram
    buckets alone (mean, or sum when ``oov_combine == "sum"``).
    """

    def __init__(self, words, counts, word_vectors, bucket_vectors, context_vectors,
                 config: EmbeddingConfig, use_subwords: bool = True):
        self.words = list(words)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.word_vectors = np.ascontiguousarray(word_vectors, dtype=np.float32)
        self.bucket_vectors = np.ascontiguousarray(bucket_vectors, dtype=np.float32)
        self.context_vectors = np.ascontiguousarray(context_vectors, dtype=np.float32)
        self.config = config
        self.use_subwords = use_subwords
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise DataError("duplicate words in embedding vocabulary")
        V, d = self.word_vectors.shape
        if V != len(self.words) or self.context_vectors.shape != (V, d):
            raise DataError("embedding matrix shapes disagree with vocabulary")
        if use_subwords and self.bucket_vectors.shape != (config.bucket_count, d):
            raise DataError("bucket matrix shape disagrees with config")
        self._sub_cache: dict[str, np.ndarray] = {}
        self.loss_trace: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.word_vectors.shape[1]

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def ngram_buckets(self, word: str) -> np.ndarray:
        ids = self._sub_cache.get(word)
        if ids is None:
            if self.use_subwords:
                c = self.config
                ids = np.array([hash_ngram(g, c.bucket_count) for g in extract_ngrams(word, c.min_ngram, c.max_ngram)],
                               dtype=np.int64)
            else:
                ids = np.zeros(0, dtype=np.int64)
            self._sub_cache[word] = ids
        return ids

    def lookup(self, word: str) -> np.ndarray:
        if not word:
            raise UsageError("lookup needs a non-empty word")
        ids = self.ngram_buckets(word)
        bucket_sum = self.bucket_vectors[ids].sum(axis=0, dtype=np.float32) if len(ids) else np.zeros(self.dim, np.float32)
        i = self.index.get(word)
        if i is not None:
            return (self.word_vectors[i] + bucket_sum) / np.float32(1 + len(ids))
        if len(ids) == 0:
            return np.zeros(self.dim, dtype=np.float32)
        if self.config.oov_combine == "sum":
            return bucket_sum
        return bucket_sum / np.float32(len(ids))

    def lookup_many(self, words) -> np.ndarray:
        return np.stack([self.lookup(w) for w in words]) if words else np.zeros((0, self.dim), np.float32)

    def replace(self, word_vectors=None, bucket_vectors=None, context_vectors=None) -> "EmbeddingTable":
        return EmbeddingTable(
            self.words, self.counts,
            self.word_vectors if word_vectors is None else word_vectors,
            self.bucket_vectors if bucket_vectors is None else bucket_vectors,
            self.context_vectors if context_vectors is None else context_vectors,
            self.config, self.use_subwords,
        )

    # -- persistence ------------------------------------------------------

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    def to_bytes(self) -> bytes:
        header = json.dumps({
            "config": asdict(self.config),
            "use_subwords": self.use_subwords,
            "words": self.words,
            "counts": self.counts.tolist(),
            "shapes": [list(self.word_vectors.shape), list(self.bucket_vectors.shape),
                       list(self.context_vectors.shape)],
        }, ensure_ascii=False).encode("utf-8")
        parts = [MODEL_MAGIC, struct.pack("<I", len(header)), header]
        for m in (self.word_vectors, self.bucket_vectors, self.context_vectors):
            parts.append(np.ascontiguousarray(m, dtype="<f4").tobytes())
        return b"".join(parts)

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        return cls.from_bytes(Path(path).read_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "EmbeddingTable":
        if data[:len(MODEL_MAGIC)] != MODEL_MAGIC:
            raise DataError("not an embedding model file (bad magic)")
        off = len(MODEL_MAGIC)
        (hlen,) = struct.unpack_from("<I", data, off)
        off += 4
        header = json.loads(data[off:off + hlen].decode("utf-8"))
        off += hlen
        mats = []
        for shape in header["shapes"]:
            n = int(np.prod(shape))
            mats.append(np.frombuffer(data, dtype="<f4", count=n, offset=off).reshape(shape).astype(np.float32))
            off += 4 * n
        return cls(header["words"], header["counts"], *mats, EmbeddingConfig(**header["config"]),
                   header.get("use_subwords", True))

    def save_text(self, path) -> None:
        lines = [f"{len(self.words)} {self.dim}"]
        for w in self.words:
            lines.append(w + " " + " ".join(f"{x:.6f}" for x in self.lookup(w)))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load_text(cls, path) -> "EmbeddingTable":
        """Read word vectors only; the result has no subword information."""
        with open(path, encoding="utf-8") as f:
            first = f.readline().split()
            if len(first) != 2:
                raise DataError("vector file header must be '<vocab_size> <dim>'")
            n, d = int(first[0]), int(first[1])
            words, rows = [], []
            for lineno, line in enumerate(f, start=2):
                parts = line.rstrip("\n").split(" ")
                if len(parts) != d + 1:
                    raise DataError(f"line {lineno}: expected {d + 1} fields")
                words.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
        if len(words) != n:
            raise DataError(f"header announces {n} words, file has {len(words)}")
        vecs = np.array(rows, dtype=np.float32).reshape(n, d)
        cfg = EmbeddingConfig(dim=d, bucket_count=1)
        return cls(words, np.ones(n, np.int64), vecs, np.zeros((1, d), np.float32),
                   np.zeros((n, d), np.float32), cfg, use_subwords=False)


def oov_rate(table: EmbeddingTable, corpus) -> float:
    """Fraction of corpus tokens whose form is not in the table vocabulary."""
    total = oov = 0
    for tok in corpus.tokens():
        total += 1
        oov += tok.form not in table.index
    return oov / total if total else 0.0


def merge_tables(a: EmbeddingTable, b: EmbeddingTable) -> EmbeddingTable:
    """Union of two aligned tables: shared words and buckets are averaged."""
    if a.dim != b.dim:
        raise UsageError("cannot merge tables of different dimension")
    if a.use_subwords and b.use_subwords and a.bucket_vectors.shape != b.bucket_vectors.shape:
        raise UsageError("cannot merge tables with different bucket counts")
    words = list(a.words) + [w for w in b.words if w not in a.index]
    counts, wv, cv = [], [], []
    for w in words:
        ia, ib = a.index.get(w), b.index.get(w)
        if ia is not None and ib is not None:
            counts.append(a.counts[ia] + b.counts[ib])
            wv.append((a.word_vectors[ia] + b.word_vectors[ib]) / 2)
            cv.append((a.context_vectors[ia] + b.context_vectors[ib]) / 2)
        elif ia is not None:
            counts.append(a.counts[ia]); wv.append(a.word_vectors[ia]); cv.append(a.context_vectors[ia])
        else:
            counts.append(b.counts[ib]); wv.append(b.word_vectors[ib]); cv.append(b.context_vectors[ib])
    buckets = (a.bucket_vectors + b.bucket_vectors) / 2
    return EmbeddingTable(words, counts, np.array(wv), buckets, np.array(cv), a.config, a.use_subwords)
