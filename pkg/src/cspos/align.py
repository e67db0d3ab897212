"""Supervised orthogonal Procrustes mapping between two embedding spaces."""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np

from .embed.table import EmbeddingTable
from .errors import DataError, FitError, UsageError

log = logging.getLogger(__name__)

PROJECTION_MAGIC = b"CSPRJ1"


def read_dictionary(path) -> list[tuple[str, str]]:
    pairs = []
    seen = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected 'source<TAB>target'")
        pair = (parts[0], parts[1])
        if pair not in seen:
            seen.add(pair)
            pairs.append(pair)
    return pairs


def write_dictionary(pairs, path) -> None:
    Path(path).write_text("".join(f"{a}\t{b}\n" for a, b in pairs), encoding="utf-8")


def _normalize_rows(m):
    n = np.linalg.norm(m, axis=1, keepdims=True)
    n[n == 0] = 1.0
    return m / n


def usable_pairs(src: EmbeddingTable, tgt: EmbeddingTable, pairs):
    """Keep unique pairs whose words exist in both vocabularies; returns (kept, dropped count)."""
    kept, seen = [], set()
    for a, b in pairs:
        if (a, b) in seen or a not in src.index or b not in tgt.index:
            continue
        seen.add((a, b))
        kept.append((a, b))
    dropped = len(pairs) - len(kept)
    if dropped:
        log.warning("dropped %d dictionary pairs (duplicates or out of vocabulary)", dropped)
    return kept, dropped


def procrustes_fit(src: EmbeddingTable, tgt: EmbeddingTable, pairs) -> np.ndarray:
    """Orthogonal W minimizing ||W X - Y||_F over row-normalized dictionary vectors.

    W = U V^T with U S V^T the SVD of Y X^T (vectors as columns).
    """
    if src.dim != tgt.dim:
        raise UsageError(f"dimension mismatch: {src.dim} vs {tgt.dim}")
    kept, _ = usable_pairs(src, tgt, pairs)
    if len(kept) < src.dim:
        raise FitError(f"need at least {src.dim} usable dictionary pairs, have {len(kept)}")
    X = _normalize_rows(np.stack([src.lookup(a) for a, _ in kept]).astype(np.float64))
    Y = _normalize_rows(np.stack([tgt.lookup(b) for _, b in kept]).astype(np.float64))
    return fit_rotation(X, Y)


def fit_rotation(X, Y) -> np.ndarray:
    """Rotation for row-stacked paired vectors ``X`` (n, d) and ``Y`` (n, d)."""
    u, _, vt = np.linalg.svd(Y.T @ X)
    return u @ vt


def project(table: EmbeddingTable, W) -> EmbeddingTable:
    """Apply ``v -> W v`` to every word, bucket and context vector."""
    W = np.asarray(W)
    if W.shape != (table.dim, table.dim):
        raise UsageError(f"projection is {W.shape}, table dimension is {table.dim}")
    Wt = W.T.astype(np.float64)
    return table.replace(
        word_vectors=(table.word_vectors @ Wt).astype(np.float32),
        bucket_vectors=(table.bucket_vectors @ Wt).astype(np.float32),
        context_vectors=(table.context_vectors @ Wt).astype(np.float32),
    )


def induce_dictionary(src: EmbeddingTable, tgt: EmbeddingTable, W, k: int = 1, words=None):
    """Top-k target words by cosine for each source word; ties go to the lower target index."""
    if k < 1:
        raise UsageError("k must be >= 1")
    words = list(src.words if words is None else words)
    k = min(k, len(tgt.words))
    S = _normalize_rows(np.stack([src.lookup(w) for w in words]).astype(np.float64) @ np.asarray(W, np.float64).T)
    T = _normalize_rows(tgt.lookup_many(tgt.words).astype(np.float64))
    sims = S @ T.T
    out = []
    for w, row in zip(words, sims):
        order = np.argsort(-row, kind="stable")[:k]
        out.append((w, [tgt.words[j] for j in order]))
    return out


def precision_at_1(src, tgt, W, pairs) -> float:
    gold: dict[str, set] = {}
    for a, b in pairs:
        gold.setdefault(a, set()).add(b)
    induced = induce_dictionary(src, tgt, W, 1, list(gold))
    return sum(cands[0] in gold[w] for w, cands in induced) / len(induced)


def projection_bytes(W) -> bytes:
    W = np.ascontiguousarray(W, dtype="<f8")
    return PROJECTION_MAGIC + struct.pack("<II", *W.shape) + W.tobytes()


def save_projection(W, path) -> None:
    Path(path).write_bytes(projection_bytes(W))


def load_projection(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:6] != PROJECTION_MAGIC:
        raise DataError(f"{path}: not a projection file (bad magic)")
    r, c = struct.unpack_from("<II", data, 6)
    return np.frombuffer(data, "<f8", r * c, 14).reshape(r, c).copy()
