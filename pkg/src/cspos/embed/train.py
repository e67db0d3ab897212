"""Skip-gram with negative sampling over subword-composed input vectors."""

from __future__ import annotations

import logging
from collections import Counter

import numpy as np

from ..errors import TrainingError, UsageError
from . import _sgns
from .subword import extract_ngrams, hash_ngram
from .table import EmbeddingConfig, EmbeddingTable

log = logging.getLogger(__name__)

NEG_TABLE_SIZE = 1_000_000
TRACE_EVERY = 100


def _vocab(corpus, min_count):
    counts = Counter(t.form for t in corpus.tokens())
    kept = sorted(((w, c) for w, c in counts.items() if c >= min_count), key=lambda wc: (-wc[1], wc[0]))
    return [w for w, _ in kept], np.array([c for _, c in kept], dtype=np.int64)


def _encode(corpus, index):
    ids, offsets = [], [0]
    for sent in corpus:
        ids.extend(index[f] for f in sent.forms if f in index)
        offsets.append(len(ids))
    return np.array(ids, dtype=np.int32), np.array(offsets, dtype=np.int64)


def _ngram_csr(words, config):
    offsets = [0]
    ids: list[int] = []
    for w in words:
        ids.extend(hash_ngram(g, config.bucket_count) for g in extract_ngrams(w, config.min_ngram, config.max_ngram))
        offsets.append(len(ids))
    return np.array(offsets, dtype=np.int64), np.array(ids, dtype=np.int64)


def keep_probabilities(counts, t):
    """Probability of keeping each occurrence: sqrt(t/f) + t/f, capped at 1."""
    if t <= 0:
        return np.ones(len(counts), dtype=np.float64)
    f = counts / counts.sum()
    return np.minimum(1.0, np.sqrt(t / f) + t / f)


def negative_table(counts, size=NEG_TABLE_SIZE):
    """Unigram^0.75 sampling table of word indices."""
    p = counts.astype(np.float64) ** 0.75
    p /= p.sum()
    reps = np.maximum(1, np.round(p * size)).astype(np.int64)
    return np.repeat(np.arange(len(counts), dtype=np.int32), reps)


def train_embeddings(corpus, config: EmbeddingConfig | None = None) -> EmbeddingTable:
    config = config or EmbeddingConfig()
    config.validate()
    if len(corpus) == 0:
        raise UsageError("cannot train embeddings on an empty corpus")
    words, counts = _vocab(corpus, config.min_word_count)
    if not words:
        raise UsageError("no word reaches min_word_count")
    index = {w: i for i, w in enumerate(words)}
    tokens, sent_offsets = _encode(corpus, index)
    ng_off, ng_ids = _ngram_csr(words, config)
    keep = keep_probabilities(counts, config.subsample_t)
    neg = negative_table(counts)

    rng = np.random.default_rng(config.seed)
    V, d, B = len(words), config.dim, config.bucket_count
    bound = 1.0 / d
    word_vecs = rng.uniform(-bound, bound, size=(V, d)).astype(np.float32)
    bucket_vecs = rng.uniform(-bound, bound, size=(B, d)).astype(np.float32)
    ctx_vecs = np.zeros((V, d), dtype=np.float32)

    n_sent = len(sent_offsets) - 1
    if config.workers == 1:
        total = _sgns.count_pairs(tokens, sent_offsets, 0, n_sent, keep, config.window, config.epochs,
                                  config.seed, 0)
        trace = np.zeros(total // TRACE_EVERY + 1, dtype=np.float64)
        done, n_trace = _sgns.train_range(
            tokens, sent_offsets, 0, n_sent, ng_off, ng_ids, keep, neg, word_vecs, bucket_vecs, ctx_vecs,
            config.window, config.negatives, config.epochs, config.initial_lr, total, config.seed, 0,
            trace, TRACE_EVERY)
        trace = trace[:n_trace]
    else:
        k = min(config.workers, n_sent)
        bounds = np.linspace(0, n_sent, k + 1).astype(np.int64)
        pairs = np.array([_sgns.count_pairs(tokens, sent_offsets, bounds[i], bounds[i + 1], keep, config.window,
                                            config.epochs, config.seed, 2 * i) for i in range(k)], dtype=np.int64)
        trace = np.zeros(pairs[0] // TRACE_EVERY + 1, dtype=np.float64)
        _sgns.train_parallel(tokens, sent_offsets, bounds, pairs, ng_off, ng_ids, keep, neg, word_vecs,
                             bucket_vecs, ctx_vecs, config.window, config.negatives, config.epochs,
                             config.initial_lr, config.seed, trace, TRACE_EVERY)
        trace = trace[trace != 0]
        total = int(pairs.sum())
    for name, m in (("word", word_vecs), ("bucket", bucket_vecs), ("context", ctx_vecs)):
        if not np.isfinite(m).all():
            raise TrainingError(f"non-finite {name} vectors after embedding training")
    log.info("trained %d words x %d dims over %d pairs", V, d, total)
    table = EmbeddingTable(words, counts, word_vecs, bucket_vecs, ctx_vecs, config)
    table.loss_trace = trace
    return table
