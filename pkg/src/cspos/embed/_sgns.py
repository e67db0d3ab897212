"""Numba kernels for skip-gram with negative sampling over subword-composed inputs.

Two xorshift64* streams keep the run reproducible: stream A drives
subsampling and window draws (so the pair count can be replayed exactly
before training), stream B drives negative sampling.
"""

import numpy as np
from numba import njit, prange

_MULT = np.uint64(2685821657736338717)
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True)
def _next(state):
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return x * _MULT


@njit(cache=True)
def _uniform(state):
    return (_next(state) >> np.uint64(11)) * _TO_UNIT


@njit(cache=True)
def _randint(state, n):
    return np.int64(_next(state) >> np.uint64(33)) % n


@njit(cache=True)
def _seed_state(seed, stream):
    s = np.empty(1, dtype=np.uint64)
    # splitmix64 scramble so small seeds give well-mixed states
    z = np.uint64(seed) * np.uint64(0x9E3779B97F4A7C15) + np.uint64(stream) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    if z == np.uint64(0):
        z = np.uint64(0x2545F4914F6CDD1D)
    s[0] = z
    return s


@njit(cache=True)
def _kept(tokens, start, end, keep_prob, state, buf):
    n = 0
    for k in range(start, end):
        w = tokens[k]
        if keep_prob[w] >= 1.0 or _uniform(state) < keep_prob[w]:
            buf[n] = w
            n += 1
    return n


@njit(cache=True)
def count_pairs(tokens, sent_offsets, s_lo, s_hi, keep_prob, window, epochs, seed, stream):
    state = _seed_state(seed, stream)
    buf = np.empty(max(1, tokens.shape[0]), dtype=np.int32)
    total = 0
    for _ in range(epochs):
        for s in range(s_lo, s_hi):
            n = _kept(tokens, sent_offsets[s], sent_offsets[s + 1], keep_prob, state, buf)
            for i in range(n):
                w = 1 + _randint(state, window)
                lo = max(0, i - w)
                hi = min(n, i + w + 1)
                total += hi - lo - 1
    return total


@njit(cache=True)
def _log_sigmoid(x):
    if x >= 0:
        return -np.log1p(np.exp(-x))
    return x - np.log1p(np.exp(x))


@njit(cache=True)
def train_range(tokens, sent_offsets, s_lo, s_hi, ng_offsets, ng_ids, keep_prob, neg_table,
                word_vecs, bucket_vecs, ctx_vecs, window, negatives, epochs, lr0, total_pairs,
                seed, stream, trace, trace_every):
    dim = word_vecs.shape[1]
    vocab = word_vecs.shape[0]
    state_a = _seed_state(seed, stream)
    state_b = _seed_state(seed, stream + 1000003)
    buf = np.empty(max(1, tokens.shape[0]), dtype=np.int32)
    hidden = np.empty(dim, dtype=np.float32)
    grad = np.empty(dim, dtype=np.float32)
    done = 0
    ema = 0.0
    n_trace = 0
    table_size = neg_table.shape[0]
    for _ in range(epochs):
        for s in range(s_lo, s_hi):
            n = _kept(tokens, sent_offsets[s], sent_offsets[s + 1], keep_prob, state_a, buf)
            for i in range(n):
                w = 1 + _randint(state_a, window)
                lo = max(0, i - w)
                hi = min(n, i + w + 1)
                center = buf[i]
                g0 = ng_offsets[center]
                g1 = ng_offsets[center + 1]
                scale = np.float32(1.0 / (1 + g1 - g0))
                for j in range(lo, hi):
                    if j == i:
                        continue
                    lr = lr0 * (1.0 - done / total_pairs) if total_pairs > 0 else lr0
                    if lr < 0.0:
                        lr = 0.0
                    # composed input vector: mean of word + n-gram buckets
                    for d in range(dim):
                        hidden[d] = word_vecs[center, d]
                    for q in range(g0, g1):
                        b = ng_ids[q]
                        for d in range(dim):
                            hidden[d] += bucket_vecs[b, d]
                    for d in range(dim):
                        hidden[d] *= scale
                        grad[d] = 0.0
                    loss = 0.0
                    for k in range(negatives + 1):
                        if k == 0:
                            target = buf[j]
                            label = 1.0
                        else:
                            if vocab < 2:
                                break
                            target = neg_table[_randint(state_b, table_size)]
                            while target == buf[j]:
                                target = neg_table[_randint(state_b, table_size)]
                            label = 0.0
                        dot = 0.0
                        for d in range(dim):
                            dot += ctx_vecs[target, d] * hidden[d]
                        if label > 0.5:
                            loss -= _log_sigmoid(dot)
                        else:
                            loss -= _log_sigmoid(-dot)
                        score = 1.0 / (1.0 + np.exp(-dot))
                        alpha = np.float32(lr * (label - score))
                        for d in range(dim):
                            grad[d] += alpha * ctx_vecs[target, d]
                            ctx_vecs[target, d] += alpha * hidden[d]
                    for d in range(dim):
                        word_vecs[center, d] += grad[d]
                    for q in range(g0, g1):
                        b = ng_ids[q]
                        for d in range(dim):
                            bucket_vecs[b, d] += grad[d]
                    if done == 0:
                        ema = loss
                    else:
                        ema += (loss - ema) / 1000.0
                    done += 1
                    if trace_every > 0 and done % trace_every == 0 and n_trace < trace.shape[0]:
                        trace[n_trace] = ema
                        n_trace += 1
    return done, n_trace


@njit(parallel=True, cache=True)
def train_parallel(tokens, sent_offsets, shard_bounds, shard_pairs, ng_offsets, ng_ids, keep_prob, neg_table,
                   word_vecs, bucket_vecs, ctx_vecs, window, negatives, epochs, lr0, seed, trace, trace_every):
    # unsynchronized updates across shards: results are statistically, not bitwise, reproducible
    n_shards = shard_bounds.shape[0] - 1
    dummy = np.empty(0, dtype=np.float64)
    for k in prange(n_shards):
        if k == 0:
            train_range(tokens, sent_offsets, shard_bounds[k], shard_bounds[k + 1], ng_offsets, ng_ids,
                        keep_prob, neg_table, word_vecs, bucket_vecs, ctx_vecs, window, negatives, epochs,
                        lr0, shard_pairs[k], seed, 2 * k, trace, trace_every)
        else:
            train_range(tokens, sent_offsets, shard_bounds[k], shard_bounds[k + 1], ng_offsets, ng_ids,
                        keep_prob, neg_table, word_vecs, bucket_vecs, ctx_vecs, window, negatives, epochs,
                        lr0, shard_pairs[k], seed, 2 * k, dummy, 0)
