"""Linear-chain CRF over K tags with virtual START (index K) and STOP (index K+1).

Path score = T[START, y0] + sum_t emissions[t, y_t] + sum_t T[y_{t-1}, y_t] + T[y_{L-1}, STOP].
Transitions into START and out of STOP are pinned at ``FORBIDDEN``.
"""

from __future__ import annotations

import numpy as np

from ..errors import UsageError
from .params import Module, Parameter

FORBIDDEN = -10000.0


def _logsumexp(a, axis):
    m = np.max(a, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def init_transitions(K, dtype=np.float64):
    T = np.zeros((K + 2, K + 2), dtype=dtype)
    T[:, K] = FORBIDDEN
    T[K + 1, :] = FORBIDDEN
    return T


def _forward_alphas(emissions, T):
    L, K = emissions.shape
    trans = T[:K, :K]
    alphas = np.empty((L, K), dtype=np.result_type(emissions, T))
    alphas[0] = T[K, :K] + emissions[0]
    for t in range(1, L):
        alphas[t] = _logsumexp(alphas[t - 1][:, None] + trans, axis=0) + emissions[t]
    return alphas


def crf_log_partition(emissions, T) -> float:
    emissions = np.asarray(emissions)
    L, K = emissions.shape
    if L < 1:
        raise UsageError("CRF needs at least one position")
    alphas = _forward_alphas(emissions, T)
    return float(_logsumexp(alphas[-1] + T[:K, K + 1], axis=0))


def crf_marginals(emissions, T):
    """Forward-backward.  Returns (logZ, unary marginals (L,K), expected transition counts (K+2,K+2))."""
    emissions = np.asarray(emissions)
    L, K = emissions.shape
    trans = T[:K, :K]
    alphas = _forward_alphas(emissions, T)
    betas = np.empty_like(alphas)
    betas[-1] = T[:K, K + 1]
    for t in range(L - 2, -1, -1):
        betas[t] = _logsumexp(trans + (emissions[t + 1] + betas[t + 1])[None, :], axis=1)
    logZ = _logsumexp(alphas[-1] + T[:K, K + 1], axis=0)
    unary = np.exp(alphas + betas - logZ)
    counts = np.zeros_like(T, dtype=unary.dtype)
    counts[K, :K] = unary[0]
    counts[:K, K + 1] = unary[-1]
    for t in range(1, L):
        counts[:K, :K] += np.exp(alphas[t - 1][:, None] + trans + (emissions[t] + betas[t])[None, :] - logZ)
    return float(logZ), unary, counts


def path_score(emissions, tags, T) -> float:
    emissions = np.asarray(emissions)
    L, K = emissions.shape
    s = T[K, tags[0]] + T[tags[-1], K + 1]
    s += sum(emissions[t, tags[t]] for t in range(L))
    s += sum(T[tags[t - 1], tags[t]] for t in range(1, L))
    return float(s)


def crf_neg_log_likelihood(emissions, tags, T) -> float:
    emissions = np.asarray(emissions)
    L, K = emissions.shape
    if len(tags) != L:
        raise UsageError("gold tag sequence length differs from emissions")
    if any(not 0 <= y < K for y in tags):
        raise UsageError(f"tag index out of range [0, {K})")
    return crf_log_partition(emissions, T) - path_score(emissions, tags, T)


def crf_viterbi(emissions, T):
    """Best path and its score; ties go to the lowest tag index."""
    emissions = np.asarray(emissions)
    L, K = emissions.shape
    if L < 1:
        raise UsageError("CRF needs at least one position")
    trans = T[:K, :K]
    score = T[K, :K] + emissions[0]
    back = np.empty((L, K), dtype=np.int64)
    for t in range(1, L):
        cand = score[:, None] + trans
        back[t] = np.argmax(cand, axis=0)
        score = cand[back[t], np.arange(K)] + emissions[t]
    final = score + T[:K, K + 1]
    best = int(np.argmax(final))
    path = [best]
    for t in range(L - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return path, float(final[best])


class CRF(Module):
    """CRF output layer holding the transition matrix as a parameter."""

    def __init__(self, name, num_tags, dtype=np.float32):
        self.num_tags = num_tags
        self.transitions = Parameter(f"{name}.transitions", init_transitions(num_tags, dtype))
        K = num_tags
        mask = np.zeros((K + 2, K + 2), dtype=bool)
        mask[K, :K] = True
        mask[:K, :K] = True
        mask[:K, K + 1] = True
        self.free_mask = mask
        self._cache = None

    def forward(self, emissions, tags):
        """Negative log-likelihood of ``tags``."""
        T = self.transitions.value
        if len(tags) != emissions.shape[0]:
            raise UsageError("gold tag sequence length differs from emissions")
        if any(not 0 <= y < self.num_tags for y in tags):
            raise UsageError(f"tag index out of range [0, {self.num_tags})")
        e = emissions.astype(np.float64)
        logZ, unary, counts = crf_marginals(e, T.astype(np.float64))
        gold = path_score(e, tags, T.astype(np.float64))
        self._cache = (unary, counts, list(tags))
        return logZ - gold

    def backward(self, scale=1.0):
        """Returns d loss / d emissions and accumulates the transition gradient."""
        if self._cache is None:
            raise UsageError("CRF: backward called before forward")
        unary, counts, tags = self._cache
        K = self.num_tags
        d_em = unary.copy()
        d_em[np.arange(len(tags)), tags] -= 1.0
        d_T = counts.copy()
        d_T[K, tags[0]] -= 1.0
        d_T[tags[-1], K + 1] -= 1.0
        for a, b in zip(tags, tags[1:]):
            d_T[a, b] -= 1.0
        d_T[~self.free_mask] = 0.0
        g = self.transitions.grad
        g += (scale * d_T).astype(g.dtype)
        self._cache = None
        return (scale * d_em).astype(self.transitions.value.dtype)

    def decode(self, emissions):
        return crf_viterbi(emissions.astype(np.float64), self.transitions.value.astype(np.float64))[0]
