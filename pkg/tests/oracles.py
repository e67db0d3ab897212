"""Independent reference computations used by the unit and acceptance tests."""

import itertools
import math

import numpy as np

from cspos.corpus import AnnotatedSentence, Corpus, build_vocab
from cspos.nn.crf import FORBIDDEN
from cspos.taggers import TaggerArch, TaggerModel


def random_crf(rng, L, K):
    em = rng.normal(scale=2.0, size=(L, K))
    T = rng.normal(size=(K + 2, K + 2))
    T[:, K] = FORBIDDEN
    T[K + 1, :] = FORBIDDEN
    return em, T


def enumerate_paths(em, T):
    """Every tag path with its score, in lexicographic order of the path."""
    L, K = em.shape
    out = []
    for path in itertools.product(range(K), repeat=L):
        s = T[K, path[0]] + T[path[-1], K + 1]
        for t in range(L):
            s += em[t, path[t]]
            if t:
                s += T[path[t - 1], path[t]]
        out.append((list(path), s))
    return out


def brute_log_partition(em, T):
    scores = [s for _, s in enumerate_paths(em, T)]
    m = max(scores)
    return m + math.log(math.fsum(math.exp(s - m) for s in scores))


def brute_viterbi(em, T):
    """Best path; among equal scores the lexicographically smallest path wins."""
    best_path, best = None, -math.inf
    for path, s in enumerate_paths(em, T):
        if s > best:
            best_path, best = path, s
    return best_path, best


def toy_tagger(seed=0, dim=8, hidden=3, K=3, L=4, kind="BILSTM_CRF"):
    """A float64 BiLSTM-CRF with one training sentence of length L."""
    rng = np.random.default_rng(seed)
    forms = [f"w{i}" for i in range(L)]
    tags = ["NOUN", "VERB", "DET"][:K]
    gold = [tags[int(rng.integers(K))] for _ in range(L)]
    lids = [["LANG1", "LANG2"][int(rng.integers(2))] for _ in range(L)]
    corpus = Corpus((AnnotatedSentence.from_lists(forms, gold, lids),), "TRAIN")
    vocab = build_vocab(corpus)
    heads = {"pos": tags}
    if kind == "MTL_POS_LID":
        heads["lid"] = ["LANG1", "LANG2"]
    arch = TaggerArch(kind=kind, hidden=hidden, dropout=0.0, embedding_dim=dim)
    model = TaggerModel(arch, vocab, heads, seed=seed, dtype=np.float64)
    for p in model.parameters():
        p.value[...] = rng.uniform(-0.8, 0.8, size=p.shape) if "transitions" not in p.name else p.value
    K_ = len(tags)
    T = model.crfs[0].transitions.value
    T[:K_, :K_] = rng.normal(size=(K_, K_))
    T[K_, :K_] = rng.normal(size=K_)
    T[:K_, K_ + 1] = rng.normal(size=K_)
    ids, fb = model.encode_words(forms)
    targets = {"pos": [tags.index(t) for t in gold]}
    if kind == "MTL_POS_LID":
        targets["lid"] = [heads["lid"].index(x) for x in lids]
    return model, ids, fb, targets


def finite_difference_check(model, ids, fb, targets, h=1e-4):
    """Largest relative error between analytic and central-difference gradients, per parameter."""
    model.zero_grad()
    model.loss(ids, fb, targets, training=False)
    model.backward()
    worst = {}
    for p in model.parameters():
        analytic = p.grad.copy()
        errs = []
        flat = p.value.reshape(-1)
        for k in range(flat.size):
            old = flat[k]
            flat[k] = old + h
            up = model.loss(ids, fb, targets, training=False)
            flat[k] = old - h
            down = model.loss(ids, fb, targets, training=False)
            flat[k] = old
            numeric = (up - down) / (2 * h)
            a = analytic.reshape(-1)[k]
            scale = max(abs(a), abs(numeric))
            errs.append(0.0 if scale < 1e-9 else abs(a - numeric) / scale)
        worst[p.name] = max(errs)
    model._encoded_state = None
    return worst
