import logging

import numpy as np
import pytest

from cspos.align import (fit_rotation, induce_dictionary, load_projection, precision_at_1, procrustes_fit, project,
                         read_dictionary, save_projection, usable_pairs, write_dictionary)
from cspos.embed import EmbeddingConfig, EmbeddingTable
from cspos.errors import DataError, FitError, UsageError


def random_rotation(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))


def word_table(words, vecs, dim):
    cfg = EmbeddingConfig(dim=dim, bucket_count=1)
    return EmbeddingTable(words, np.ones(len(words)), vecs, np.zeros((1, dim)), np.zeros((len(words), dim)), cfg,
                          use_subwords=False)


def planted(rng, n=300, d=20, noise=0.0):
    X = rng.normal(size=(n, d))
    R = random_rotation(rng, d)
    Y = X @ R.T + noise * rng.normal(size=(n, d))
    src = word_table([f"s{i}" for i in range(n)], X, d)
    tgt = word_table([f"t{i}" for i in range(n)], Y, d)
    return src, tgt, R, [(f"s{i}", f"t{i}") for i in range(n)]


def test_identity_alignment(rng):
    src, _, _, _ = planted(rng)
    pairs = [(w, w) for w in src.words]
    W = procrustes_fit(src, src, pairs)
    np.testing.assert_allclose(W, np.eye(src.dim), atol=1e-6)


def test_planted_rotation(rng):
    src, tgt, R, pairs = planted(rng)
    W = procrustes_fit(src, tgt, pairs)
    assert np.linalg.norm(W - R) < 1e-4
    assert np.abs(W.T @ W - np.eye(src.dim)).max() < 1e-6


def test_noisy_identity(rng):
    X = rng.normal(size=(200, 10))
    src = word_table([f"w{i}" for i in range(200)], X, 10)
    tgt = word_table([f"w{i}" for i in range(200)], X + 0.01 * rng.normal(size=X.shape), 10)
    W = procrustes_fit(src, tgt, [(w, w) for w in src.words])
    assert np.linalg.norm(W - np.eye(10)) < 0.05
    assert np.abs(W.T @ W - np.eye(10)).max() < 1e-6


def test_objective_not_worse_than_identity(rng):
    for _ in range(10):
        X = rng.normal(size=(40, 6))
        Y = rng.normal(size=(40, 6))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        Y /= np.linalg.norm(Y, axis=1, keepdims=True)
        W = fit_rotation(X, Y)
        assert np.linalg.norm(X @ W.T - Y) <= np.linalg.norm(X - Y) + 1e-12


def test_fit_errors(rng):
    src, tgt, _, pairs = planted(rng, n=30, d=20)
    with pytest.raises(FitError):
        procrustes_fit(src, tgt, pairs[:10])
    other = word_table(["a"], np.zeros((1, 5)), 5)
    with pytest.raises(UsageError):
        procrustes_fit(src, other, [("s0", "a")])


def test_filtering_counts(rng, caplog):
    src, tgt, _, pairs = planted(rng, n=30, d=5)
    noisy = pairs + [pairs[0], ("missing", "t1"), ("s1", "missing")]
    with caplog.at_level(logging.WARNING):
        kept, dropped = usable_pairs(src, tgt, noisy)
    assert dropped == 3 and kept == pairs
    assert "dropped 3" in caplog.text


def test_project_identity_and_isometry(rng):
    src, _, _, _ = planted(rng, n=50, d=8)
    same = project(src, np.eye(8))
    np.testing.assert_allclose(same.word_vectors, src.word_vectors, rtol=1e-6)
    Q = random_rotation(rng, 8)
    p = project(src, Q)
    A, B = src.lookup_many(src.words), p.lookup_many(p.words)
    cos = lambda M: (M / np.linalg.norm(M, axis=1, keepdims=True)) @ (M / np.linalg.norm(M, axis=1, keepdims=True)).T  # noqa: E731
    np.testing.assert_allclose(cos(A), cos(B), atol=1e-6)
    np.testing.assert_allclose(np.linalg.norm(A, axis=1), np.linalg.norm(B, axis=1), rtol=1e-5)
    assert p.words == src.words
    with pytest.raises(UsageError):
        project(src, np.eye(3))


def test_projection_matches_target(rng):
    src, tgt, R, pairs = planted(rng)
    W = procrustes_fit(src, tgt, pairs)
    p = project(src, W)
    for a, b in pairs[:50]:
        u, v = p.lookup(a), tgt.lookup(b)
        assert u @ v / np.linalg.norm(u) / np.linalg.norm(v) > 0.99


def test_induce_identity_and_clamp(rng):
    src, _, _, _ = planted(rng, n=20, d=6)
    out = induce_dictionary(src, src, np.eye(6), k=1)
    assert all(c[0] == w for w, c in out)
    full = induce_dictionary(src, src, np.eye(6), k=100, words=["s3"])
    assert len(full[0][1]) == 20 and full[0][1][0] == "s3"
    with pytest.raises(UsageError):
        induce_dictionary(src, src, np.eye(6), k=0)


def test_induce_ties_by_index():
    d = 2
    src = word_table(["a"], np.array([[1.0, 0.0]]), d)
    tgt = word_table(["x", "y", "z"], np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 0.0]]), d)
    assert induce_dictionary(src, tgt, np.eye(d), k=2)[0][1] == ["y", "z"]


def test_precision_held_out(rng):
    src, tgt, R, pairs = planted(rng, n=400, d=20)
    W = procrustes_fit(src, tgt, pairs[:200])
    assert precision_at_1(src, tgt, W, pairs[200:]) >= 0.99


def test_files(tmp_path, rng):
    write_dictionary([("a", "b"), ("c", "d"), ("a", "b")], tmp_path / "d.tsv")
    assert read_dictionary(tmp_path / "d.tsv") == [("a", "b"), ("c", "d")]
    (tmp_path / "bad.tsv").write_text("a b\n")
    with pytest.raises(DataError):
        read_dictionary(tmp_path / "bad.tsv")
    Q = random_rotation(rng, 5)
    save_projection(Q, tmp_path / "w.bin")
    assert (tmp_path / "w.bin").read_bytes()[:6] == b"CSPRJ1"
    np.testing.assert_array_equal(load_projection(tmp_path / "w.bin"), Q)
    with pytest.raises(DataError):
        load_projection(tmp_path / "d.tsv")
