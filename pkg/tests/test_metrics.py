from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cspos.corpus import AnnotatedSentence, Corpus, UPOS_TAGS
from cspos.errors import UndefinedRateError, UsageError
from cspos.metrics import (MetricsReport, accuracy, aggregate_seeds, confusion, cs_fragments, cs_point_rate,
                           error_ranking, evaluate, render_error_table, report_text, report_tsv)
from cspos.taggers import TaggedOutput

from conftest import random_corpus


def _corpus(pos_lists, lid_lists=None):
    lid_lists = lid_lists or [["LANG1"] * len(p) for p in pos_lists]
    return Corpus(tuple(AnnotatedSentence.from_lists([f"t{i}" for i in range(len(p))], p, l)
                        for p, l in zip(pos_lists, lid_lists)), "TEST")


def test_accuracy_basic():
    g = _corpus([["NOUN", "VERB"], ["DET", "NOUN"]])
    assert accuracy(g, TaggedOutput([["NOUN", "VERB"], ["DET", "NOUN"]])) == 1.0
    assert accuracy(g, TaggedOutput([["NOUN", "VERB"], ["DET", "ADJ"]])) == 0.75


def test_accuracy_length_mismatch_names_sentence():
    g = _corpus([["NOUN"], ["DET", "NOUN"]])
    with pytest.raises(UsageError, match="sentence 1"):
        accuracy(g, [["NOUN"], ["DET"]])


def test_lid_accuracy_counts_all_tokens():
    g = _corpus([["NOUN", "PUNCT"]], [["LANG1", "OTHER"]])
    assert accuracy(g, TaggedOutput([["NOUN", "PUNCT"]], [["LANG1", "LANG1"]]), "LID") == 0.5


def _perturb(corpus, rng, p=0.3):
    out = []
    for s in corpus:
        out.append([t if rng.random() > p else UPOS_TAGS[int(rng.integers(len(UPOS_TAGS)))] for t in s.pos])
    return out


def test_accuracy_confusion_ranking_recount(rng):
    for _ in range(5):
        g = random_corpus(rng, 40)
        pred = _perturb(g, rng)
        flat = [(a, b) for s, p in zip(g, pred) for a, b in zip(s.pos, p)]
        assert accuracy(g, pred) == sum(a == b for a, b in flat) / len(flat)
        conf = confusion(g, pred)
        assert conf == dict(Counter(flat))
        assert sum(conf.values()) == len(flat)
        errs = Counter(f"{a}>{b}" for a, b in flat if a != b)
        expect = sorted(errs.items(), key=lambda kv: (-kv[1], kv[0]))
        got = error_ranking(g, pred)
        assert [n for n, _ in got] == [n for n, _ in expect]
        assert all(abs(pct - 100 * c / sum(errs.values())) < 1e-12 for (_, pct), (_, c) in zip(got, expect))
        assert abs(sum(p for _, p in got) - 100) < 0.01


def test_error_ranking_examples():
    g = _corpus([["NOUN"]])
    assert error_ranking(g, [["VERB"]]) == [("NOUN>VERB", 100.0)]
    g = _corpus([["ADJ", "ADJ", "ADJ", "DET"]])
    assert error_ranking(g, [["ADV", "ADV", "ADV", "NUM"]]) == [("ADJ>ADV", 75.0), ("DET>NUM", 25.0)]
    assert error_ranking(g, [["ADJ", "ADJ", "ADJ", "DET"]]) == []


def test_error_table_layout():
    text = render_error_table([("ADJ>NOUN", 19.0), ("NOUN>ADJ", 11.5)])
    lines = text.splitlines()
    assert lines[0].startswith("Error Type")
    assert "ADJ > NOUN" in lines[2] and lines[2].endswith("19.00%")


def test_cs_point_rate_examples():
    assert cs_point_rate([["LANG1", "LANG2", "LANG1"]]) == 1.0
    assert cs_point_rate([["LANG1"] * 4]) == 0.0
    with pytest.raises(UndefinedRateError):
        cs_point_rate([["LANG1", "OTHER", "LANG2"]])


lid = st.sampled_from(["LANG1", "LANG2", "OTHER"])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(lid, min_size=1, max_size=10), min_size=1, max_size=5))
def test_cs_rate_swap_invariant(seqs):
    swap = {"LANG1": "LANG2", "LANG2": "LANG1", "OTHER": "OTHER"}
    swapped = [[swap[x] for x in s] for s in seqs]
    try:
        r = cs_point_rate(seqs)
    except UndefinedRateError:
        with pytest.raises(UndefinedRateError):
            cs_point_rate(swapped)
        return
    assert r == cs_point_rate(swapped)


def brute_fragments(lids):
    """Independent scanner: drop OTHER, find runs over the compressed sequence, map back."""
    n1, n2 = lids.count("LANG1"), lids.count("LANG2")
    if not n1 or not n2:
        return []
    minority = "LANG2" if n2 <= n1 else "LANG1"
    positions = [i + 1 for i, x in enumerate(lids) if x != "OTHER"]
    labels = [x for x in lids if x != "OTHER"]
    runs, i = [], 0
    while i < len(labels):
        j = i
        while j < len(labels) and labels[j] == labels[i]:
            j += 1
        if labels[i] == minority:
            runs.append((positions[i], j - i))
        i = j
    return runs


def test_cs_fragments_examples():
    assert cs_fragments(["LANG1", "LANG2", "LANG2", "LANG1"]) == [(2, 2)]
    assert cs_fragments(["LANG1"] * 3) == []
    assert cs_fragments(["LANG1", "LANG2", "OTHER", "LANG2", "LANG1", "LANG1"]) == [(2, 2)]
    # tie goes to LANG2
    assert cs_fragments(["LANG1", "LANG2"]) == [(2, 1)]


def test_cs_fragments_scanner(rng):
    for _ in range(100):
        L = int(rng.integers(1, 15))
        seq = [["LANG1", "LANG2", "OTHER"][int(rng.integers(3))] for _ in range(L)]
        frags = cs_fragments(seq)
        assert frags == brute_fragments(seq)
        assert sum(n for _, n in frags) <= L
        ends = [s for s, _ in frags]
        assert ends == sorted(ends)


def test_aggregate_means():
    a = MetricsReport(0.90, seed=1)
    b = MetricsReport(0.92, seed=2)
    agg = aggregate_seeds([a, b])
    assert abs(agg.pos_accuracy - 0.91) < 1e-12
    assert agg.per_seed["pos_accuracy"] == [0.90, 0.92]
    assert aggregate_seeds([a]).scalars() == a.scalars()


def test_aggregate_random_recompute(rng):
    reps = [MetricsReport(float(rng.random()), float(rng.random()), float(rng.random()), 2.0, float(rng.random()),
                          seed=i) for i in range(5)]
    agg = aggregate_seeds(reps)
    for k in ("pos_accuracy", "lid_accuracy", "cs_point_rate", "oov_rate"):
        total = 0.0
        for r in reps:
            total += getattr(r, k)
        assert abs(getattr(agg, k) - total / 5) < 1e-12


def test_aggregate_schema_mismatch():
    with pytest.raises(UsageError):
        aggregate_seeds([MetricsReport(0.9, lid_accuracy=0.8), MetricsReport(0.9)])
    with pytest.raises(UsageError):
        aggregate_seeds([])


def test_evaluate_and_render(small_synth):
    test = small_synth.test
    rep = evaluate(test, TaggedOutput([s.pos for s in test], [s.lid for s in test]), seed=3)
    assert rep.pos_accuracy == 1.0 and rep.lid_accuracy == 1.0
    assert rep.error_ranking == []
    assert sum(rep.confusion.values()) == test.token_count
    tsv = report_tsv(rep)
    assert tsv.splitlines()[0] == "metric\tseed\tvalue"
    assert "pos_accuracy\t3\t1.000000" in tsv
    assert "POS accuracy (%)      100.00" in report_text(rep)
    assert MetricsReport.from_dict(rep.to_dict()) == rep
