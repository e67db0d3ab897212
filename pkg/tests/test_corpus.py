from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cspos.corpus import (PAD, UNK, UNK_INDEX, UPOS_TAGS, LID_TAGS, AnnotatedSentence, Corpus, Token,
                          build_shared_vocab, build_vocab, corpus_stats, parse_conllu_like, parse_raw,
                          read_corpus, serialize_conllu_like, serialize_raw, write_corpus)
from cspos.errors import ParseError, UsageError, ValidationError

from conftest import random_corpus


def _train(*lines):
    return Corpus(tuple(AnnotatedSentence.from_lists(l.split(), ["NOUN"] * len(l.split()), ["LANG1"] * len(l.split()))
                        for l in lines), "TRAIN")


def test_parse_minimal():
    c = parse_conllu_like("1\tel\tDET\tLANG1\n2\tbook\tNOUN\tLANG2\n\n")
    assert len(c) == 1 and c.token_count == 2
    assert c.sentences[0].forms == ["el", "book"]
    assert c.sentences[0].lid == ["LANG1", "LANG2"]


def test_parse_empty():
    assert len(parse_conllu_like("")) == 0


def test_parse_wrong_columns_reports_line():
    with pytest.raises(ParseError) as e:
        parse_conllu_like("1\tel\tDET\n")
    assert e.value.line == 1


def test_parse_error_line_number_counts_comments():
    text = "# sent 1\n1\ta\tNOUN\tLANG1\n\n# sent 2\n1\tb\tNOUN\n"
    with pytest.raises(ParseError) as e:
        parse_conllu_like(text)
    assert e.value.line == 5


@pytest.mark.parametrize("bad,label", [("NOUNX", "NOUNX"), ("LANG9", "LANG9")])
def test_unknown_label_named(bad, label):
    line = f"1\ta\t{bad}\tLANG1\n" if bad.startswith("NOUN") else f"1\ta\tNOUN\t{bad}\n"
    with pytest.raises(ValidationError) as e:
        parse_conllu_like(line)
    assert e.value.label == label
    assert label in str(e.value)


def test_comments_ignored_and_roundtrip():
    text = "# id 1\n1\tel\tDET\tLANG1\n2\tbook\tNOUN\tLANG2\n\n1\t.\tPUNCT\tOTHER\n"
    c = parse_conllu_like(text)
    assert len(c) == 2
    again = parse_conllu_like(serialize_conllu_like(c))
    assert again.sentences == c.sentences


def test_token_rejects_whitespace():
    with pytest.raises(ValidationError):
        Token("a b", "NOUN", "LANG1")
    with pytest.raises(ValidationError):
        Token("", "NOUN", "LANG1")


def test_empty_sentence_rejected():
    with pytest.raises(Exception):
        AnnotatedSentence(())


forms = st.text(alphabet="abcdefxyz<>#", min_size=1, max_size=6)
token = st.tuples(forms, st.sampled_from(UPOS_TAGS), st.sampled_from(LID_TAGS))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(token, min_size=1, max_size=6), max_size=6))
def test_roundtrip_property(sents):
    c = Corpus(tuple(AnnotatedSentence(tuple(Token(*t) for t in s)) for s in sents), "TRAIN")
    assert parse_conllu_like(serialize_conllu_like(c)).sentences == c.sentences


def test_raw_roundtrip(tmp_path):
    c = parse_raw("a b c\n\n d  e \n")
    assert [s.forms for s in c] == [["a", "b", "c"], ["d", "e"]]
    assert c.split == "RAW"
    write_corpus(c, tmp_path / "r.txt")
    assert (tmp_path / "r.txt").read_text() == serialize_raw(c)
    assert read_corpus(tmp_path / "r.txt", "RAW").sentences == c.sentences


def test_vocab_frequency_order():
    v = build_vocab(_train("a a b"))
    assert v.itos == (PAD, UNK, "a", "b")
    assert v.index("a") == 2


def test_vocab_min_count():
    v = build_vocab(_train("a a b"), min_count=2)
    assert v.itos == (PAD, UNK, "a")
    assert v.index("b") == UNK_INDEX


def test_vocab_order_independent():
    assert build_vocab(_train("b a a")) == build_vocab(_train("a b a"))
    assert build_vocab(_train("x y", "y z")) == build_vocab(_train("y z", "x y"))


def test_vocab_requires_train():
    c = _train("a").with_split("DEV")
    with pytest.raises(UsageError):
        build_vocab(c)


def test_vocab_frequent_tokens_never_unk(rng):
    c = random_corpus(rng, 50, split="TRAIN")
    counts = Counter(t.form for t in c.tokens())
    v = build_vocab(c, min_count=2)
    for w, n in counts.items():
        assert (v.index(w) != UNK_INDEX) == (n >= 2)


def test_shared_vocab_covers_both():
    v = build_shared_vocab([_train("a b"), _train("c")])
    assert {"a", "b", "c"} <= set(v.itos)


def test_stats_simple():
    s = corpus_stats(_train("a b c", "d e f g"))
    assert s["token_count"] == 7 and s["sentence_count"] == 2
    assert s["lid"] == {"LANG1": 7, "LANG2": 0, "OTHER": 0}


def test_stats_recount_and_permutation(rng):
    c = random_corpus(rng, 50)
    s = corpus_stats(c)
    lid, pos, n = Counter(), Counter(), 0
    for sent in c.sentences:
        for t in sent.tokens:
            lid[t.lid] += 1
            pos[t.pos] += 1
            n += 1
    assert s["token_count"] == n
    assert {k: v for k, v in s["lid"].items() if v} == dict(lid)
    assert {k: v for k, v in s["pos"].items() if v} == dict(pos)
    perm = Corpus(tuple(c.sentences[i] for i in rng.permutation(len(c))), c.split)
    assert corpus_stats(perm) == s
