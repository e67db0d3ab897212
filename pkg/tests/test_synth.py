import pytest

from cspos.corpus import LID_TAGS, UPOS_TAGS, serialize_conllu_like, serialize_raw
from cspos.errors import ConfigError
from cspos.metrics import cs_point_rate
from cspos.synth import SynthConfig, config_from_dict, config_to_dict, generate_synthetic

SMALL = dict(lexicon_size_lang1=120, lexicon_size_lang2=120, n_train=60, n_dev=10, n_test=10,
             n_raw_mono=50, n_raw_cs=50)


def test_zero_rate_is_monolingual():
    d = generate_synthetic(SynthConfig(cs_point_rate=0.0, **SMALL))
    for s in list(d.train) + list(d.raw_cs):
        assert len({l for l in s.lid if l != "OTHER"}) <= 1
    assert cs_point_rate(d.train) == 0.0


def test_deterministic_bytes():
    a = generate_synthetic(SynthConfig(seed=7, **SMALL))
    b = generate_synthetic(SynthConfig(seed=7, **SMALL))
    for name in ("train", "dev", "test"):
        assert serialize_conllu_like(getattr(a, name)) == serialize_conllu_like(getattr(b, name))
    assert serialize_raw(a.raw_cs) == serialize_raw(b.raw_cs)
    c = generate_synthetic(SynthConfig(seed=8, **SMALL))
    assert serialize_conllu_like(a.train) != serialize_conllu_like(c.train)


def test_monolingual_raw_is_pure():
    d = generate_synthetic(SynthConfig(**SMALL))
    assert {l for s in d.raw_lang1 for l in s.lid} <= {"LANG1", "OTHER"}
    assert {l for s in d.raw_lang2 for l in s.lid} <= {"LANG2", "OTHER"}


def test_labels_closed_and_lengths():
    cfg = SynthConfig(min_len=4, max_len=10, **SMALL)
    d = generate_synthetic(cfg)
    for c in d.corpora().values():
        for s in c:
            assert 4 <= len(s) <= 10
            assert set(s.pos) <= set(UPOS_TAGS) and set(s.lid) <= set(LID_TAGS)


@pytest.mark.parametrize("rate,frag", [(0.30, 2.0), (0.15, 1.5), (0.5, 1.0)])
def test_cs_rate_hit(rate, frag):
    d = generate_synthetic(SynthConfig(cs_point_rate=rate, mean_fragment_length=frag,
                                       **{**SMALL, "n_train": 2000}))
    assert abs(cs_point_rate(d.train) - rate) <= 0.02


def test_infeasible_rate():
    with pytest.raises(ConfigError):
        generate_synthetic(SynthConfig(cs_point_rate=1.0, mean_fragment_length=2.0, **SMALL))


def test_alphabets_separate_languages():
    d = generate_synthetic(SynthConfig(n_cognates=0, **SMALL))
    l1 = {w for ws in d.lexicons["LANG1"].values() for w in ws}
    l2 = {w for ws in d.lexicons["LANG2"].values() for w in ws}
    assert not l1 & l2
    assert all(set(w) <= set("bcdfgkptaei") for w in l1)


def test_cognates_shared():
    d = generate_synthetic(SynthConfig(n_cognates=10, **SMALL))
    l1 = {w for ws in d.lexicons["LANG1"].values() for w in ws}
    l2 = {w for ws in d.lexicons["LANG2"].values() for w in ws}
    assert len(l1 & l2) == 10


def test_dictionary_pairs_are_translations():
    d = generate_synthetic(SynthConfig(**SMALL))
    src = {w: t for t, ws in d.lexicons["LANG1"].items() for w in ws}
    tgt = {w: t for t, ws in d.lexicons["LANG2"].items() for w in ws}
    assert d.dictionary
    assert all(src[a] == tgt[b] for a, b in d.dictionary)


def test_config_dict_roundtrip():
    cfg = SynthConfig(seed=4, templates=("DET NOUN", "PRON VERB"))
    assert config_from_dict(config_to_dict(cfg)) == cfg
    assert config_from_dict({"templates": "DET NOUN; PRON VERB"}).templates == ("DET NOUN", "PRON VERB")


def test_bad_template():
    with pytest.raises(ConfigError):
        SynthConfig(templates=("DET FOO",)).validate()
