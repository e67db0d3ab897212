"""Synthetic code-switched corpora.

Sentences are produced from POS templates.  Each slot is filled from a
per-language, per-tag lexicon stratum, so gold tags are recoverable from
word identity.  Word forms are spelled from language-specific alphabets and
open-class strata carry a characteristic suffix, so character n-grams carry
both language and POS signal.

Language labels follow a two-state Markov chain (matrix/embedded language)
over language-bearing tokens.  With embedded-run exit probability
``b = 1/mean_fragment_length`` and entry probability ``a``, the stationary
switch rate is ``2ab/(a+b)``; ``a`` is solved from the configured rate.
"""

from __future__ import annotations

import bisect
from dataclasses import asdict, dataclass, field

import numpy as np

from .corpus import AnnotatedSentence, Corpus, Token, UPOS_TAGS
from .errors import ConfigError

DEFAULT_TEMPLATES = (
    "DET ADJ? NOUN VERB",
    "DET ADJ? NOUN VERB DET ADJ? NOUN",
    "PRON AUX VERB DET NOUN",
    "PROPN VERB ADP DET NOUN",
    "DET NOUN|ADJ NOUN|VERB|ADJ",
    "PRON VERB NOUN|ADJ|ADV",
    "DET ADJ? NOUN VERB NOUN|ADJ|ADV",
    "NOUN|VERB|ADJ ADP DET NOUN|ADJ",
    "PRON AUX NOUN|VERB|ADJ|ADV",
    "PROPN VERB|NOUN ADP NOUN|ADJ|ADV",
    "INTJ PUNCT PRON VERB NOUN|ADV",
    "SCONJ PRON NOUN|VERB PUNCT DET NOUN|ADJ VERB|ADJ",
    "NUM NOUN|ADJ VERB|NOUN ADV?",
    "DET NOUN|ADJ VERB PART VERB|ADJ",
    "ADV|ADJ PRON VERB|NOUN DET NOUN|ADJ",
    "PRON VERB SYM NUM",
    "NOUN|ADJ NOUN|VERB|ADV ADJ|ADV",
    "DET NOUN|ADJ NOUN|ADJ VERB|NOUN ADV|ADJ",
    "VERB|NOUN ADV|ADJ ADP NOUN|VERB|ADJ",
)

OPEN_CLASSES = {"NOUN": 0.45, "VERB": 0.30, "ADJ": 0.15, "ADV": 0.10}
CLOSED_CLASSES = {"DET": 6, "ADP": 8, "PRON": 8, "AUX": 4, "CCONJ": 3, "SCONJ": 4, "PART": 3, "INTJ": 3}
# tags realized by language-neutral tokens (LID OTHER)
NEUTRAL_TAGS = ("PUNCT", "NUM", "PROPN", "SYM")
_PUNCT = (",", ";", ":", "-")
_FINAL_PUNCT = (".", "!", "?")
_SYM = ("@", "#", "%", "&", "+")

ALPHABETS = {
    "lang1": ("bcdfgkpt", "aei"),
    "lang2": ("hlmnrsvz", "ouy"),
    "lang3": ("jqwxbdnl", "aeu"),
}


@dataclass(frozen=True)
class SynthConfig:
    lexicon_size_lang1: int = 400
    lexicon_size_lang2: int = 400
    n_cognates: int = 20
    cs_point_rate: float = 0.30
    mean_fragment_length: float = 2.0
    n_train: int = 2000
    n_dev: int = 300
    n_test: int = 300
    n_raw_mono: int = 5000
    n_raw_cs: int = 5000
    min_len: int = 3
    max_len: int = 25
    templates: tuple = DEFAULT_TEMPLATES
    clause_continue_prob: float = 0.3
    zipf_exponent: float = 1.0
    lang1_alphabet: str = "lang1"
    lang2_alphabet: str = "lang2"
    seed: int = 0
    lexicon_seed: int | None = None

    def validate(self) -> None:
        for name in ("lexicon_size_lang1", "lexicon_size_lang2"):
            if getattr(self, name) < 50:
                raise ConfigError(f"{name} must be >= 50")
        if self.n_cognates < 0:
            raise ConfigError("n_cognates must be >= 0")
        if not 0.0 <= self.cs_point_rate <= 1.0:
            raise ConfigError("cs_point_rate must lie in [0, 1]")
        if self.mean_fragment_length < 1.0:
            raise ConfigError("mean_fragment_length must be >= 1")
        limit = 2.0 / (1.0 + self.mean_fragment_length)
        if self.cs_point_rate > limit + 1e-12:
            raise ConfigError(
                f"cs_point_rate {self.cs_point_rate} infeasible with mean_fragment_length "
                f"{self.mean_fragment_length} (max {limit:.4f})"
            )
        if not 1 <= self.min_len <= self.max_len:
            raise ConfigError("need 1 <= min_len <= max_len")
        for n in ("n_train", "n_dev", "n_test", "n_raw_mono", "n_raw_cs"):
            if getattr(self, n) < 0:
                raise ConfigError(f"{n} must be >= 0")
        for a in (self.lang1_alphabet, self.lang2_alphabet):
            if a not in ALPHABETS:
                raise ConfigError(f"unknown alphabet {a!r}")
        if self.lang1_alphabet == self.lang2_alphabet:
            raise ConfigError("the two languages need distinct alphabets")
        if not self.templates:
            raise ConfigError("at least one template is required")
        for t in self.templates:
            _parse_template(t)

    def switch_probs(self) -> tuple[float, float]:
        """(matrix->embedded, embedded->matrix) transition probabilities."""
        b = 1.0 / self.mean_fragment_length
        r = self.cs_point_rate
        if r == 0.0:
            return 0.0, b
        return min(1.0, r * b / (2.0 * b - r)), b


@dataclass
class SyntheticData:
    train: Corpus
    dev: Corpus
    test: Corpus
    raw_lang1: Corpus
    raw_lang2: Corpus
    raw_cs: Corpus
    dictionary: list = field(default_factory=list)
    lexicons: dict = field(default_factory=dict)

    def corpora(self) -> dict[str, Corpus]:
        return {k: getattr(self, k) for k in ("train", "dev", "test", "raw_lang1", "raw_lang2", "raw_cs")}


def _parse_template(template: str):
    slots = []
    for item in template.split():
        optional = item.endswith("?")
        choices = tuple(item.rstrip("?").split("|"))
        for c in choices:
            if c not in UPOS_TAGS:
                raise ConfigError(f"template {template!r}: unknown tag {c!r}")
        slots.append((choices, optional))
    if not slots:
        raise ConfigError("empty template")
    return slots


class _Stratum:
    """Words of one (language, tag) cell with a Zipf sampler over ranks."""

    def __init__(self, words, exponent):
        self.words = list(words)
        w = 1.0 / np.arange(1, len(self.words) + 1, dtype=np.float64) ** exponent
        self.cdf = list(np.cumsum(w / w.sum()))
        self.cdf[-1] = 1.0

    def draw(self, u: float) -> str:
        return self.words[bisect.bisect_right(self.cdf, u)]


def _spell(rng, consonants, vowels, syllables):
    return "".join(consonants[rng.integers(len(consonants))] + vowels[rng.integers(len(vowels))]
                   for _ in range(syllables))


def _build_lexicon(size, alphabet, rng, taken):
    consonants, vowels = ALPHABETS[alphabet]
    open_total = size - sum(CLOSED_CLASSES.values())
    counts = dict(CLOSED_CLASSES)
    shares = list(OPEN_CLASSES.items())
    assigned = 0
    for tag, share in shares[:-1]:
        counts[tag] = max(1, int(round(open_total * share)))
        assigned += counts[tag]
    counts[shares[-1][0]] = max(1, open_total - assigned)

    suffixes = {}
    for tag in OPEN_CLASSES:
        while True:
            s = consonants[rng.integers(len(consonants))] + vowels[rng.integers(len(vowels))] + consonants[rng.integers(len(consonants))]
            if s not in suffixes.values():
                suffixes[tag] = s
                break
    lex = {}
    for tag in sorted(counts):
        words = []
        while len(words) < counts[tag]:
            if tag in OPEN_CLASSES:
                w = _spell(rng, consonants, vowels, int(rng.integers(1, 4))) + suffixes[tag]
            else:
                w = _spell(rng, consonants, vowels, int(rng.integers(1, 3)))
            if w not in taken:
                taken.add(w)
                words.append(w)
        lex[tag] = words
    return lex


def _neutral_lexicon(rng):
    letters = "abcdefghijklmnopqrstuvwxyz"
    names = set()
    while len(names) < 60:
        n = "".join(letters[i] for i in rng.integers(0, 26, size=int(rng.integers(3, 7))))
        names.add(n.capitalize())
    nums = sorted({str(int(x)) for x in rng.integers(0, 1000, size=80)})
    return {"PUNCT": list(_PUNCT), "NUM": nums, "PROPN": sorted(names), "SYM": list(_SYM)}


def build_lexicons(config: SynthConfig) -> dict:
    lex_seed = config.seed if config.lexicon_seed is None else config.lexicon_seed
    taken: set = set()
    lexicons = {}
    for lang, size, alphabet in (("LANG1", config.lexicon_size_lang1, config.lang1_alphabet),
                                 ("LANG2", config.lexicon_size_lang2, config.lang2_alphabet)):
        rng = np.random.default_rng(np.random.SeedSequence([lex_seed, list(ALPHABETS).index(alphabet)]))
        lexicons[lang] = _build_lexicon(size, alphabet, rng, taken)
    rng = np.random.default_rng(np.random.SeedSequence([lex_seed, 100]))
    lexicons["OTHER"] = _neutral_lexicon(rng)

    # cognates: one surface form placed in an open stratum of each language,
    # with an independently drawn tag per language
    rng = np.random.default_rng(
        np.random.SeedSequence([lex_seed, 200, list(ALPHABETS).index(config.lang2_alphabet)]))
    c1, v1 = ALPHABETS[config.lang1_alphabet]
    c2, v2 = ALPHABETS[config.lang2_alphabet]
    open_tags = list(OPEN_CLASSES)
    made = 0
    cognates: set = set()
    while made < config.n_cognates:
        w = _spell(rng, c1 + c2, v1 + v2, int(rng.integers(2, 4)))
        if w in taken:
            continue
        taken.add(w)
        for lang in ("LANG1", "LANG2"):
            free = [t for t in open_tags if any(x not in cognates for x in lexicons[lang][t])]
            if not free:
                raise ConfigError(f"n_cognates={config.n_cognates} exceeds the {lang} open-class lexicon")
            tag = open_tags[int(rng.integers(len(open_tags)))]
            while tag not in free:
                tag = open_tags[int(rng.integers(len(open_tags)))]
            stratum = lexicons[lang][tag]
            # replace a tail word so lexicon sizes stay fixed
            slot = len(stratum) - 1 - (made % max(1, len(stratum) // 2))
            while stratum[slot] in cognates:
                slot = (slot - 1) % len(stratum)
            stratum[slot] = w
        cognates.add(w)
        made += 1
    return lexicons


def seed_dictionary(lexicons: dict) -> list[tuple[str, str]]:
    """Translation pairs by construction: same tag, same frequency rank.

    Cognates (forms present in both lexicons) are left out.
    """
    l1, l2 = lexicons["LANG1"], lexicons["LANG2"]
    words1 = {w for ws in l1.values() for w in ws}
    words2 = {w for ws in l2.values() for w in ws}
    pairs = []
    seen_src, seen_tgt = set(), set()
    for tag in sorted(l1):
        for a, b in zip(l1[tag], l2.get(tag, [])):
            if a in words2 or b in words1 or a in seen_src or b in seen_tgt:
                continue
            seen_src.add(a)
            seen_tgt.add(b)
            pairs.append((a, b))
    return pairs


class _Generator:
    def __init__(self, config: SynthConfig, lexicons: dict):
        self.cfg = config
        self.templates = [_parse_template(t) for t in config.templates]
        self.strata = {
            lang: {tag: _Stratum(words, config.zipf_exponent) for tag, words in lex.items() if words}
            for lang, lex in lexicons.items()
        }
        self.a, self.b = config.switch_probs()

    def _tags(self, rng) -> list[str]:
        tags: list[str] = []
        while True:
            slots = self.templates[int(rng.integers(len(self.templates)))]
            for choices, optional in slots:
                if optional and rng.random() < 0.5:
                    continue
                tags.append(choices[int(rng.integers(len(choices)))])
            if rng.random() >= self.cfg.clause_continue_prob:
                break
            tags.append("CCONJ")
        tags.append("PUNCT")
        return tags

    def _lids(self, tags, rng, mode) -> list[str]:
        if mode in ("LANG1", "LANG2"):
            return [("OTHER" if t in NEUTRAL_TAGS else mode) for t in tags]
        matrix, embedded = ("LANG1", "LANG2") if rng.random() < 0.5 else ("LANG2", "LANG1")
        a, b = self.a, self.b
        p_emb = a / (a + b) if a + b > 0 else 0.0
        state = None
        out = []
        for t in tags:
            if t in NEUTRAL_TAGS:
                out.append("OTHER")
                continue
            u = rng.random()
            if state is None:
                state = embedded if u < p_emb else matrix
            elif state == matrix:
                state = embedded if u < a else matrix
            else:
                state = matrix if u < b else embedded
            out.append(state)
        return out

    def sentence(self, rng, mode) -> AnnotatedSentence:
        for _ in range(1000):
            tags = self._tags(rng)
            if self.cfg.min_len <= len(tags) <= self.cfg.max_len:
                break
        else:
            raise ConfigError("templates cannot produce sentences within [min_len, max_len]")
        lids = self._lids(tags, rng, mode)
        toks = []
        for i, (t, l) in enumerate(zip(tags, lids)):
            if t == "PUNCT" and i == len(tags) - 1:
                form = _FINAL_PUNCT[int(rng.integers(len(_FINAL_PUNCT)))]
            else:
                form = self.strata[l][t].draw(rng.random())
            toks.append(Token(form, t, l))
        return AnnotatedSentence(tuple(toks))

    def corpus(self, n, rng, mode, split, name) -> Corpus:
        return Corpus(tuple(self.sentence(rng, mode) for _ in range(n)), split, name)


def generate_synthetic(config: SynthConfig) -> SyntheticData:
    config.validate()
    lexicons = build_lexicons(config)
    gen = _Generator(config, lexicons)
    streams = np.random.SeedSequence([config.seed, 300]).spawn(6)
    rngs = [np.random.default_rng(s) for s in streams]
    return SyntheticData(
        train=gen.corpus(config.n_train, rngs[0], "CS", "TRAIN", "train"),
        dev=gen.corpus(config.n_dev, rngs[1], "CS", "DEV", "dev"),
        test=gen.corpus(config.n_test, rngs[2], "CS", "TEST", "test"),
        raw_lang1=gen.corpus(config.n_raw_mono, rngs[3], "LANG1", "RAW", "raw_lang1"),
        raw_lang2=gen.corpus(config.n_raw_mono, rngs[4], "LANG2", "RAW", "raw_lang2"),
        raw_cs=gen.corpus(config.n_raw_cs, rngs[5], "CS", "RAW", "raw_cs"),
        dictionary=seed_dictionary(lexicons),
        lexicons=lexicons,
    )


def config_to_dict(config: SynthConfig) -> dict:
    d = asdict(config)
    d["templates"] = list(config.templates)
    return d


def config_from_dict(d: dict) -> SynthConfig:
    d = dict(d)
    if "templates" in d:
        t = d["templates"]
        d["templates"] = tuple(x.strip() for x in (t.split(";") if isinstance(t, str) else t) if x.strip())
    return SynthConfig(**d)
