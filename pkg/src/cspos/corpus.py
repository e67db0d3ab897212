"""Annotated corpora: tokens, sentences, TSV/raw formats, vocabularies, stats.

The annotated format is a 4-column TSV (INDEX, FORM, UPOS, LID), one token
per line, sentences separated by a blank line, ``#`` comments allowed.
Raw corpora hold one whitespace-tokenized sentence per line.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import ParseError, UsageError, ValidationError

UPOS_TAGS = (
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
)
LID_TAGS = ("LANG1", "LANG2", "OTHER")
SPLITS = ("TRAIN", "DEV", "TEST", "RAW")

PAD = "<pad>"
UNK = "<unk>"
PAD_INDEX = 0
UNK_INDEX = 1

_UPOS_SET = frozenset(UPOS_TAGS)
_LID_SET = frozenset(LID_TAGS)
_BAD_FORM_CHARS = (" ", "\t", "\n", "\r")


@dataclass(frozen=True, slots=True)
class Token:
    form: str
    pos: str
    lid: str

    def __post_init__(self):
        if not self.form or any(c in self.form for c in _BAD_FORM_CHARS):
            raise ValidationError(f"invalid token form {self.form!r}", label=self.form)
        if self.pos not in _UPOS_SET:
            raise ValidationError(f"unknown POS label {self.pos!r}", label=self.pos)
        if self.lid not in _LID_SET:
            raise ValidationError(f"unknown LID label {self.lid!r}", label=self.lid)


@dataclass(frozen=True, slots=True)
class AnnotatedSentence:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValidationError("empty sentence")

    def __len__(self):
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    @property
    def pos(self) -> list[str]:
        return [t.pos for t in self.tokens]

    @property
    def lid(self) -> list[str]:
        return [t.lid for t in self.tokens]

    @classmethod
    def from_lists(cls, forms, pos=None, lid=None) -> "AnnotatedSentence":
        n = len(forms)
        pos = pos if pos is not None else ["X"] * n
        lid = lid if lid is not None else ["OTHER"] * n
        if not (len(pos) == len(lid) == n):
            raise UsageError("forms/pos/lid lengths differ")
        return cls(tuple(Token(f, p, l) for f, p, l in zip(forms, pos, lid)))


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[AnnotatedSentence, ...] = ()
    split: str = "TRAIN"
    name: str = ""

    def __post_init__(self):
        if self.split not in SPLITS:
            raise UsageError(f"unknown split {self.split!r}")
        if not isinstance(self.sentences, tuple):
            object.__setattr__(self, "sentences", tuple(self.sentences))

    def __len__(self):
        return len(self.sentences)

    def __iter__(self) -> Iterator[AnnotatedSentence]:
        return iter(self.sentences)

    def tokens(self) -> Iterator[Token]:
        for sent in self.sentences:
            yield from sent.tokens

    @property
    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)

    def with_split(self, split: str, name: str | None = None) -> "Corpus":
        return Corpus(self.sentences, split, self.name if name is None else name)


# --------------------------------------------------------------------------
# formats


def parse_conllu_like(text: str, split: str = "TRAIN", name: str = "") -> Corpus:
    sentences = []
    current: list[Token] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            if current:
                sentences.append(AnnotatedSentence(tuple(current)))
                current = []
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise ParseError(f"expected 4 tab-separated columns, got {len(cols)}", line=lineno)
        index, form, pos, lid = cols
        try:
            idx = int(index)
        except ValueError:
            raise ParseError(f"INDEX column is not an integer: {index!r}", line=lineno) from None
        if idx != len(current) + 1:
            raise ParseError(f"expected token index {len(current) + 1}, got {idx}", line=lineno)
        if pos not in _UPOS_SET:
            raise ValidationError(f"line {lineno}: unknown POS label {pos!r}", label=pos)
        if lid not in _LID_SET:
            raise ValidationError(f"line {lineno}: unknown LID label {lid!r}", label=lid)
        try:
            current.append(Token(form, pos, lid))
        except ValidationError as e:
            raise ParseError(str(e), line=lineno) from None
    if current:
        sentences.append(AnnotatedSentence(tuple(current)))
    return Corpus(tuple(sentences), split, name)


def serialize_conllu_like(corpus: Corpus) -> str:
    blocks = []
    for sent in corpus:
        lines = [f"{i}\t{t.form}\t{t.pos}\t{t.lid}" for i, t in enumerate(sent, start=1)]
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks) + ("\n" if blocks else "")


def parse_raw(text: str, name: str = "") -> Corpus:
    """One sentence per line; tokens get the placeholder tags X / OTHER."""
    sentences = []
    for line in text.split("\n"):
        forms = line.split()
        if forms:
            sentences.append(AnnotatedSentence.from_lists(forms))
    return Corpus(tuple(sentences), "RAW", name)


def serialize_raw(corpus: Corpus) -> str:
    return "".join(" ".join(s.forms) + "\n" for s in corpus)


def read_corpus(path, split: str = "TRAIN", name: str | None = None) -> Corpus:
    from pathlib import Path

    path = Path(path)
    text = path.read_text(encoding="utf-8")
    name = path.stem if name is None else name
    if split == "RAW":
        return parse_raw(text, name)
    return parse_conllu_like(text, split, name)


def write_corpus(corpus: Corpus, path) -> None:
    from pathlib import Path

    text = serialize_raw(corpus) if corpus.split == "RAW" else serialize_conllu_like(corpus)
    Path(path).write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------
# vocabulary


@dataclass(frozen=True)
class Vocabulary:
    """Word <-> index map with PAD=0 and UNK=1.

    Non-special words are ordered by descending frequency, ties broken
    lexicographically, so the mapping does not depend on sentence order.
    """

    itos: tuple[str, ...]
    counts: dict = field(default_factory=dict)
    stoi: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.itos[:2] != (PAD, UNK):
            raise UsageError("vocabulary must start with PAD, UNK")
        object.__setattr__(self, "stoi", {w: i for i, w in enumerate(self.itos)})
        if len(self.stoi) != len(self.itos):
            raise UsageError("duplicate vocabulary entries")

    @classmethod
    def from_counts(cls, counts: Counter, min_count: int = 1) -> "Vocabulary":
        if min_count < 1:
            raise UsageError("min_count must be >= 1")
        kept = sorted(
            ((w, c) for w, c in counts.items() if c >= min_count and w not in (PAD, UNK)),
            key=lambda wc: (-wc[1], wc[0]),
        )
        return cls((PAD, UNK) + tuple(w for w, _ in kept), {w: c for w, c in kept})

    def __len__(self):
        return len(self.itos)

    def __contains__(self, word):
        return word in self.stoi and self.stoi[word] > UNK_INDEX

    def index(self, word: str) -> int:
        return self.stoi.get(word, UNK_INDEX)

    def encode(self, words: Iterable[str]) -> list[int]:
        get = self.stoi.get
        return [get(w, UNK_INDEX) for w in words]


def build_vocab(corpus: Corpus, min_count: int = 1) -> Vocabulary:
    if corpus.split != "TRAIN":
        raise UsageError(f"vocabulary must be built from a TRAIN corpus, got {corpus.split}")
    return Vocabulary.from_counts(Counter(t.form for t in corpus.tokens()), min_count)


def build_shared_vocab(corpora: Sequence[Corpus], min_count: int = 1) -> Vocabulary:
    """Single vocabulary over several TRAIN corpora (multi-task taggers)."""
    counts: Counter = Counter()
    for c in corpora:
        if c.split != "TRAIN":
            raise UsageError(f"vocabulary must be built from TRAIN corpora, got {c.split}")
        counts.update(t.form for t in c.tokens())
    return Vocabulary.from_counts(counts, min_count)


# --------------------------------------------------------------------------
# statistics


def corpus_stats(corpus: Corpus) -> dict:
    lid = Counter({k: 0 for k in LID_TAGS})
    pos = Counter({k: 0 for k in UPOS_TAGS})
    for tok in corpus.tokens():
        lid[tok.lid] += 1
        pos[tok.pos] += 1
    return {
        "token_count": corpus.token_count,
        "sentence_count": len(corpus),
        "lid": dict(lid),
        "pos": dict(pos),
    }


def format_stats(stats: dict, name: str = "") -> str:
    lines = [f"corpus\t{name}", f"sentences\t{stats['sentence_count']}", f"tokens\t{stats['token_count']}"]
    lines += [f"lid:{k}\t{v}" for k, v in stats["lid"].items()]
    lines += [f"pos:{k}\t{v}" for k, v in stats["pos"].items() if v]
    return "\n".join(lines)
