"""Embedding-corpus composition strategies (mono, CFM, PCS, PseudoCS, pivot)."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..corpus import Corpus
from ..errors import ConfigError

KINDS = ("MONO", "CFM", "PCS", "PSEUDO_CS", "MULTI_PIVOT")


@dataclass(frozen=True)
class CompositionRecipe:
    """Which raw corpora feed one embedding model.

    ``mono`` holds monolingual corpora, ``cs`` code-switched ones.  For
    MULTI_PIVOT the monolingual list covers the three languages of two pairs
    sharing a pivot and ``cs`` holds one CS corpus per pair.
    """

    kind: str
    mono: tuple = field(default_factory=tuple)
    cs: tuple = field(default_factory=tuple)

    def validate(self) -> None:
        m, c = len(self.mono), len(self.cs)
        ok = {
            "MONO": m == 1 and c == 0,
            "CFM": m == 2 and c == 0,
            "PCS": m == 0 and c >= 1,
            "PSEUDO_CS": m == 2 and c >= 1,
            "MULTI_PIVOT": m >= 3 and c >= 2,
        }
        if self.kind not in ok:
            raise ConfigError(f"unknown composition kind {self.kind!r}")
        if not ok[self.kind]:
            raise ConfigError(f"{self.kind} recipe got {m} monolingual and {c} code-switched corpora")

    def inputs(self) -> tuple:
        return tuple(self.mono) + tuple(self.cs)

    def fingerprint(self) -> str:
        h = hashlib.sha256(self.kind.encode())
        for c in self.inputs():
            h.update(b"\x00")
            for s in c:
                h.update(" ".join(s.forms).encode("utf-8"))
                h.update(b"\n")
        return h.hexdigest()


def compose_corpus(recipe: CompositionRecipe, seed: int = 0) -> Corpus:
    recipe.validate()
    sentences = [s for c in recipe.inputs() for s in c]
    order = np.random.default_rng(seed).permutation(len(sentences))
    return Corpus(tuple(sentences[i] for i in order), "RAW", recipe.kind.lower())
