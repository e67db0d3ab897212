"""Subword skip-gram embeddings."""

from .compose import CompositionRecipe, compose_corpus
from .subword import extract_ngrams, fnv1a_32, hash_ngram, subword_ids
from .table import EmbeddingConfig, EmbeddingTable, merge_tables, oov_rate
from .train import train_embeddings

__all__ = [
    "CompositionRecipe", "EmbeddingConfig", "EmbeddingTable", "compose_corpus", "extract_ngrams",
    "fnv1a_32", "hash_ngram", "merge_tables", "oov_rate", "subword_ids", "train_embeddings",
]
