"""POS tagging for code-switched text with subword embeddings and BiLSTM-CRF taggers."""

__version__ = "0.1.0"
