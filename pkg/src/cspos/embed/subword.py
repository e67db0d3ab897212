"""Character n-gram extraction and bucket hashing."""

from __future__ import annotations

from ..errors import UsageError

BOW = "<"
EOW = ">"

_FNV_OFFSET = 0x811C9DC5
_FNV_PRIME = 0x01000193


def extract_ngrams(word: str, min_n: int = 3, max_n: int = 6) -> list[str]:
    """All n-grams (min_n <= n <= max_n) of ``<word>``, ordered by (start, length).

    The wrapped word itself appears only when its length falls inside the
    n range (short words such as ``<a>``).
    """
    if not word:
        raise UsageError("extract_ngrams needs a non-empty word")
    if not 1 <= min_n <= max_n:
        raise UsageError("need 1 <= min_n <= max_n")
    wrapped = BOW + word + EOW
    L = len(wrapped)
    return [wrapped[i:i + n] for i in range(L) for n in range(min_n, min(max_n, L - i) + 1)]


def fnv1a_32(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFF
    return h


def hash_ngram(ngram: str, bucket_count: int) -> int:
    if not ngram:
        raise UsageError("cannot hash an empty n-gram")
    if bucket_count < 1:
        raise UsageError("bucket_count must be >= 1")
    return fnv1a_32(ngram.encode("utf-8")) % bucket_count


def subword_ids(word: str, min_n: int, max_n: int, bucket_count: int) -> list[int]:
    return [hash_ngram(g, bucket_count) for g in extract_ngrams(word, min_n, max_n)]
