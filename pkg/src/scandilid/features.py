"""Hashed character-n-gram sentence features.

Tokens are wrapped in boundary sentinels (``natt`` becomes ``<natt>``)
so n-grams at word edges differ from word-internal ones, then every
character n-gram with length in [min_n, max_n] — plus, optionally, the
whole wrapped token — is hashed into a fixed number of embedding
buckets with 64-bit FNV-1a over the gram's UTF-8 bytes.

The featurizer is definitionally a multiset: repeated grams repeat in
the output, and downstream mean-pooling makes the representation
independent of gram order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

HIDDEN_SIZE = 64
N_OUTPUTS = 4

# Embedding width that puts the classifier head (two dense layers over
# a HIDDEN_SIZE bottleneck) at exactly 20,932 parameters, the published
# head size: 64*322 + 64 + 4*64 + 4.
REFERENCE_HEAD_EMBED_DIM = 322


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a; deterministic and trivially portable."""
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class FeaturizerConfig:
    min_n: int = 1
    max_n: int = 4
    bucket_count: int = 1 << 18
    include_word_unigrams: bool = True
    embed_dim: int = 32

    def __post_init__(self) -> None:
        if not 1 <= self.min_n <= self.max_n <= 8:
            raise ValueError(f"need 1 <= min_n <= max_n <= 8, got [{self.min_n}, {self.max_n}]")
        if self.bucket_count < 1 or self.bucket_count & (self.bucket_count - 1):
            raise ValueError(f"bucket_count must be a power of two, got {self.bucket_count}")
        if self.embed_dim < 1:
            raise ValueError(f"embed_dim must be >= 1, got {self.embed_dim}")

    @classmethod
    def reference_head(cls, **overrides) -> "FeaturizerConfig":
        """Preset reproducing the published classifier-head dimensionality."""
        overrides.setdefault("embed_dim", REFERENCE_HEAD_EMBED_DIM)
        return cls(**overrides)


@lru_cache(maxsize=1 << 18)
def _token_gram_hashes(
    token: str, min_n: int, max_n: int, include_word_unigram: bool
) -> tuple[int, ...]:
    # Cached per token: natural text repeats tokens heavily, and the
    # cache key is independent of bucket_count.
    wrapped = f"<{token}>"
    length = len(wrapped)
    hashes = []
    for n in range(min_n, max_n + 1):
        for i in range(length - n + 1):
            hashes.append(fnv1a64(wrapped[i : i + n].encode("utf-8")))
    if include_word_unigram:
        hashes.append(fnv1a64(wrapped.encode("utf-8")))
    return tuple(hashes)


def featurize(text: str, cfg: FeaturizerConfig) -> np.ndarray:
    """Bucket ids (with multiplicity) for all grams of `text`.

    The text is split on whitespace; it is expected to be already
    normalized/lowercased by the pipeline. Empty text gives an empty
    array. bucket = hash mod bucket_count; the mask is equivalent
    because bucket_count is a power of two.
    """
    mask = cfg.bucket_count - 1
    hashes: list[int] = []
    for token in text.split():
        hashes.extend(
            _token_gram_hashes(token, cfg.min_n, cfg.max_n, cfg.include_word_unigrams)
        )
    ids = np.fromiter((h & mask for h in hashes), dtype=np.int64, count=len(hashes))
    return ids
