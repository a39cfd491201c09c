"""Synthetic corpora with alphabet-separable languages.

Three artificial languages use pairwise disjoint character sets, so a
classifier that reads character n-grams can in principle reach perfect
accuracy; a configurable fraction of sentences deliberately mixes two
alphabets and carries both labels. This gives end-to-end training
checks a corpus whose difficulty is known by construction.
"""

from __future__ import annotations

import random
from typing import Iterable

from .core import Dataset, LabeledSentence, LabelSet

ALPHABETS: dict[str, str] = {
    "da": "abcdefg",
    "nb": "hijklmn",
    "nn": "opqrstu",
}

_TAGS = tuple(ALPHABETS)
_PAIRS = tuple(
    (a, b) for i, a in enumerate(_TAGS) for b in _TAGS[i + 1 :]
)


def _word(rng: random.Random, alphabet: str) -> str:
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(2, 7)))


def _pure_sentence(rng: random.Random, alphabet: str) -> str:
    return " ".join(_word(rng, alphabet) for _ in range(rng.randint(3, 9)))


def _ambiguous_sentence(rng: random.Random, first: str, second: str) -> str:
    # At least one word from each alphabet, remainder drawn from either.
    words = [_word(rng, first), _word(rng, second)]
    words += [_word(rng, rng.choice((first, second))) for _ in range(rng.randint(1, 7))]
    rng.shuffle(words)
    return " ".join(words)


def _items(rng: random.Random, n: int, ambiguous_fraction: float) -> list[LabeledSentence]:
    items = []
    for _ in range(n):
        if rng.random() < ambiguous_fraction:
            first, second = _PAIRS[rng.randrange(len(_PAIRS))]
            items.append(
                LabeledSentence(_ambiguous_sentence(rng, ALPHABETS[first], ALPHABETS[second]),
                                LabelSet.of(first, second))
            )
        else:
            tag = _TAGS[rng.randrange(len(_TAGS))]
            items.append(LabeledSentence(_pure_sentence(rng, ALPHABETS[tag]), LabelSet.of(tag)))
    return items


def generate_corpus(
    n_train: int,
    n_test: int,
    ambiguous_fraction: float = 0.10,
    seed: int = 0,
) -> tuple[Dataset, Dataset]:
    """Deterministic (train, test) pair; test items are freshly drawn."""
    rng = random.Random(seed)
    train = Dataset("train", tuple(_items(rng, n_train, ambiguous_fraction)))
    test = Dataset("test", tuple(_items(rng, n_test, ambiguous_fraction)))
    return train, test


def ambiguous_indices(dataset: Dataset | Iterable[LabeledSentence]) -> list[int]:
    return [i for i, item in enumerate(dataset) if len(item.labels) > 1]
