"""Corpus ingestion: CoNLL-U text extraction, JSONL datasets, statistics.

JSONL is the interchange format everywhere: one UTF-8 record per line
with fields ``text``, ``labels`` (canonically ordered tags) and an
optional ``source``. CoNLL-U files are consumed only for their
``# text = ...`` comments; token columns are never reassembled because
that would re-introduce tokenization artifacts.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .core import (
    CANONICAL_ORDER,
    DataError,
    Dataset,
    LabeledSentence,
    LabelSet,
    Language,
    label_set_parse,
)

logger = logging.getLogger(__name__)

FORMATS = ("conllu", "jsonl", "plaintext")

_TEXT_PREFIX = "# text = "


class DatasetFormatError(DataError):
    """A dataset file could not be parsed; message carries file:line context."""


@dataclass(frozen=True)
class CorpusSource:
    """One input corpus and the labels assigned to its sentences.

    For conllu/plaintext sources every extracted sentence receives
    ``assigned_labels``; jsonl sources carry their own labels and
    ``assigned_labels`` must be None.
    """

    path: Path
    format: str
    assigned_labels: LabelSet | None = None

    def __post_init__(self) -> None:
        if self.format not in FORMATS:
            raise DataError(f"unknown corpus format {self.format!r} (expected one of {FORMATS})")
        if self.format in ("conllu", "plaintext") and self.assigned_labels is None:
            raise DataError(f"{self.format} source {self.path} requires assigned labels")
        if self.format == "jsonl" and self.assigned_labels is not None:
            raise DataError(f"jsonl source {self.path} carries its own labels")


@dataclass
class LabelDistribution:
    """Per-language sentence counts for a dataset.

    A sentence with k labels counts once toward each of its k
    languages; ``total`` counts each sentence exactly once, so the sum
    of counts exceeds ``total`` exactly when multi-label items exist.
    """

    counts: dict[Language, int]
    total: int

    def shares(self) -> dict[Language, float]:
        """Fraction of the summed per-language counts held by each language."""
        denom = sum(self.counts.values())
        if denom == 0:
            return {lang: 0.0 for lang in CANONICAL_ORDER}
        return {lang: self.counts[lang] / denom for lang in CANONICAL_ORDER}

    def to_dict(self) -> dict:
        return {
            "counts": {lang.value: self.counts[lang] for lang in CANONICAL_ORDER},
            "total": self.total,
            "shares": {lang.value: round(s, 6) for lang, s in self.shares().items()},
        }


def parse_conllu(stream: Iterable[str]) -> list[str]:
    """Extract the `# text = ...` payload of every sentence block.

    Blocks are separated by blank lines. Blocks without a text comment
    are skipped; the skip count is logged as a warning.
    """
    texts: list[str] = []
    block_has_lines = False
    block_text: str | None = None
    skipped = 0

    def flush() -> None:
        nonlocal block_has_lines, block_text, skipped
        if block_has_lines:
            if block_text is None:
                skipped += 1
            else:
                texts.append(block_text)
        block_has_lines = False
        block_text = None

    for line in stream:
        line = line.rstrip("\n")
        if not line.strip():
            flush()
            continue
        block_has_lines = True
        if block_text is None and line.startswith(_TEXT_PREFIX):
            block_text = line[len(_TEXT_PREFIX):]
    flush()

    if skipped:
        logger.warning("skipped %d CoNLL-U block(s) without a '# text =' comment", skipped)
    return texts


def _parse_jsonl_record(line: str, path: Path | str, lineno: int) -> LabeledSentence:
    where = f"{path}:{lineno}"
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"{where}: invalid JSON: {e}") from None
    if not isinstance(record, dict):
        raise DatasetFormatError(f"{where}: expected a JSON object, found {type(record).__name__}")
    try:
        text = record["text"]
        tags = record["labels"]
    except KeyError as e:
        raise DatasetFormatError(f"{where}: missing field {e}") from None
    if not isinstance(text, str) or not isinstance(tags, list):
        raise DatasetFormatError(f"{where}: 'text' must be a string and 'labels' a list")
    source = record.get("source")
    if source is not None and not isinstance(source, str):
        raise DatasetFormatError(f"{where}: 'source' must be a string when present")
    try:
        return LabeledSentence(text, label_set_parse(tags), source)
    except DataError as e:
        raise DatasetFormatError(f"{where}: {e}") from None


def read_dataset(path: Path | str, format: str = "jsonl", split: str = "unsplit") -> Dataset:
    """Read a JSONL dataset; order equals file order on every read."""
    if format != "jsonl":
        raise DataError(f"read_dataset supports jsonl, not {format!r}; use CorpusSource for raw corpora")
    items: list[LabeledSentence] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            items.append(_parse_jsonl_record(line, path, lineno))
    return Dataset(split, tuple(items))


def serialize_record(item: LabeledSentence) -> str:
    record: dict = {"text": item.text, "labels": list(item.labels.tags())}
    if item.source is not None:
        record["source"] = item.source
    return json.dumps(record, ensure_ascii=False)


def write_dataset(dataset: Dataset, path: Path | str) -> None:
    """Write JSONL with canonical label order; byte-stable across runs."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for item in dataset:
            f.write(serialize_record(item) + "\n")


def _extract_source(source: CorpusSource) -> list[LabeledSentence]:
    if source.format == "jsonl":
        return list(read_dataset(source.path).items)
    provenance = str(source.path)
    if source.format == "conllu":
        with open(source.path, encoding="utf-8") as f:
            texts = parse_conllu(f)
    else:  # plaintext, one sentence per line
        with open(source.path, encoding="utf-8") as f:
            texts = [line.rstrip("\n") for line in f if line.strip()]
    return [LabeledSentence(t, source.assigned_labels, provenance) for t in texts]


def compose_training_set(
    sources: Sequence[CorpusSource],
    seed: int,
    other_sample_size: int | None = None,
    dedupe: bool = False,
    split: str = "train",
) -> Dataset:
    """Concatenate sources in declared order into one labeled dataset.

    `other`-labeled sentences from all sources are pooled and, when
    ``other_sample_size`` is given, sampled uniformly without
    replacement (seeded, so the composition is reproducible
    bit-for-bit). Sampled items keep their original positions.
    Duplicate texts survive unless ``dedupe`` is set.
    """
    extracted = [_extract_source(s) for s in sources]
    items: list[LabeledSentence] = [item for chunk in extracted for item in chunk]

    other_positions = [i for i, item in enumerate(items) if item.labels.is_other]
    if other_sample_size is not None and other_sample_size < len(other_positions):
        rng = random.Random(seed)
        keep = set(rng.sample(range(len(other_positions)), other_sample_size))
        drop = {pos for j, pos in enumerate(other_positions) if j not in keep}
        items = [item for i, item in enumerate(items) if i not in drop]

    if dedupe:
        seen: set[str] = set()
        unique = []
        for item in items:
            if item.text not in seen:
                seen.add(item.text)
                unique.append(item)
        items = unique

    return Dataset(split, tuple(items))


def dataset_stats(dataset: Dataset) -> LabelDistribution:
    """Count sentences per language; multi-label items count once per label."""
    counts = {lang: 0 for lang in CANONICAL_ORDER}
    for item in dataset:
        for lang in item.labels:
            counts[lang] += 1
    return LabelDistribution(counts=counts, total=len(dataset))
