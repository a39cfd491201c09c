"""Silver multi-labeling via the unchanged-translation rule.

Machine translation between closely related languages tends to be
conservative; when translating a sentence into a target language
changes nothing, the sentence is accepted as valid in that language
and the target tag is added to its labels. Translations can only add
labels, never remove them, and the sentence text itself is never
replaced. Items labeled `other` are never extended.

Translations arrive as external records; any MT system can produce
them, either as JSONL files or through the shell-command plug-in.
"""

from __future__ import annotations

import json
import logging
import subprocess
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .core import (
    SCANDINAVIAN,
    DataError,
    Dataset,
    LabeledSentence,
    LabelSet,
    Language,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TranslationRecord:
    """One translation of dataset item ``item_index`` into ``target``."""

    item_index: int
    target: Language
    translation: str

    def __post_init__(self) -> None:
        if self.target == Language.OTHER:
            raise DataError("translation target must be a language, not 'other'")


@dataclass
class ExtendSummary:
    """What a silver-labeling pass did."""

    records_seen: int = 0
    matches: int = 0
    skipped_other: int = 0
    added: dict[Language, int] = field(
        default_factory=lambda: {lang: 0 for lang in SCANDINAVIAN}
    )

    def to_dict(self) -> dict:
        return {
            "records_seen": self.records_seen,
            "matches": self.matches,
            "skipped_other": self.skipped_other,
            "added": {lang.value: n for lang, n in self.added.items()},
        }


def canonical_compare(a: str, b: str) -> bool:
    """Whitespace-insensitive, case- and punctuation-sensitive equality.

    Both sides are put in Unicode canonical composition (NFC), trimmed,
    and internal whitespace runs collapse to single spaces. Anything
    stricter would miss composed/decomposed encoding mismatches;
    anything looser would inflate false multi-labels.
    """
    return _canonical(a) == _canonical(b)


def _canonical(text: str) -> str:
    return " ".join(unicodedata.normalize("NFC", text).split())


def extend_labels(
    dataset: Dataset, records: Sequence[TranslationRecord]
) -> tuple[Dataset, ExtendSummary]:
    """Add target labels for records whose translation left the text unchanged.

    Labels only grow; texts and item order never change; `other` items
    are skipped. Applying the same records twice yields the same
    dataset (idempotent).
    """
    labels: list[set[Language]] = [set(item.labels.languages) for item in dataset]
    summary = ExtendSummary()

    for record in records:
        summary.records_seen += 1
        if not 0 <= record.item_index < len(dataset):
            raise DataError(f"translation record index {record.item_index} out of range")
        item = dataset[record.item_index]
        if item.labels.is_other:
            summary.skipped_other += 1
            continue
        if canonical_compare(item.text, record.translation):
            summary.matches += 1
            if record.target not in labels[record.item_index]:
                labels[record.item_index].add(record.target)
                summary.added[record.target] += 1

    items = [
        LabeledSentence(item.text, LabelSet(frozenset(new)), item.source)
        if frozenset(new) != item.labels.languages
        else item
        for item, new in zip(dataset, labels)
    ]
    return dataset.with_items(items), summary


def read_translation_records(path: Path | str) -> list[TranslationRecord]:
    """Read JSONL records: {item_index, target, translation}."""
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                records.append(
                    TranslationRecord(
                        rec["item_index"], Language.from_tag(rec["target"]), rec["translation"]
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, DataError) as e:
                raise DataError(f"{path}:{lineno}: bad translation record: {e}") from None
    return records


def write_translation_records(records: Iterable[TranslationRecord], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            f.write(
                json.dumps(
                    {
                        "item_index": rec.item_index,
                        "target": rec.target.value,
                        "translation": rec.translation,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def translate_command(command: str, target: Language, text: str) -> str | None:
    """Run one plug-in translation; None marks the record failed.

    Contract: the command reads one line ``<target-tag>\\t<source-text>``
    on stdin and writes the translation as one line on stdout. A
    non-zero exit status fails the record.
    """
    completed = subprocess.run(
        command,
        shell=True,
        input=f"{target.value}\t{text}\n",
        capture_output=True,
        text=True,
    )
    if completed.returncode != 0:
        return None
    return completed.stdout.splitlines()[0] if completed.stdout else ""


def generate_translations(
    dataset: Dataset, targets: Sequence[Language], command: str
) -> tuple[list[TranslationRecord], int]:
    """Translate every eligible item into every missing target via the plug-in.

    Items labeled `other` and targets an item already carries are
    skipped (the latter could only re-add an existing label). Returns
    the records plus the count of failed plug-in invocations.
    """
    records: list[TranslationRecord] = []
    failures = 0
    for index, item in enumerate(dataset):
        if item.labels.is_other:
            continue
        for target in targets:
            if target in item.labels:
                continue
            translation = translate_command(command, target, item.text)
            if translation is None:
                failures += 1
                continue
            records.append(TranslationRecord(index, target, translation))
    if failures:
        logger.warning("translator command failed on %d record(s); skipped", failures)
    return records, failures
