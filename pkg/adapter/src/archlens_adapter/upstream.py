"""Conversion of upstream coreference-pipeline tables into interchange files.

Expected layout, one directory per novel:

    <upstream_dir>/<novel_id>/
        meta.json        {"author": str, "year": int}
        tokens.tsv       sentence_id  token_idx  form
        entities.tsv     entity_id  mention_count  [figure_id]
        attributes.tsv   entity_id  category  lemma  sentence_id  token_start  token_end

Categories are singular (agent_verb, patient_verb, modifier, possessive);
token_end is exclusive. Sentence text is reconstructed by joining forms with
single spaces, and occurrence character spans are offsets into that text.
Character ids are namespaced as "<novel_id>:<entity_id>" so they stay unique
across the corpus.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO

log = logging.getLogger(__name__)

CATEGORY_MAP = {
    "agent_verb": "agent_verbs",
    "patient_verb": "patient_verbs",
    "modifier": "modifiers",
    "possessive": "possessives",
}
REQUIRED_TABLES = ("meta.json", "tokens.tsv", "entities.tsv", "attributes.tsv")


@dataclass(frozen=True)
class AttributeOccurrence:
    """One attribute mention in context; span is a [start, end) character
    range within the reconstructed sentence."""

    character_id: str
    category: str
    lemma: str
    sentence: str
    start: int
    end: int


@dataclass(frozen=True)
class NovelTables:
    novel_id: str
    author: str
    year: int
    sentences: dict[str, list[str]]          # sentence_id -> token forms
    mention_counts: dict[str, int]           # entity_id -> chain length
    figure_ids: dict[str, str]               # entity_id -> figure id (optional)
    attribute_rows: list[tuple[str, str, str, str, int, int]]


def _read_tsv(path: Path, min_columns: int) -> Iterable[list[str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < min_columns:
                raise ValueError(f"{path.name}:{lineno}: expected {min_columns} columns")
            yield row


def load_novel(novel_dir: Path) -> NovelTables:
    meta = json.loads((novel_dir / "meta.json").read_text(encoding="utf-8"))
    sentences: dict[str, list[str]] = defaultdict(list)
    for sentence_id, token_idx, form in _read_tsv(novel_dir / "tokens.tsv", 3):
        idx = int(token_idx)
        tokens = sentences[sentence_id]
        if idx != len(tokens):
            raise ValueError(f"tokens.tsv: non-contiguous token_idx {idx} in sentence {sentence_id}")
        tokens.append(form)
    mention_counts: dict[str, int] = {}
    figure_ids: dict[str, str] = {}
    for row in _read_tsv(novel_dir / "entities.tsv", 2):
        entity_id, count = row[0], int(row[1])
        mention_counts[entity_id] = count
        if len(row) > 2 and row[2]:
            figure_ids[entity_id] = row[2]
    attribute_rows = []
    for row in _read_tsv(novel_dir / "attributes.tsv", 6):
        entity_id, category, lemma, sentence_id = row[0], row[1], row[2], row[3]
        attribute_rows.append((entity_id, category, lemma, sentence_id, int(row[4]), int(row[5])))
    return NovelTables(
        novel_id=novel_dir.name,
        author=str(meta["author"]),
        year=int(meta["year"]),
        sentences=dict(sentences),
        mention_counts=mention_counts,
        figure_ids=figure_ids,
        attribute_rows=attribute_rows,
    )


def _token_char_spans(tokens: list[str]) -> list[tuple[int, int]]:
    spans = []
    pos = 0
    for form in tokens:
        spans.append((pos, pos + len(form)))
        pos += len(form) + 1  # single-space joins
    return spans


def convert_novel(tables: NovelTables) -> tuple[list[dict], list[AttributeOccurrence]]:
    """Produce character records (as JSON-ready dicts) and the occurrence stream."""
    bags: dict[str, dict[str, Counter]] = {
        eid: {cat: Counter() for cat in CATEGORY_MAP.values()} for eid in tables.mention_counts
    }
    occurrences: list[AttributeOccurrence] = []
    for entity_id, category, lemma, sentence_id, tok_start, tok_end in tables.attribute_rows:
        if entity_id not in tables.mention_counts:
            log.warning("%s: attribute for unknown entity %r skipped", tables.novel_id, entity_id)
            continue
        bag_name = CATEGORY_MAP.get(category)
        if bag_name is None:
            log.warning("%s: unknown attribute category %r skipped", tables.novel_id, category)
            continue
        lemma = lemma.strip().lower()
        if not lemma:
            log.warning("%s: empty lemma for entity %r skipped", tables.novel_id, entity_id)
            continue
        tokens = tables.sentences.get(sentence_id)
        if tokens is None:
            log.warning("%s: attribute references unknown sentence %r", tables.novel_id, sentence_id)
            continue
        if not (0 <= tok_start < tok_end <= len(tokens)):
            log.warning(
                "%s: span [%d, %d) outside sentence %r (%d tokens); occurrence rejected",
                tables.novel_id, tok_start, tok_end, sentence_id, len(tokens),
            )
            continue
        spans = _token_char_spans(tokens)
        character_id = f"{tables.novel_id}:{entity_id}"
        bags[entity_id][bag_name][lemma] += 1
        occurrences.append(
            AttributeOccurrence(
                character_id=character_id,
                category=bag_name,
                lemma=lemma,
                sentence=" ".join(tokens),
                start=spans[tok_start][0],
                end=spans[tok_end - 1][1],
            )
        )
    records = []
    for entity_id in sorted(tables.mention_counts):
        record = {
            "character_id": f"{tables.novel_id}:{entity_id}",
            "novel_id": tables.novel_id,
            "author": tables.author,
            "year": tables.year,
            "mention_count": tables.mention_counts[entity_id],
            "attributes": {
                cat: [lemma for lemma in sorted(c) for _ in range(c[lemma])]
                for cat, c in bags[entity_id].items()
            },
        }
        if entity_id in tables.figure_ids:
            record["figure_id"] = tables.figure_ids[entity_id]
        records.append(record)
    return records, occurrences


def extract_corpus(upstream_dir: Path, characters_out: TextIO, occurrences_out: TextIO) -> tuple[int, int]:
    """Walk every novel directory; returns (records, occurrences) written.

    Novels with missing tables are skipped with a warning.
    """
    n_records = n_occurrences = 0
    for novel_dir in sorted(p for p in Path(upstream_dir).iterdir() if p.is_dir()):
        missing = [t for t in REQUIRED_TABLES if not (novel_dir / t).is_file()]
        if missing:
            log.warning("skipping novel %r: missing %s", novel_dir.name, ", ".join(missing))
            continue
        records, occurrences = convert_novel(load_novel(novel_dir))
        for record in records:
            characters_out.write(json.dumps(record, ensure_ascii=False) + "\n")
        for occ in occurrences:
            occurrences_out.write(
                json.dumps(
                    {
                        "character_id": occ.character_id,
                        "category": occ.category,
                        "lemma": occ.lemma,
                        "sentence": occ.sentence,
                        "start": occ.start,
                        "end": occ.end,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
        n_records += len(records)
        n_occurrences += len(occurrences)
    return n_records, n_occurrences


def read_occurrences(path: str | Path) -> list[AttributeOccurrence]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            occ = AttributeOccurrence(
                character_id=obj["character_id"],
                category=obj["category"],
                lemma=obj["lemma"],
                sentence=obj["sentence"],
                start=int(obj["start"]),
                end=int(obj["end"]),
            )
            if not (0 <= occ.start < occ.end <= len(occ.sentence)):
                raise ValueError(f"line {lineno}: span outside sentence bounds")
            out.append(occ)
    return out
