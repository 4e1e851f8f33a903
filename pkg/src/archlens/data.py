"""Corpus data model and interchange formats.

Canonical on-disk inputs:

  characters file   UTF-8 JSON lines, one character record per line with keys
                    character_id, novel_id, author, year, mention_count,
                    attributes{agent_verbs[], patient_verbs[], modifiers[],
                    possessives[]} and optionally label
                    ("detective" | "non_detective") and figure_id.
                    Attribute arrays list lemma occurrences with repetition.
  labels file       CSV with header `character_id,label`, overriding labels.
  embeddings file   little-endian binary: magic "CEMB", version u32=1,
                    dim u32, count u64, then count records of
                    [id_len u16, id bytes UTF-8, dim x f32].

Linguistic processing (tokenisation, lemmatisation, coreference) is upstream's
job; ingestion only trims and lowercases lemmas.
"""

from __future__ import annotations

import csv
import json
import logging
import struct
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import BinaryIO, Iterable, Mapping, TextIO

import numpy as np

log = logging.getLogger(__name__)

ATTRIBUTE_CATEGORIES = ("agent_verbs", "patient_verbs", "modifiers", "possessives")

DEFAULT_YEAR_RANGE = (1700, 2100)

EMBEDDINGS_MAGIC = b"CEMB"
EMBEDDINGS_VERSION = 1


class ParseError(ValueError):
    """Malformed characters/labels input. Carries a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FormatError(ValueError):
    """Structurally invalid binary file (bad magic, version or layout)."""


class CorruptionError(FormatError):
    """Truncated or internally inconsistent binary file."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class Label(Enum):
    DETECTIVE = "detective"
    NON_DETECTIVE = "non_detective"


@dataclass(frozen=True)
class AttributeBag:
    """Multisets of lemmas attributed to one character, by category."""

    agent_verbs: Counter = field(default_factory=Counter)
    patient_verbs: Counter = field(default_factory=Counter)
    modifiers: Counter = field(default_factory=Counter)
    possessives: Counter = field(default_factory=Counter)

    def category(self, name: str) -> Counter:
        if name not in ATTRIBUTE_CATEGORIES:
            raise ValueError(f"unknown attribute category {name!r}")
        return getattr(self, name)

    def total(self, categories: Iterable[str] = ATTRIBUTE_CATEGORIES) -> int:
        return sum(sum(self.category(c).values()) for c in categories)


@dataclass(frozen=True)
class CharacterRecord:
    """One character occurrence in one novel.

    `figure_id` identifies the recurring figure across novels (all Maigret
    instances share one); it defaults to character_id when upstream does not
    supply it.
    """

    character_id: str
    novel_id: str
    author: str
    year: int
    mention_count: int
    attributes: AttributeBag
    label: Label | None = None
    figure_id: str = ""

    def __post_init__(self):
        if not self.figure_id:
            object.__setattr__(self, "figure_id", self.character_id)


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Dense per-character vectors of a fixed dimension, float32."""

    dim: int
    entries: dict[str, np.ndarray]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        if self.dim != other.dim or self.entries.keys() != other.entries.keys():
            return False
        return all(
            np.array_equal(v, other.entries[k]) and v.dtype == other.entries[k].dtype
            for k, v in self.entries.items()
        )

    @classmethod
    def build(cls, dim: int, entries: Mapping[str, np.ndarray]) -> "EmbeddingMatrix":
        """Cast vectors to float32 and enforce the shape/finiteness invariants."""
        if dim <= 0:
            raise ValueError("embedding dim must be positive")
        out: dict[str, np.ndarray] = {}
        for cid, vec in entries.items():
            arr = np.asarray(vec, dtype=np.float32)
            if arr.shape != (dim,):
                raise ValueError(f"embedding for {cid!r} has shape {arr.shape}, expected ({dim},)")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"embedding for {cid!r} has non-finite components")
            out[cid] = arr
        return cls(dim=dim, entries=out)

    def rows(self, character_ids: Iterable[str]) -> np.ndarray:
        """Stack the vectors for `character_ids` into an (n, dim) matrix."""
        vecs = []
        for cid in character_ids:
            if cid not in self.entries:
                raise ValueError(f"no embedding for character {cid!r}")
            vecs.append(self.entries[cid])
        if not vecs:
            return np.empty((0, self.dim), dtype=np.float32)
        return np.stack(vecs)


@dataclass(frozen=True)
class Dataset:
    """Immutable corpus view: characters plus optional embeddings."""

    characters: tuple[CharacterRecord, ...]
    embeddings: EmbeddingMatrix | None = None

    @cached_property
    def by_id(self) -> dict[str, CharacterRecord]:
        return {c.character_id: c for c in self.characters}

    def labeled(self) -> tuple[CharacterRecord, ...]:
        return tuple(c for c in self.characters if c.label is not None)


@dataclass(frozen=True)
class Finding:
    """One validation finding; never raised, only reported."""

    character_id: str | None
    reason: str

    def __str__(self) -> str:
        who = self.character_id if self.character_id is not None else "<dataset>"
        return f"{who}: {self.reason}"


def _lemma_list(value, key: str, lineno: int) -> Counter:
    if not isinstance(value, list):
        raise ParseError(f"attributes.{key} must be an array", lineno)
    bag: Counter = Counter()
    for item in value:
        if not isinstance(item, str):
            raise ParseError(f"attributes.{key} contains a non-string lemma", lineno)
        lemma = item.strip().lower()
        if not lemma:
            raise ParseError(f"attributes.{key} contains an empty lemma", lineno)
        bag[lemma] += 1
    return bag


def _require_str(obj: dict, key: str, lineno: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value:
        raise ParseError(f"missing or invalid {key!r}", lineno)
    return value


def _require_int(obj: dict, key: str, lineno: int) -> int:
    value = obj.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"missing or invalid {key!r}", lineno)
    return value


def _record_from_obj(obj: dict, lineno: int, warned_categories: set) -> CharacterRecord:
    character_id = _require_str(obj, "character_id", lineno)
    novel_id = _require_str(obj, "novel_id", lineno)
    author = _require_str(obj, "author", lineno)
    year = _require_int(obj, "year", lineno)
    mention_count = _require_int(obj, "mention_count", lineno)
    if mention_count < 0:
        raise ParseError("mention_count must be non-negative", lineno)

    attrs = obj.get("attributes")
    if not isinstance(attrs, dict):
        raise ParseError("missing or invalid 'attributes'", lineno)
    bags = {}
    for key, value in attrs.items():
        if key not in ATTRIBUTE_CATEGORIES:
            if key not in warned_categories:
                warned_categories.add(key)
                log.warning("ignoring unknown attribute category %r", key)
            continue
        bags[key] = _lemma_list(value, key, lineno)
    bag = AttributeBag(**bags)

    label = None
    raw_label = obj.get("label")
    if raw_label is not None:
        if raw_label == Label.DETECTIVE.value:
            label = Label.DETECTIVE
        elif raw_label == Label.NON_DETECTIVE.value:
            label = Label.NON_DETECTIVE
        else:
            # Binary task: a third label value is an input error, not a class.
            raise ParseError(f"unknown label {raw_label!r}", lineno)

    figure_id = obj.get("figure_id", "")
    if figure_id and not isinstance(figure_id, str):
        raise ParseError("invalid 'figure_id'", lineno)

    return CharacterRecord(
        character_id=character_id,
        novel_id=novel_id,
        author=author,
        year=year,
        mention_count=mention_count,
        attributes=bag,
        label=label,
        figure_id=figure_id or "",
    )


def parse_characters(lines: Iterable[str]) -> Dataset:
    """Parse a characters file (one JSON object per non-empty line).

    Unknown top-level keys are ignored; unknown attribute categories are
    ignored with a warning. Duplicate character ids and malformed lines are
    hard errors carrying the 1-based line number.
    """
    records: list[CharacterRecord] = []
    seen: dict[str, int] = {}
    warned: set = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("record is not an object", lineno)
        record = _record_from_obj(obj, lineno, warned)
        if record.character_id in seen:
            raise ParseError(
                f"duplicate character_id {record.character_id!r} "
                f"(first seen on line {seen[record.character_id]})",
                lineno,
            )
        seen[record.character_id] = lineno
        records.append(record)
    return Dataset(characters=tuple(records))


def read_characters(path: str | Path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_characters(fh)


def _bag_to_lists(bag: AttributeBag) -> dict:
    out = {}
    for cat in ATTRIBUTE_CATEGORIES:
        counter = bag.category(cat)
        out[cat] = [lemma for lemma in sorted(counter) for _ in range(counter[lemma])]
    return out


def write_characters(dataset: Dataset, fh: TextIO) -> None:
    """Serialize records to the characters grammar (normalized lemma order)."""
    for rec in dataset.characters:
        obj = {
            "character_id": rec.character_id,
            "novel_id": rec.novel_id,
            "author": rec.author,
            "year": rec.year,
            "mention_count": rec.mention_count,
            "attributes": _bag_to_lists(rec.attributes),
        }
        if rec.figure_id != rec.character_id:
            obj["figure_id"] = rec.figure_id
        if rec.label is not None:
            obj["label"] = rec.label.value
        fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=False))
        fh.write("\n")


def write_characters_file(dataset: Dataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_characters(dataset, fh)


def read_labels(path: str | Path) -> dict[str, Label]:
    """Read a `character_id,label` CSV override file."""
    out: dict[str, Label] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["character_id", "label"]:
            raise ParseError("labels file must start with header 'character_id,label'", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError("expected two columns", lineno)
            cid, raw = row[0].strip(), row[1].strip()
            if raw == Label.DETECTIVE.value:
                lab = Label.DETECTIVE
            elif raw == Label.NON_DETECTIVE.value:
                lab = Label.NON_DETECTIVE
            else:
                raise ParseError(f"unknown label {raw!r}", lineno)
            if cid in out:
                raise ParseError(f"duplicate character_id {cid!r}", lineno)
            out[cid] = lab
    return out


def with_labels(dataset: Dataset, labels: Mapping[str, Label]) -> Dataset:
    """Return a dataset with the given labels applied on top of existing ones."""
    unknown = set(labels) - set(dataset.by_id)
    if unknown:
        raise ValueError(f"labels for unknown character ids: {sorted(unknown)[:5]}")
    characters = tuple(
        replace(c, label=labels[c.character_id]) if c.character_id in labels else c
        for c in dataset.characters
    )
    return Dataset(characters=characters, embeddings=dataset.embeddings)


def validate_dataset(
    dataset: Dataset, year_range: tuple[int, int] = DEFAULT_YEAR_RANGE
) -> list[Finding]:
    """Check every type invariant; returns findings instead of raising."""
    findings: list[Finding] = []
    seen: set[str] = set()
    for rec in dataset.characters:
        if not rec.character_id:
            findings.append(Finding(None, "empty character_id"))
            continue
        if rec.character_id in seen:
            findings.append(Finding(rec.character_id, "duplicate character_id"))
        seen.add(rec.character_id)
        if rec.mention_count < 0:
            findings.append(Finding(rec.character_id, "mention_count is negative"))
        if not (year_range[0] <= rec.year <= year_range[1]):
            findings.append(
                Finding(rec.character_id, f"year out of range {year_range}: {rec.year}")
            )
        if rec.label is not None and not isinstance(rec.label, Label):
            findings.append(Finding(rec.character_id, f"invalid label {rec.label!r}"))
        for cat in ATTRIBUTE_CATEGORIES:
            for lemma, count in rec.attributes.category(cat).items():
                if not lemma or lemma != lemma.strip().lower():
                    findings.append(
                        Finding(rec.character_id, f"{cat}: lemma {lemma!r} not trimmed/lowercase")
                    )
                if count < 1:
                    findings.append(
                        Finding(rec.character_id, f"{cat}: lemma {lemma!r} has count {count}")
                    )
    emb = dataset.embeddings
    if emb is not None:
        for cid, vec in emb.entries.items():
            if vec.shape != (emb.dim,):
                findings.append(Finding(cid, f"embedding has {vec.shape[0]} components, expected {emb.dim}"))
            elif not np.all(np.isfinite(vec)):
                findings.append(Finding(cid, "embedding has non-finite components"))
        for rec in dataset.characters:
            if rec.label is not None and rec.character_id not in emb.entries:
                findings.append(Finding(rec.character_id, "missing embedding"))
    return findings


def _read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    offset = fh.tell()
    data = fh.read(n)
    if len(data) != n:
        raise CorruptionError(f"truncated while reading {what}", offset)
    return data


def write_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write the CEMB binary format; vectors stored as little-endian float32."""
    entries = matrix.entries
    with open(path, "wb") as fh:
        fh.write(EMBEDDINGS_MAGIC)
        fh.write(struct.pack("<I", EMBEDDINGS_VERSION))
        fh.write(struct.pack("<I", matrix.dim))
        fh.write(struct.pack("<Q", len(entries)))
        for cid, vec in entries.items():
            arr = np.ascontiguousarray(vec, dtype="<f4")
            if arr.shape != (matrix.dim,):
                raise ValueError(f"embedding for {cid!r} has wrong dimension")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"embedding for {cid!r} has non-finite components")
            id_bytes = cid.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise ValueError(f"character id too long: {cid[:32]!r}...")
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(arr.tobytes())


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Read the CEMB binary format written by `write_embeddings`."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != EMBEDDINGS_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {EMBEDDINGS_MAGIC!r}")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != EMBEDDINGS_VERSION:
            raise FormatError(f"unsupported version {version}")
        (dim,) = struct.unpack("<I", _read_exact(fh, 4, "dim"))
        if dim == 0:
            raise FormatError("dim must be positive")
        (count,) = struct.unpack("<Q", _read_exact(fh, 8, "count"))
        entries: dict[str, np.ndarray] = {}
        for i in range(count):
            (id_len,) = struct.unpack("<H", _read_exact(fh, 2, f"record {i} id length"))
            id_offset = fh.tell()
            raw_id = _read_exact(fh, id_len, f"record {i} id")
            try:
                cid = raw_id.decode("utf-8")
            except UnicodeDecodeError:
                raise CorruptionError(f"record {i} id is not valid UTF-8", id_offset) from None
            vec_offset = fh.tell()
            data = _read_exact(fh, dim * 4, f"record {i} vector")
            vec = np.frombuffer(data, dtype="<f4").copy()
            if not np.all(np.isfinite(vec)):
                raise CorruptionError(f"record {i} ({cid!r}) has non-finite components", vec_offset)
            if cid in entries:
                raise CorruptionError(f"duplicate character id {cid!r}", id_offset)
            entries[cid] = vec
        offset = fh.tell()
        if fh.read(1):
            raise CorruptionError("trailing bytes after last record", offset)
    return EmbeddingMatrix(dim=dim, entries=entries)
