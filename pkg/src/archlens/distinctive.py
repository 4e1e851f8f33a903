"""Attribute distinctiveness between two character groups.

The score is a Dirichlet-smoothed log-odds z-statistic:

    z = [ log((c1 + p/n)/(n1 + 1)) - log((c2 + p/n)/(n2 + 1)) ]
        / sqrt( 1/(c1 + p/n) + 1/(c2 + p/n) )

with p = c1 + c2 and n = n1 + n2, evaluated in 64-bit floats. Counts and the
(p, n) prior are computed within one attribute category at a time, and scores
are max-abs normalized to [-1, 1] per category.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .data import CharacterRecord, Dataset
from .features import DEFAULT_CATEGORIES


@dataclass(frozen=True)
class AttributeCounts:
    """Count aggregate for one attribute: occurrences and category totals per group."""

    c1: int
    c2: int
    n1: int
    n2: int

    def __post_init__(self):
        if not (0 <= self.c1 <= self.n1):
            raise ValueError(f"need 0 <= c1 <= n1, got c1={self.c1}, n1={self.n1}")
        if not (0 <= self.c2 <= self.n2):
            raise ValueError(f"need 0 <= c2 <= n2, got c2={self.c2}, n2={self.n2}")
        if self.n == 0:
            raise ValueError("n = n1 + n2 must be positive")

    @property
    def p(self) -> int:
        return self.c1 + self.c2

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    def swapped(self) -> "AttributeCounts":
        return AttributeCounts(c1=self.c2, c2=self.c1, n1=self.n2, n2=self.n1)


def zscore(counts: AttributeCounts) -> float:
    """Smoothed log-odds z-score; positive means associated with group 1.

    The numerator is written as a difference of logs so that swapping the two
    groups negates the score exactly.
    """
    if counts.p == 0:
        raise ValueError("attribute occurs in neither group (p = 0)")
    prior = counts.p / counts.n
    a1 = counts.c1 + prior
    a2 = counts.c2 + prior
    numerator = math.log(a1 / (counts.n1 + 1)) - math.log(a2 / (counts.n2 + 1))
    denominator = math.sqrt(1.0 / a1 + 1.0 / a2)
    return numerator / denominator


@dataclass(frozen=True)
class AttributeScore:
    category: str
    lemma: str
    c1: int
    c2: int
    n1: int
    n2: int
    raw_z: float
    normalized_z: float


@dataclass(frozen=True)
class DistinctivenessTable:
    rows: tuple[AttributeScore, ...]
    group_labels: tuple[str, str]

    def category_rows(self, category: str) -> tuple[AttributeScore, ...]:
        return tuple(r for r in self.rows if r.category == category)


class Sign(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    BOTH = "both"


def group_distinctiveness(
    data: Dataset | Iterable[CharacterRecord],
    partition: Mapping[str, int],
    categories: Sequence[str] = DEFAULT_CATEGORIES,
    group_labels: tuple[str, str] = ("group1", "group2"),
) -> DistinctivenessTable:
    """Score every attribute occurring in either group, per category.

    `partition` maps character_id to group 1 or 2; characters it does not
    mention are ignored. Totals (n1, n2) and the smoothing prior are computed
    independently within each category.
    """
    chars = data.characters if isinstance(data, Dataset) else tuple(data)
    group1 = [c for c in chars if partition.get(c.character_id) == 1]
    group2 = [c for c in chars if partition.get(c.character_id) == 2]
    if not group1 or not group2:
        raise ValueError("both groups must be non-empty")

    rows: list[AttributeScore] = []
    for cat in categories:
        counts1: Counter = Counter()
        counts2: Counter = Counter()
        for rec in group1:
            counts1.update(rec.attributes.category(cat))
        for rec in group2:
            counts2.update(rec.attributes.category(cat))
        n1 = sum(counts1.values())
        n2 = sum(counts2.values())
        lemmas = sorted(set(counts1) | set(counts2))
        if not lemmas:
            continue
        raw: dict[str, float] = {}
        for lemma in lemmas:
            raw[lemma] = zscore(
                AttributeCounts(c1=counts1[lemma], c2=counts2[lemma], n1=n1, n2=n2)
            )
        max_abs = max(abs(z) for z in raw.values())
        cat_rows = [
            AttributeScore(
                category=cat,
                lemma=lemma,
                c1=counts1[lemma],
                c2=counts2[lemma],
                n1=n1,
                n2=n2,
                raw_z=raw[lemma],
                normalized_z=raw[lemma] / max_abs if max_abs > 0 else 0.0,
            )
            for lemma in lemmas
        ]
        cat_rows.sort(key=lambda r: (-r.raw_z, r.lemma))
        rows.extend(cat_rows)
    return DistinctivenessTable(rows=tuple(rows), group_labels=group_labels)


def top_attributes(
    table: DistinctivenessTable | Sequence[AttributeScore],
    k: int,
    sign: Sign = Sign.POSITIVE,
) -> list[AttributeScore]:
    """Top-k rows by raw z-score; POSITIVE/NEGATIVE filter strictly signed
    rows, BOTH returns k most positive followed by k most negative."""
    if k < 1:
        raise ValueError("k must be >= 1")
    rows = list(table.rows) if isinstance(table, DistinctivenessTable) else list(table)
    if sign is Sign.POSITIVE:
        kept = [r for r in rows if r.raw_z > 0]
        kept.sort(key=lambda r: (-r.raw_z, r.category, r.lemma))
        return kept[:k]
    if sign is Sign.NEGATIVE:
        kept = [r for r in rows if r.raw_z < 0]
        kept.sort(key=lambda r: (r.raw_z, r.category, r.lemma))
        return kept[:k]
    return top_attributes(rows, k, Sign.POSITIVE) + top_attributes(rows, k, Sign.NEGATIVE)


def write_distinctiveness(table: DistinctivenessTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["category", "lemma", "c1", "c2", "n1", "n2", "raw_z", "normalized_z"])
        for r in table.rows:
            writer.writerow(
                [r.category, r.lemma, r.c1, r.c2, r.n1, r.n2, f"{r.raw_z:.12g}", f"{r.normalized_z:.12g}"]
            )
