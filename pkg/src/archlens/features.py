"""Character representations: MFW bag-of-words vectors and pooled embeddings.

Vocabulary keys are (lemma, category) pairs so the same lemma used as an agent
verb and as a modifier stays two distinct features. Patient verbs are excluded
from the default category set; pass `categories` explicitly to re-include them.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import CharacterRecord, Dataset, EmbeddingMatrix

DEFAULT_CATEGORIES = ("agent_verbs", "modifiers", "possessives")
DEFAULT_VOCAB_SIZE = 1000


class FeatureKind(Enum):
    BOW = "bow"
    EMBEDDING = "embedding"


@dataclass(frozen=True)
class Vocabulary:
    """Ordered (lemma, category) feature space.

    Terms are ordered by descending corpus count, ties broken lexicographically
    by (category, lemma); `counts[i]` is the corpus count of `terms[i]`.
    """

    terms: tuple[tuple[str, str], ...]
    counts: tuple[int, ...]
    categories: tuple[str, ...]

    @cached_property
    def index(self) -> dict[tuple[str, str], int]:
        return {term: i for i, term in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)


def _characters(data: Dataset | Iterable[CharacterRecord]) -> Iterable[CharacterRecord]:
    return data.characters if isinstance(data, Dataset) else data


def build_vocabulary(
    data: Dataset | Iterable[CharacterRecord],
    size: int = DEFAULT_VOCAB_SIZE,
    categories: Sequence[str] = DEFAULT_CATEGORIES,
) -> Vocabulary:
    """Select the top-`size` most frequent (lemma, category) attributes."""
    if size < 1:
        raise ValueError("vocabulary size must be positive")
    totals: Counter = Counter()
    for rec in _characters(data):
        for cat in categories:
            for lemma, count in rec.attributes.category(cat).items():
                totals[(lemma, cat)] += count
    if not totals:
        raise ValueError("no attributes found in the selected categories")
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0][1], kv[0][0]))[:size]
    return Vocabulary(
        terms=tuple(term for term, _ in ranked),
        counts=tuple(count for _, count in ranked),
        categories=tuple(categories),
    )


def bow_vector(character: CharacterRecord, vocab: Vocabulary) -> np.ndarray:
    """Relative frequency of each vocabulary term among the character's
    in-vocabulary attributes; all-zero when none are in vocabulary."""
    values = np.zeros(len(vocab), dtype=np.float64)
    for cat in vocab.categories:
        for lemma, count in character.attributes.category(cat).items():
            pos = vocab.index.get((lemma, cat))
            if pos is not None:
                values[pos] += count
    total = values.sum()
    if total > 0:
        values /= total
    return values


def aggregate_embedding(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Element-wise mean of the attribute vectors, in the given order.

    Summation order is fixed by the input sequence so results are
    deterministic; callers must already have excluded patient-verb vectors.
    """
    if len(vectors) == 0:
        raise ValueError("no attributes to pool")
    first = np.asarray(vectors[0])
    for v in vectors[1:]:
        if np.asarray(v).shape != first.shape:
            raise ValueError(
                f"dimension mismatch: {np.asarray(v).shape} vs {first.shape}"
            )
    stacked = np.stack([np.asarray(v, dtype=np.float64) for v in vectors])
    return stacked.mean(axis=0)


def write_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Export the vocabulary as `rank,category,lemma,count` for inspection."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "category", "lemma", "count"])
        for rank, ((lemma, cat), count) in enumerate(zip(vocab.terms, vocab.counts), start=1):
            writer.writerow([rank, cat, lemma, count])


class BowFeaturizer:
    """Fits an MFW vocabulary on training characters, emits BoW matrices."""

    kind = FeatureKind.BOW

    def __init__(self, size: int = DEFAULT_VOCAB_SIZE, categories: Sequence[str] = DEFAULT_CATEGORIES):
        self.size = size
        self.categories = tuple(categories)

    def fit(self, characters: Iterable[CharacterRecord]) -> "FittedBow":
        return FittedBow(build_vocabulary(characters, self.size, self.categories))


@dataclass(frozen=True)
class FittedBow:
    vocab: Vocabulary
    kind = FeatureKind.BOW

    def transform(self, characters: Iterable[CharacterRecord]) -> np.ndarray:
        chars = list(characters)
        out = np.zeros((len(chars), len(self.vocab)), dtype=np.float64)
        for i, rec in enumerate(chars):
            out[i] = bow_vector(rec, self.vocab)
        return out


class EmbeddingFeaturizer:
    """Looks up precomputed per-character embedding rows; fitting is a no-op."""

    kind = FeatureKind.EMBEDDING

    def __init__(self, matrix: EmbeddingMatrix):
        self.matrix = matrix

    def fit(self, characters: Iterable[CharacterRecord]) -> "FittedEmbedding":
        return FittedEmbedding(self.matrix)


@dataclass(frozen=True)
class FittedEmbedding:
    matrix: EmbeddingMatrix
    kind = FeatureKind.EMBEDDING

    def transform(self, characters: Iterable[CharacterRecord]) -> np.ndarray:
        ids = [rec.character_id for rec in characters]
        return self.matrix.rows(ids).astype(np.float64)
