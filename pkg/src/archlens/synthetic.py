"""Synthetic corpora with planted signal, for tests and demo scripts.

The real annotated corpus is not redistributable, so end-to-end checks run on
generated data: two classes with partially disjoint attribute vocabularies and
Gaussian embedding clouds at a controlled centroid separation.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .data import AttributeBag, CharacterRecord, Dataset, EmbeddingMatrix, Label

_CATEGORIES = ("agent_verbs", "patient_verbs", "modifiers", "possessives")


@dataclass(frozen=True)
class PlantedConfig:
    n_characters: int = 600
    n_detectives: int = 180
    embedding_dim: int = 32
    separation: float = 4.0      # centroid distance in units of within-class spread
    exclusive_fraction: float = 0.3  # share of token mass drawn from class-exclusive lemmas
    shared_lemmas: int = 35
    exclusive_lemmas: int = 15
    tokens_per_category: tuple[int, int] = (8, 20)
    n_authors: int = 30
    year_range: tuple[int, int] = (1860, 2000)
    seed: int = 0


def _draw_bag(rng: np.random.Generator, cls: str, cfg: PlantedConfig) -> AttributeBag:
    bags = {}
    for cat in _CATEGORIES:
        counter: Counter = Counter()
        lo, hi = cfg.tokens_per_category
        n_tokens = int(rng.integers(lo, hi + 1))
        if cat == "patient_verbs":
            n_tokens = max(1, n_tokens // 4)  # sparse, as in real pipelines
        for _ in range(n_tokens):
            if rng.random() < cfg.exclusive_fraction:
                j = int(rng.integers(cfg.exclusive_lemmas))
                counter[f"{cat[:3]}_{cls}{j}"] += 1
            else:
                j = int(rng.integers(cfg.shared_lemmas))
                counter[f"{cat[:3]}_sh{j}"] += 1
        bags[cat] = counter
    return AttributeBag(**bags)


def planted_corpus(cfg: PlantedConfig = PlantedConfig()) -> Dataset:
    """Labeled corpus with separable classes in both feature spaces.

    Class membership is shuffled against author and year so group-held-out
    protocols see the same signal as stratified ones.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_characters
    labels = np.array([Label.DETECTIVE] * cfg.n_detectives + [Label.NON_DETECTIVE] * (n - cfg.n_detectives))
    rng.shuffle(labels)

    direction = rng.standard_normal(cfg.embedding_dim)
    direction /= np.linalg.norm(direction)
    offset = direction * cfg.separation

    records = []
    entries = {}
    y_lo, y_hi = cfg.year_range
    for i in range(n):
        label = labels[i]
        cls = "det" if label is Label.DETECTIVE else "non"
        cid = f"c{i:04d}"
        year = y_lo + (i * (y_hi - y_lo)) // max(n - 1, 1)
        records.append(
            CharacterRecord(
                character_id=cid,
                novel_id=f"n{i:04d}",
                author=f"author{i % cfg.n_authors:02d}",
                year=int(year),
                mention_count=int(rng.integers(5, 120)),
                attributes=_draw_bag(rng, cls, cfg),
                label=label,
            )
        )
        center = offset if label is Label.DETECTIVE else np.zeros(cfg.embedding_dim)
        entries[cid] = center + rng.standard_normal(cfg.embedding_dim)
    matrix = EmbeddingMatrix.build(cfg.embedding_dim, entries)
    return Dataset(characters=tuple(records), embeddings=matrix)


def annotated_scale_fixture(
    n_detectives: int = 185, n_non: int = 419, seed: int = 0
) -> Dataset:
    """Labeled fixture at the annotated-set scale (default 185/419)."""
    cfg = PlantedConfig(
        n_characters=n_detectives + n_non,
        n_detectives=n_detectives,
        seed=seed,
    )
    return planted_corpus(cfg)


def novel_corpus(
    n_novels: int,
    chars_per_novel: int = 12,
    seed: int = 0,
    year_range: tuple[int, int] = (1850, 2020),
) -> Dataset:
    """Unlabeled corpus of novels for prominence/diachronic analyses."""
    rng = np.random.default_rng(seed)
    records = []
    y_lo, y_hi = year_range
    for v in range(n_novels):
        year = y_lo + (v * (y_hi - y_lo)) // max(n_novels - 1, 1)
        mentions = rng.integers(1, 400, size=chars_per_novel)
        for j in range(chars_per_novel):
            records.append(
                CharacterRecord(
                    character_id=f"v{v:05d}_c{j:02d}",
                    novel_id=f"v{v:05d}",
                    author=f"author{v % 97:02d}",
                    year=int(year),
                    mention_count=int(mentions[j]),
                    attributes=AttributeBag(agent_verbs=Counter({"dire": 1})),
                )
            )
    return Dataset(characters=tuple(records))
