import json
from collections import Counter

import numpy as np
import pytest

from archlens.data import AttributeBag, CharacterRecord, EmbeddingMatrix
from archlens.synthetic import PlantedConfig, planted_corpus


def make_character(
    character_id="c1",
    novel_id="n1",
    author="gaboriau",
    year=1866,
    mention_count=10,
    label=None,
    figure_id="",
    **bags,
):
    counters = {k: Counter(v) for k, v in bags.items()}
    return CharacterRecord(
        character_id=character_id,
        novel_id=novel_id,
        author=author,
        year=year,
        mention_count=mention_count,
        attributes=AttributeBag(**counters),
        label=label,
        figure_id=figure_id,
    )


def character_line(
    character_id="c1",
    novel_id="n1",
    author="gaboriau",
    year=1866,
    mention_count=10,
    label=None,
    attributes=None,
    **extra,
):
    obj = {
        "character_id": character_id,
        "novel_id": novel_id,
        "author": author,
        "year": year,
        "mention_count": mention_count,
        "attributes": attributes or {"agent_verbs": ["dire"], "patient_verbs": [],
                                     "modifiers": [], "possessives": []},
    }
    if label is not None:
        obj["label"] = label
    obj.update(extra)
    return json.dumps(obj)


def random_matrix(ids, dim, seed=0):
    rng = np.random.default_rng(seed)
    return EmbeddingMatrix.build(dim, {cid: rng.standard_normal(dim) for cid in ids})


@pytest.fixture(scope="session")
def planted():
    """The 600-character planted-signal corpus used by end-to-end checks."""
    return planted_corpus(PlantedConfig(seed=7))


@pytest.fixture(scope="session")
def small_planted():
    return planted_corpus(
        PlantedConfig(n_characters=80, n_detectives=30, embedding_dim=8, n_authors=8, seed=3)
    )
