import json
from pathlib import Path

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizerFast

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "maigret", "fuma", "sa", "pipe", "le", "chien", "dort",
    "il", "observe", "suspect", "poche", "##eau", "chap", "vieux",
]


@pytest.fixture(scope="session")
def tiny_encoder(tmp_path_factory):
    """Randomly initialized word-piece encoder saved locally; deterministic."""
    d = tmp_path_factory.mktemp("encoder")
    (d / "vocab.txt").write_text("\n".join(VOCAB))
    tokenizer = BertTokenizerFast(vocab_file=str(d / "vocab.txt"), do_lower_case=True)
    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=16,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=32,
    )
    model = BertModel(config)
    model.eval()
    model.save_pretrained(d)
    tokenizer.save_pretrained(d)
    return str(d)


def write_upstream_novel(root: Path, novel_id: str, author="simenon", year=1931,
                         tokens=None, entities=None, attributes=None):
    novel = root / novel_id
    novel.mkdir(parents=True)
    (novel / "meta.json").write_text(json.dumps({"author": author, "year": year}))
    token_rows = tokens if tokens is not None else [
        ("s1", 0, "maigret"), ("s1", 1, "fuma"), ("s1", 2, "sa"), ("s1", 3, "pipe"),
        ("s2", 0, "le"), ("s2", 1, "chien"), ("s2", 2, "dort"),
    ]
    (novel / "tokens.tsv").write_text(
        "\n".join("\t".join(str(x) for x in row) for row in token_rows) + "\n"
    )
    entity_rows = entities if entities is not None else [("e1", 42)]
    (novel / "entities.tsv").write_text(
        "\n".join("\t".join(str(x) for x in row) for row in entity_rows) + "\n"
    )
    attribute_rows = attributes if attributes is not None else [
        ("e1", "agent_verb", "fumer", "s1", 1, 2),
        ("e1", "possessive", "pipe", "s1", 3, 4),
        ("e1", "modifier", "vieux", "s2", 1, 2),
    ]
    (novel / "attributes.tsv").write_text(
        "\n".join("\t".join(str(x) for x in row) for row in attribute_rows) + "\n"
    )
    return novel
