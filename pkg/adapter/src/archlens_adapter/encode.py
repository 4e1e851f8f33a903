"""Contextual character embeddings from a pretrained masked-language encoder.

Per occurrence: mean of the final-hidden-layer sub-token vectors covering the
occurrence's character span. Per character: mean over its occurrence vectors.
Patient-verb occurrences are excluded by default; the hidden size is read from
the model, never hardcoded.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cemb import write_cemb
from .upstream import AttributeOccurrence

log = logging.getLogger(__name__)

DEFAULT_EXCLUDE = ("patient_verbs",)


@dataclass
class EmbedReport:
    """What was pooled and what was dropped, for the sidecar report."""

    characters_written: int = 0
    dim: int = 0
    dropped_characters: list[tuple[str, str]] = field(default_factory=list)
    skipped_occurrences: int = 0


class Encoder:
    """Thin wrapper over a transformers AutoModel for span pooling."""

    def __init__(self, encoder_id: str, device: str = "cpu"):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self.tokenizer = AutoTokenizer.from_pretrained(encoder_id, use_fast=True)
        self.model = AutoModel.from_pretrained(encoder_id).to(device)
        self.model.eval()
        self.device = device
        self.torch = torch

    def span_vectors(
        self, sentences: Sequence[str], spans: Sequence[tuple[int, int]]
    ) -> list[np.ndarray | None]:
        """Mean final-layer vector over the sub-tokens overlapping each span.

        Returns None for spans with no surviving sub-token (e.g. truncated
        away); offsets of special tokens never contribute.
        """
        torch = self.torch
        enc = self.tokenizer(
            list(sentences),
            return_offsets_mapping=True,
            return_special_tokens_mask=True,
            padding=True,
            truncation=True,
            return_tensors="pt",
        )
        offsets = enc.pop("offset_mapping")
        specials = enc.pop("special_tokens_mask")
        enc = {k: v.to(self.device) for k, v in enc.items()}
        with torch.no_grad():
            hidden = self.model(**enc).last_hidden_state.cpu().numpy()
        attention = enc["attention_mask"].cpu().numpy()
        out: list[np.ndarray | None] = []
        for i, (start, end) in enumerate(spans):
            token_offsets = offsets[i].numpy()
            keep = (
                (attention[i] == 1)
                & (specials[i].numpy() == 0)
                & (token_offsets[:, 0] < end)
                & (token_offsets[:, 1] > start)
            )
            if not keep.any():
                out.append(None)
            else:
                out.append(hidden[i][keep].mean(axis=0).astype(np.float64))
        return out


def pool_characters(
    occurrences: Sequence[AttributeOccurrence],
    encoder: Encoder,
    exclude: Sequence[str] = DEFAULT_EXCLUDE,
    batch_size: int = 16,
) -> tuple[dict[str, np.ndarray], EmbedReport]:
    """Nested mean pooling: occurrence vectors per character, then characters.

    Characters whose occurrences are all excluded (or all unplaceable) are
    dropped and listed in the report.
    """
    excluded = set(exclude)
    report = EmbedReport()
    kept: dict[str, list[AttributeOccurrence]] = {}
    seen: list[str] = []
    for occ in occurrences:
        if occ.character_id not in kept:
            kept[occ.character_id] = []
            seen.append(occ.character_id)
        if occ.category not in excluded:
            kept[occ.character_id].append(occ)

    vectors: dict[str, list[np.ndarray]] = {cid: [] for cid in seen}
    pending = [(cid, occ) for cid in seen for occ in kept[cid]]
    for lo in range(0, len(pending), batch_size):
        batch = pending[lo : lo + batch_size]
        sents = [occ.sentence for _, occ in batch]
        spans = [(occ.start, occ.end) for _, occ in batch]
        for (cid, occ), vec in zip(batch, encoder.span_vectors(sents, spans)):
            if vec is None:
                report.skipped_occurrences += 1
                log.warning("span [%d, %d) of %r lost to truncation; occurrence skipped",
                            occ.start, occ.end, cid)
            else:
                vectors[cid].append(vec)

    entries: dict[str, np.ndarray] = {}
    for cid in sorted(seen):
        vecs = vectors[cid]
        if not vecs:
            reason = "no occurrences outside excluded categories" if not kept[cid] else "all spans unplaceable"
            report.dropped_characters.append((cid, reason))
            continue
        entries[cid] = np.mean(np.stack(vecs), axis=0).astype(np.float32)
    report.characters_written = len(entries)
    if entries:
        report.dim = next(iter(entries.values())).shape[0]
    return entries, report


def embed_to_file(
    occurrences: Sequence[AttributeOccurrence],
    encoder_id: str,
    out_path: str | Path,
    exclude: Sequence[str] = DEFAULT_EXCLUDE,
    batch_size: int = 16,
    report_path: str | Path | None = None,
) -> EmbedReport:
    encoder = Encoder(encoder_id)
    entries, report = pool_characters(occurrences, encoder, exclude=exclude, batch_size=batch_size)
    if not entries:
        raise ValueError("no characters left to embed")
    write_cemb(entries, report.dim, out_path)
    if report_path is not None:
        lines = [f"characters_written\t{report.characters_written}",
                 f"dim\t{report.dim}",
                 f"skipped_occurrences\t{report.skipped_occurrences}"]
        for cid, reason in report.dropped_characters:
            lines.append(f"dropped\t{cid}\t{reason}")
        Path(report_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return report
