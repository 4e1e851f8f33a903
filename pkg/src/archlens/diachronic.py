"""Corpus-scale diachronic analyses: prominence filtering, archetype ratio per
time bin, mention-ratio centrality, and quadratic trend fitting.

Time bins are half-open [start, start + width) with the epoch at year 0.
"""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import CharacterRecord, Dataset, Label

log = logging.getLogger(__name__)

DEFAULT_SERIES_BIN_WIDTH = 5


@dataclass(frozen=True)
class TrendPoint:
    bin_start: int
    value: float
    support: int


@dataclass(frozen=True)
class TrendSeries:
    """(time bin, value) pairs, optionally with a fitted quadratic a*x^2+b*x+c."""

    points: tuple[TrendPoint, ...]
    fit: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class CentralityRecord:
    character_id: str
    mention_ratio: float
    year: int


def bin_start(year: int, width: int) -> int:
    return (year // width) * width


def select_top_characters(dataset: Dataset, k: int) -> Dataset:
    """Keep the k most-mentioned characters of each novel (ties: lexicographically
    smaller character_id wins); novels with fewer than k keep all."""
    if k < 1:
        raise ValueError("k must be >= 1")
    by_novel: dict[str, list[CharacterRecord]] = defaultdict(list)
    for rec in dataset.characters:
        by_novel[rec.novel_id].append(rec)
    keep: set[str] = set()
    for novel_chars in by_novel.values():
        ranked = sorted(novel_chars, key=lambda r: (-r.mention_count, r.character_id))
        keep.update(r.character_id for r in ranked[:k])
    filtered = tuple(r for r in dataset.characters if r.character_id in keep)
    return Dataset(characters=filtered, embeddings=dataset.embeddings)


def ratio_series(
    dataset: Dataset | Iterable[CharacterRecord],
    predicted_labels: Mapping[str, Label],
    bin_width_years: int = DEFAULT_SERIES_BIN_WIDTH,
) -> TrendSeries:
    """Fraction of characters predicted Detective per time bin; empty bins omitted."""
    chars = dataset.characters if isinstance(dataset, Dataset) else tuple(dataset)
    totals: dict[int, int] = defaultdict(int)
    detectives: dict[int, int] = defaultdict(int)
    for rec in chars:
        if rec.character_id not in predicted_labels:
            raise ValueError(f"no predicted label for character {rec.character_id!r}")
        b = bin_start(rec.year, bin_width_years)
        totals[b] += 1
        if predicted_labels[rec.character_id] is Label.DETECTIVE:
            detectives[b] += 1
    points = tuple(
        TrendPoint(bin_start=b, value=detectives[b] / totals[b], support=totals[b])
        for b in sorted(totals)
    )
    return TrendSeries(points=points)


def mention_ratios(dataset: Dataset | Iterable[CharacterRecord]) -> dict[str, CentralityRecord]:
    """Chain length relative to the novel mean over the retained character set.

    Callers apply prominence filtering first; the mean is taken over exactly
    the characters present here. Novels whose retained characters all have
    zero mentions are excluded with a warning.
    """
    chars = dataset.characters if isinstance(dataset, Dataset) else tuple(dataset)
    by_novel: dict[str, list[CharacterRecord]] = defaultdict(list)
    for rec in chars:
        by_novel[rec.novel_id].append(rec)
    out: dict[str, CentralityRecord] = {}
    for novel_id, novel_chars in by_novel.items():
        mean_count = sum(r.mention_count for r in novel_chars) / len(novel_chars)
        if mean_count == 0:
            log.warning("novel %r has no mentions among retained characters; excluded", novel_id)
            continue
        for rec in novel_chars:
            out[rec.character_id] = CentralityRecord(
                character_id=rec.character_id,
                mention_ratio=rec.mention_count / mean_count,
                year=rec.year,
            )
    return out


def centrality_series(
    dataset: Dataset | Iterable[CharacterRecord],
    detective_ids: Iterable[str],
    bin_width_years: int = DEFAULT_SERIES_BIN_WIDTH,
) -> TrendSeries:
    """Mean mention ratio of detective characters per time bin."""
    ratios = mention_ratios(dataset)
    per_bin: dict[int, list[float]] = defaultdict(list)
    for cid in detective_ids:
        rec = ratios.get(cid)
        if rec is None:
            continue
        per_bin[bin_start(rec.year, bin_width_years)].append(rec.mention_ratio)
    points = tuple(
        TrendPoint(bin_start=b, value=sum(vals) / len(vals), support=len(vals))
        for b, vals in sorted(per_bin.items())
    )
    return TrendSeries(points=points)


def quadratic_fit(points: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Ordinary least squares on the [x^2, x, 1] basis.

    x is centered at its mean internally for conditioning; the returned
    (a, b, c) are in the original coordinates.
    """
    if len(points) < 3:
        raise ValueError("need at least 3 points for a quadratic fit")
    x = np.array([p[0] for p in points], dtype=np.float64)
    y = np.array([p[1] for p in points], dtype=np.float64)
    if len(np.unique(x)) < 3:
        raise ValueError("need at least 3 distinct x values (rank-deficient design)")
    x0 = x.mean()
    t = x - x0
    design = np.column_stack([t * t, t, np.ones_like(t)])
    (a, bt, ct), *_ = np.linalg.lstsq(design, y, rcond=None)
    # expand a(x-x0)^2 + bt(x-x0) + ct back to the x basis
    b = bt - 2.0 * a * x0
    c = ct - bt * x0 + a * x0 * x0
    return float(a), float(b), float(c)


def fit_series(series: TrendSeries) -> TrendSeries:
    """Attach a quadratic fit over (bin_start, value) points."""
    coeffs = quadratic_fit([(p.bin_start, p.value) for p in series.points])
    return TrendSeries(points=series.points, fit=coeffs)


def write_series(series: TrendSeries, path: str | Path) -> None:
    """CSV `bin_start,value,support`; fit, when present, as a comment header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if series.fit is not None:
            a, b, c = series.fit
            fh.write(f"# fit a={a:.12g},b={b:.12g},c={c:.12g}\n")
        writer = csv.writer(fh)
        writer.writerow(["bin_start", "value", "support"])
        for p in series.points:
            writer.writerow([p.bin_start, f"{p.value:.12g}", p.support])


def read_series(path: str | Path) -> TrendSeries:
    """Read a series CSV produced by `write_series` (fit header ignored)."""
    points: list[TrendPoint] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.reader(rows)
    header = next(reader, None)
    if header is None or [h.strip() for h in header][:2] != ["bin_start", "value"]:
        raise ValueError("series file must have columns bin_start,value[,support]: missing column 'bin_start'")
    for row in reader:
        if not row:
            continue
        support = int(row[2]) if len(row) > 2 and row[2] != "" else 1
        points.append(TrendPoint(bin_start=int(row[0]), value=float(row[1]), support=support))
    return TrendSeries(points=tuple(points))
