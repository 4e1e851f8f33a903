"""Semantic clustering of detective embeddings: PCA projection, k-means with
k-means++ restarts, and per-cluster distinctive vocabulary.

Clustering defaults to full-dimension embeddings; 2-D coordinates (built-in
PCA or externally computed) are carried alongside for plotting.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data import Dataset, EmbeddingMatrix
from .distinctive import AttributeScore, Sign, group_distinctiveness, top_attributes
from .features import DEFAULT_CATEGORIES
from .runtime import ordered_map

DEFAULT_K = 3
DEFAULT_RESTARTS = 10
MAX_LLOYD_ITERATIONS = 300


@dataclass(frozen=True)
class PcaResult:
    coords: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    mean: np.ndarray


def pca_project(X: np.ndarray, out_dim: int = 2) -> PcaResult:
    """Project onto the top principal axes of the mean-centered data.

    Sign convention: each component's largest-magnitude loading is positive,
    so the projection is deterministic.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    n, d = X.shape
    if n < out_dim:
        raise ValueError(f"need at least {out_dim} rows, have {n}")
    if out_dim < 1 or out_dim > d:
        raise ValueError(f"out_dim must be in [1, {d}]")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite values in input")
    mean = X.mean(axis=0)
    centered = X - mean
    if not np.any(centered):
        raise ValueError("zero-variance data")
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:out_dim].copy()
    for i in range(out_dim):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]
    coords = centered @ components.T
    explained = (s[:out_dim] ** 2) / max(n - 1, 1)
    return PcaResult(coords=coords, components=components, explained_variance=explained, mean=mean)


@dataclass(frozen=True)
class KMeansFit:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    trace: tuple[float, ...]


def _pairwise_sq(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d2 = (X * X).sum(axis=1)[:, None] - 2.0 * (X @ C.T) + (C * C).sum(axis=1)[None, :]
    return np.maximum(d2, 0.0)


def _exact_inertia(X: np.ndarray, C: np.ndarray, labels: np.ndarray) -> float:
    diff = X - C[labels]
    return float((diff * diff).sum())


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = X[first]
    d2 = _pairwise_sq(X, centers[:1]).ravel()
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = X[idx]
        d2 = np.minimum(d2, _pairwise_sq(X, centers[j : j + 1]).ravel())
    return centers


def _lloyd(X: np.ndarray, centers: np.ndarray, k: int) -> KMeansFit:
    labels = np.full(X.shape[0], -1, dtype=np.int64)
    trace: list[float] = []
    for _ in range(MAX_LLOYD_ITERATIONS):
        d2 = _pairwise_sq(X, centers)
        new_labels = d2.argmin(axis=1)
        # repair empty clusters by reseeding them at the farthest point
        assigned_d2 = d2[np.arange(X.shape[0]), new_labels].copy()
        for c in range(k):
            if not np.any(new_labels == c):
                far = int(assigned_d2.argmax())
                new_labels[far] = c
                assigned_d2[far] = 0.0
        trace.append(_exact_inertia(X, centers, new_labels))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centers = np.stack([X[labels == c].mean(axis=0) for c in range(k)])
    inertia = _exact_inertia(X, centers, labels)
    return KMeansFit(labels=labels, centroids=centers, inertia=inertia, trace=tuple(trace))


def kmeans(
    X: np.ndarray,
    k: int,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    ) -> KMeansFit:
    """Best-of-`restarts` Lloyd runs from k-means++ starts, deterministic given
    seed; ties between restarts break on restart index."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")

    def run(restart: int) -> KMeansFit:
        rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, restart])
        centers = _kmeans_pp_init(X, k, rng)
        return _lloyd(X, centers, k)

    fits = ordered_map(run, list(range(restarts)))
    best = min(range(restarts), key=lambda r: (fits[r].inertia, r))
    return fits[best]


@dataclass(frozen=True)
class ClusterResult:
    assignments: dict[str, int]
    centroids: np.ndarray
    inertia: float
    coords2d: dict[str, tuple[float, float]] | None = None
    trace: tuple[float, ...] = ()


def cluster_characters(
    matrix: EmbeddingMatrix,
    character_ids: Sequence[str],
    k: int = DEFAULT_K,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    coords2d: Mapping[str, tuple[float, float]] | None = None,
    cluster_on_coords: bool = False,
) -> ClusterResult:
    """Cluster the given characters' embeddings (or their 2-D coordinates when
    `cluster_on_coords` is set). Missing 2-D coordinates fall back to PCA."""
    ids = list(character_ids)
    X = matrix.rows(ids).astype(np.float64)
    if coords2d is not None:
        missing = [cid for cid in ids if cid not in coords2d]
        if missing:
            raise ValueError(f"no 2-D coordinates for: {missing[:5]}")
        coords = {cid: (float(coords2d[cid][0]), float(coords2d[cid][1])) for cid in ids}
    else:
        pca = pca_project(X, out_dim=2)
        coords = {cid: (float(x), float(y)) for cid, (x, y) in zip(ids, pca.coords)}
    if cluster_on_coords:
        X = np.array([coords[cid] for cid in ids], dtype=np.float64)
    fit = kmeans(X, k, seed=seed, restarts=restarts)
    assignments = {cid: int(lab) for cid, lab in zip(ids, fit.labels)}
    return ClusterResult(
        assignments=assignments,
        centroids=fit.centroids,
        inertia=fit.inertia,
        coords2d=coords,
        trace=fit.trace,
    )


def canonicalize_by_year(result: ClusterResult, years: Mapping[str, int]) -> ClusterResult:
    """Relabel clusters 0..k-1 by ascending mean publication year of members."""
    k = result.centroids.shape[0]
    members: dict[int, list[str]] = {c: [] for c in range(k)}
    for cid, c in result.assignments.items():
        members[c].append(cid)
    def mean_year(c: int) -> float:
        ids = members[c]
        if not ids:
            return float("inf")
        return sum(years[cid] for cid in ids) / len(ids)
    order = sorted(range(k), key=lambda c: (mean_year(c), c))
    relabel = {old: new for new, old in enumerate(order)}
    return ClusterResult(
        assignments={cid: relabel[c] for cid, c in result.assignments.items()},
        centroids=result.centroids[order],
        inertia=result.inertia,
        coords2d=result.coords2d,
        trace=result.trace,
    )


def cluster_vocabulary(
    dataset: Dataset,
    result: ClusterResult,
    k_top: int = 14,
    categories: Sequence[str] = DEFAULT_CATEGORIES,
) -> dict[int, list[AttributeScore]]:
    """One-vs-rest distinctive vocabulary per cluster: strictly positive
    z-score rows only, top `k_top` per category."""
    k = result.centroids.shape[0]
    clustered = set(result.assignments)
    for c in range(k):
        if not any(lab == c for lab in result.assignments.values()):
            raise ValueError(f"cluster {c} is empty")
    chars = [rec for rec in dataset.characters if rec.character_id in clustered]
    out: dict[int, list[AttributeScore]] = {}
    for c in range(k):
        partition = {cid: 1 if lab == c else 2 for cid, lab in result.assignments.items()}
        table = group_distinctiveness(
            chars, partition, categories=categories,
            group_labels=(f"cluster{c}", "rest"),
        )
        rows: list[AttributeScore] = []
        for cat in categories:
            rows.extend(top_attributes(table.category_rows(cat), k_top, Sign.POSITIVE))
        out[c] = rows
    return out


def read_coords_csv(path: str | Path) -> dict[str, tuple[float, float]]:
    """Externally computed 2-D coordinates: CSV `character_id,x,y`."""
    out: dict[str, tuple[float, float]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["character_id", "x", "y"]
        if header is None or [h.strip() for h in header] != expected:
            missing = expected if header is None else [c for c in expected if c not in header]
            raise ValueError(f"coords file missing column {missing[0]!r}")
        for row in reader:
            if not row:
                continue
            out[row[0]] = (float(row[1]), float(row[2]))
    return out


def write_assignments_csv(
    result: ClusterResult, years: Mapping[str, int], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["character_id", "cluster", "year", "x", "y"])
        for cid in sorted(result.assignments):
            x, y = result.coords2d[cid] if result.coords2d else (0.0, 0.0)
            writer.writerow([cid, result.assignments[cid], years[cid], f"{x:.12g}", f"{y:.12g}"])


def write_cluster_vocabulary_csv(
    vocab: Mapping[int, Sequence[AttributeScore]], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster", "category", "lemma", "raw_z", "normalized_z"])
        for c in sorted(vocab):
            for r in vocab[c]:
                writer.writerow([c, r.category, r.lemma, f"{r.raw_z:.12g}", f"{r.normalized_z:.12g}"])
