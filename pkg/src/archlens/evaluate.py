"""Leakage-safe validation protocols and the classification metric suite.

Splits index into the dataset's labeled characters in corpus order. Stratified
k-fold keeps the detective/non-detective ratio per fold within one example of
ideal; LOGO holds out one full group per fold so no character figure, author,
or time bin ever spans train and test. Headline metrics come from the pooled
confusion matrix over folds; per-fold metrics are retained separately.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import CharacterRecord, Dataset, Label
from .diachronic import TrendPoint, TrendSeries, bin_start
from .features import FeatureKind
from .models import ModelKind, TrainConfig, decision_scores, train
from .runtime import ordered_map

DEFAULT_ERROR_BIN_WIDTH = 10


class Grouping(Enum):
    CHARACTER = "character"
    AUTHOR = "author"
    TIME_BIN = "timebin"


@dataclass(frozen=True)
class StratifiedKFoldScheme:
    k: int = 5

    def describe(self) -> str:
        return f"stratified:{self.k}"


@dataclass(frozen=True)
class LogoScheme:
    grouping: Grouping
    width_years: int | None = None

    def __post_init__(self):
        if self.grouping is Grouping.TIME_BIN and (self.width_years is None or self.width_years < 1):
            raise ValueError("time-bin LOGO needs a positive width_years")

    def describe(self) -> str:
        if self.grouping is Grouping.TIME_BIN:
            return f"logo:timebin:{self.width_years}"
        return f"logo:{self.grouping.value}"


Scheme = StratifiedKFoldScheme | LogoScheme


@dataclass(frozen=True)
class Fold:
    name: str
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]


@dataclass(frozen=True)
class SplitPlan:
    folds: tuple[Fold, ...]
    scheme: Scheme


def group_key(record: CharacterRecord, grouping: Grouping, width_years: int | None = None) -> str:
    if grouping is Grouping.CHARACTER:
        return record.figure_id
    if grouping is Grouping.AUTHOR:
        return record.author
    return str(bin_start(record.year, width_years))


def _check_train_classes(folds: Sequence[Fold], labels: Sequence[Label]) -> None:
    for fold in folds:
        train_labels = {labels[i] for i in fold.train_indices}
        if len(train_labels) < 2:
            raise ValueError(
                f"fold {fold.name!r}: training set is missing a class "
                f"(only {next(iter(train_labels)).value!r} present)"
            )


def make_splits(dataset: Dataset, scheme: Scheme, seed: int = 0) -> SplitPlan:
    """Build a split plan over the labeled characters, deterministic given seed."""
    labeled = dataset.labeled()
    labels = [c.label for c in labeled]
    n = len(labeled)

    if isinstance(scheme, StratifiedKFoldScheme):
        k = scheme.k
        if k < 2:
            raise ValueError("k must be >= 2")
        if n < k:
            raise ValueError(f"need at least k={k} labeled examples, have {n}")
        rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
        test_sets: list[list[int]] = [[] for _ in range(k)]
        for label in (Label.DETECTIVE, Label.NON_DETECTIVE):
            idx = [i for i, c in enumerate(labeled) if c.label is label]
            rng.shuffle(idx)
            base, extra = divmod(len(idx), k)
            pos = 0
            for f in range(k):
                size = base + (1 if f < extra else 0)
                test_sets[f].extend(idx[pos : pos + size])
                pos += size
        folds = []
        for f in range(k):
            test = tuple(sorted(test_sets[f]))
            test_set = set(test)
            trainv = tuple(i for i in range(n) if i not in test_set)
            folds.append(Fold(name=str(f), train_indices=trainv, test_indices=test))
        _check_train_classes(folds, labels)
        return SplitPlan(folds=tuple(folds), scheme=scheme)

    # LOGO: one fold per group, ordered by group key for determinism.
    groups: dict[str, list[int]] = defaultdict(list)
    for i, rec in enumerate(labeled):
        groups[group_key(rec, scheme.grouping, scheme.width_years)].append(i)
    if len(groups) < 2:
        raise ValueError(f"LOGO needs at least 2 groups, found {len(groups)}")
    folds = []
    for key in sorted(groups):
        test = tuple(sorted(groups[key]))
        test_set = set(test)
        trainv = tuple(i for i in range(n) if i not in test_set)
        folds.append(Fold(name=key, train_indices=trainv, test_indices=test))
    _check_train_classes(folds, labels)
    return SplitPlan(folds=tuple(folds), scheme=scheme)


@dataclass(frozen=True)
class Confusion:
    """2x2 counts with Detective as the positive class."""

    tp: int = 0
    fn: int = 0
    fp: int = 0
    tn: int = 0

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(
            tp=self.tp + other.tp,
            fn=self.fn + other.fn,
            fp=self.fp + other.fp,
            tn=self.tn + other.tn,
        )


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class FoldReport:
    name: str
    confusion: Confusion
    balanced_accuracy: float
    per_class: dict[Label, ClassMetrics]


@dataclass(frozen=True)
class EvalReport:
    balanced_accuracy: float
    per_class: dict[Label, ClassMetrics]
    confusion: Confusion
    per_fold: tuple[FoldReport, ...]


@dataclass(frozen=True)
class OofPrediction:
    """Out-of-fold prediction for one labeled character."""

    character_id: str
    year: int
    gold: Label
    predicted: Label
    score: float
    fold: str


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def metrics_from_confusion(conf: Confusion) -> tuple[float, dict[Label, ClassMetrics]]:
    det_p = _safe_div(conf.tp, conf.tp + conf.fp)
    det_r = _safe_div(conf.tp, conf.tp + conf.fn)
    non_p = _safe_div(conf.tn, conf.tn + conf.fn)
    non_r = _safe_div(conf.tn, conf.tn + conf.fp)
    per_class = {
        Label.DETECTIVE: ClassMetrics(det_p, det_r, _safe_div(2 * det_p * det_r, det_p + det_r)),
        Label.NON_DETECTIVE: ClassMetrics(non_p, non_r, _safe_div(2 * non_p * non_r, non_p + non_r)),
    }
    balanced = (det_r + non_r) / 2.0
    return balanced, per_class


def _resolve_config(config: TrainConfig, feature_kind: FeatureKind) -> TrainConfig:
    if config.standardize is not None:
        return config
    return replace(config, standardize=feature_kind is FeatureKind.EMBEDDING)


def cross_validate(
    dataset: Dataset,
    featurizer,
    config: TrainConfig,
    kind: ModelKind,
    plan: SplitPlan,
) -> tuple[EvalReport, list[OofPrediction]]:
    """Fit per fold on training characters only (vocabulary and scaler included),
    predict the held-out fold, pool confusions for the headline metrics."""
    labeled = dataset.labeled()
    config = _resolve_config(config, featurizer.kind)

    def run_fold(fold: Fold) -> tuple[Confusion, list[OofPrediction]]:
        train_chars = [labeled[i] for i in fold.train_indices]
        test_chars = [labeled[i] for i in fold.test_indices]
        fitted = featurizer.fit(train_chars)
        X_train = fitted.transform(train_chars)
        X_test = fitted.transform(test_chars)
        y_train = np.array([1 if c.label is Label.DETECTIVE else 0 for c in train_chars])
        model = train(X_train, y_train, config, kind)
        scores = decision_scores(model, X_test)
        preds: list[OofPrediction] = []
        tp = fn = fp = tn = 0
        for rec, score in zip(test_chars, scores):
            predicted = Label.DETECTIVE if score > 0 else Label.NON_DETECTIVE
            preds.append(
                OofPrediction(
                    character_id=rec.character_id,
                    year=rec.year,
                    gold=rec.label,
                    predicted=predicted,
                    score=float(score),
                    fold=fold.name,
                )
            )
            if rec.label is Label.DETECTIVE:
                if predicted is Label.DETECTIVE:
                    tp += 1
                else:
                    fn += 1
            else:
                if predicted is Label.DETECTIVE:
                    fp += 1
                else:
                    tn += 1
        return Confusion(tp=tp, fn=fn, fp=fp, tn=tn), preds

    results = ordered_map(run_fold, plan.folds)

    pooled = Confusion()
    fold_reports: list[FoldReport] = []
    predictions: list[OofPrediction] = []
    for fold, (conf, preds) in zip(plan.folds, results):
        pooled = pooled + conf
        balanced, per_class = metrics_from_confusion(conf)
        fold_reports.append(
            FoldReport(name=fold.name, confusion=conf, balanced_accuracy=balanced, per_class=per_class)
        )
        predictions.extend(preds)
    balanced, per_class = metrics_from_confusion(pooled)
    report = EvalReport(
        balanced_accuracy=balanced,
        per_class=per_class,
        confusion=pooled,
        per_fold=tuple(fold_reports),
    )
    return report, predictions


def error_over_time(
    predictions: Iterable[OofPrediction], bin_width_years: int = DEFAULT_ERROR_BIN_WIDTH
) -> TrendSeries:
    """Misclassification rate per time bin; bins without labeled characters omitted."""
    totals: dict[int, int] = defaultdict(int)
    errors: dict[int, int] = defaultdict(int)
    for pred in predictions:
        b = bin_start(pred.year, bin_width_years)
        totals[b] += 1
        if pred.predicted is not pred.gold:
            errors[b] += 1
    points = tuple(
        TrendPoint(bin_start=b, value=errors[b] / totals[b], support=totals[b])
        for b in sorted(totals)
    )
    return TrendSeries(points=points)


def write_report(report: EvalReport, scheme: Scheme, path: str | Path, extra: dict | None = None) -> None:
    """Key-value text report of the pooled metrics."""
    lines = [f"scheme = {scheme.describe()}", f"folds = {len(report.per_fold)}"]
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    lines.append(f"balanced_accuracy = {report.balanced_accuracy:.12g}")
    c = report.confusion
    lines.append(f"confusion.tp = {c.tp}")
    lines.append(f"confusion.fn = {c.fn}")
    lines.append(f"confusion.fp = {c.fp}")
    lines.append(f"confusion.tn = {c.tn}")
    for label in (Label.DETECTIVE, Label.NON_DETECTIVE):
        m = report.per_class[label]
        lines.append(f"{label.value}.precision = {m.precision:.12g}")
        lines.append(f"{label.value}.recall = {m.recall:.12g}")
        lines.append(f"{label.value}.f1 = {m.f1:.12g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_fold_csv(report: EvalReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "fold", "balanced_accuracy", "tp", "fn", "fp", "tn",
                "detective_precision", "detective_recall", "detective_f1",
                "non_detective_precision", "non_detective_recall", "non_detective_f1",
            ]
        )
        for fr in report.per_fold:
            det = fr.per_class[Label.DETECTIVE]
            non = fr.per_class[Label.NON_DETECTIVE]
            writer.writerow(
                [
                    fr.name, f"{fr.balanced_accuracy:.12g}",
                    fr.confusion.tp, fr.confusion.fn, fr.confusion.fp, fr.confusion.tn,
                    f"{det.precision:.12g}", f"{det.recall:.12g}", f"{det.f1:.12g}",
                    f"{non.precision:.12g}", f"{non.recall:.12g}", f"{non.f1:.12g}",
                ]
            )


def write_predictions_csv(predictions: Iterable[OofPrediction], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["character_id", "year", "gold", "predicted", "score"])
        for p in predictions:
            writer.writerow([p.character_id, p.year, p.gold.value, p.predicted.value, f"{p.score:.12g}"])
