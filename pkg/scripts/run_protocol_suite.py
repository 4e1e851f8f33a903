#!/usr/bin/env python3
"""Run the full validation-protocol grid on a synthetic corpus and print a
metrics table: both feature spaces x both classifiers under stratified 5-fold,
then the group-held-out schemes for the embedding+SVM configuration.

Numbers here characterize the pipeline on planted data; real-corpus scores
depend on the (non-redistributable) annotations and encoder configuration.
"""

import argparse
import time

from archlens.data import Label
from archlens.evaluate import (
    Grouping,
    LogoScheme,
    StratifiedKFoldScheme,
    cross_validate,
    make_splits,
)
from archlens.features import BowFeaturizer, EmbeddingFeaturizer
from archlens.models import ModelKind, TrainConfig
from archlens.synthetic import PlantedConfig, planted_corpus


def run(dataset, featurizer, kind, scheme, seed):
    plan = make_splits(dataset, scheme, seed=seed)
    report, _ = cross_validate(dataset, featurizer, TrainConfig(seed=seed), kind, plan)
    det = report.per_class[Label.DETECTIVE]
    non = report.per_class[Label.NON_DETECTIVE]
    return report.balanced_accuracy, non, det, len(report.per_fold)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--characters", type=int, default=600)
    ap.add_argument("--detectives", type=int, default=180)
    args = ap.parse_args()

    ds = planted_corpus(
        PlantedConfig(n_characters=args.characters, n_detectives=args.detectives, seed=args.seed)
    )
    bow = BowFeaturizer(size=1000)
    emb = EmbeddingFeaturizer(ds.embeddings)

    rows = [
        ("BoW + LogReg", bow, ModelKind.LOGREG, StratifiedKFoldScheme(5)),
        ("BoW + SVM", bow, ModelKind.LINEAR_SVM, StratifiedKFoldScheme(5)),
        ("Emb + LogReg", emb, ModelKind.LOGREG, StratifiedKFoldScheme(5)),
        ("Emb + SVM", emb, ModelKind.LINEAR_SVM, StratifiedKFoldScheme(5)),
        ("LOGO (character)", emb, ModelKind.LINEAR_SVM, LogoScheme(Grouping.CHARACTER)),
        ("LOGO (author)", emb, ModelKind.LINEAR_SVM, LogoScheme(Grouping.AUTHOR)),
        ("LOGO (10 years)", emb, ModelKind.LINEAR_SVM, LogoScheme(Grouping.TIME_BIN, 10)),
        ("LOGO (20 years)", emb, ModelKind.LINEAR_SVM, LogoScheme(Grouping.TIME_BIN, 20)),
        ("LOGO (50 years)", emb, ModelKind.LINEAR_SVM, LogoScheme(Grouping.TIME_BIN, 50)),
    ]

    header = f"{'configuration':<18} {'B.Acc':>6} {'folds':>5}  {'NonDet P/R/F1':>20}  {'Det P/R/F1':>20}"
    print(header)
    print("-" * len(header))
    for name, featurizer, kind, scheme in rows:
        start = time.perf_counter()
        bacc, non, det, folds = run(ds, featurizer, kind, scheme, args.seed)
        elapsed = time.perf_counter() - start
        print(
            f"{name:<18} {bacc:>6.3f} {folds:>5}  "
            f"{non.precision:>6.3f}{non.recall:>7.3f}{non.f1:>7.3f}  "
            f"{det.precision:>6.3f}{det.recall:>7.3f}{det.f1:>7.3f}   ({elapsed:.1f}s)"
        )


if __name__ == "__main__":
    main()
