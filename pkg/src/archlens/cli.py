"""Command-line pipeline: validate, eval, detect, zscore, cluster, trend.

Exit codes: 0 success, 1 validation findings, 2 I/O or format failure,
64 usage error. All randomness flows from --seed, and rerunning any command
with identical inputs and seed produces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import cluster as cl
from . import diachronic as dia
from . import distinctive as dz
from . import evaluate as ev
from . import svg
from .data import (
    Dataset,
    EmbeddingMatrix,
    FormatError,
    Label,
    ParseError,
    read_characters,
    read_embeddings,
    read_labels,
    validate_dataset,
    with_labels,
)
from .features import (
    DEFAULT_CATEGORIES,
    DEFAULT_VOCAB_SIZE,
    BowFeaturizer,
    EmbeddingFeaturizer,
    FeatureKind,
    write_vocabulary,
)
from .models import (
    LinearModel,
    ModelKind,
    TrainConfig,
    Weighting,
    decision_scores,
    save_model,
    train,
)

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_IO = 2
EXIT_USAGE = 64

log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_scheme(text: str) -> ev.Scheme:
    parts = text.split(":")
    if parts[0] == "stratified" and len(parts) == 2 and parts[1].isdigit():
        return ev.StratifiedKFoldScheme(k=int(parts[1]))
    if parts[0] == "logo":
        if len(parts) == 2 and parts[1] in ("character", "author"):
            return ev.LogoScheme(grouping=ev.Grouping(parts[1]))
        if len(parts) == 3 and parts[1] == "timebin" and parts[2].isdigit():
            return ev.LogoScheme(grouping=ev.Grouping.TIME_BIN, width_years=int(parts[2]))
    raise UsageError(
        f"invalid scheme {text!r}; expected stratified:K, logo:character, "
        f"logo:author or logo:timebin:W"
    )


def _categories(include_patient: bool) -> tuple[str, ...]:
    if include_patient:
        return DEFAULT_CATEGORIES + ("patient_verbs",)
    return DEFAULT_CATEGORIES


def _check_inputs(*paths: Path | None) -> None:
    for p in paths:
        if p is not None and not p.is_file():
            raise FileNotFoundError(f"input file not found: {p}")


def _load_dataset(characters: Path, embeddings: Path | None, labels: Path | None) -> Dataset:
    dataset = read_characters(characters)
    if labels is not None:
        dataset = with_labels(dataset, read_labels(labels))
    if embeddings is not None:
        dataset = Dataset(characters=dataset.characters, embeddings=read_embeddings(embeddings))
    return dataset


def read_predictions_csv(path: Path) -> dict[str, Label]:
    """Predicted labels from a predictions CSV produced by eval or detect."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "character_id" not in fields:
            raise ValueError("predictions file schema mismatch: missing column 'character_id'")
        label_col = "label" if "label" in fields else "predicted" if "predicted" in fields else None
        if label_col is None:
            raise ValueError("predictions file schema mismatch: missing column 'label'")
        out: dict[str, Label] = {}
        for row in reader:
            out[row["character_id"]] = Label(row[label_col])
    return out


def _train_config(args, feature_kind: FeatureKind) -> TrainConfig:
    standardize = {"auto": None, "on": True, "off": False}[args.standardize]
    if standardize is None:
        standardize = feature_kind is FeatureKind.EMBEDDING
    return TrainConfig(
        l2_lambda=args.l2,
        max_epochs=args.max_epochs,
        tolerance=args.tolerance,
        seed=args.seed,
        class_weighting=Weighting.NONE if args.no_class_weights else Weighting.INVERSE_FREQUENCY,
        standardize=standardize,
    )


def _featurizer(args, dataset: Dataset):
    if args.features == "bow":
        return BowFeaturizer(size=args.vocab_size, categories=_categories(args.include_patient))
    if dataset.embeddings is None:
        raise UsageError("--features emb requires --embeddings")
    return EmbeddingFeaturizer(dataset.embeddings)


def cmd_validate(args) -> int:
    _check_inputs(args.characters, args.embeddings, args.labels)
    dataset = _load_dataset(args.characters, args.embeddings, args.labels)
    findings = validate_dataset(dataset, year_range=(args.min_year, args.max_year))
    for finding in findings:
        print(finding)
    return EXIT_FINDINGS if findings else EXIT_OK


def cmd_eval(args) -> int:
    scheme = parse_scheme(args.scheme)
    _check_inputs(args.characters, args.embeddings, args.labels)
    dataset = _load_dataset(args.characters, args.embeddings, args.labels)
    if not dataset.labeled():
        raise ValueError("no labeled characters in input")
    featurizer = _featurizer(args, dataset)
    config = _train_config(args, featurizer.kind)
    kind = ModelKind(args.model)
    plan = ev.make_splits(dataset, scheme, seed=args.seed)
    report, predictions = ev.cross_validate(dataset, featurizer, config, kind, plan)
    series = ev.error_over_time(predictions, bin_width_years=args.error_bin_width)

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    extra = {"features": args.features, "model": args.model, "seed": args.seed}
    ev.write_report(report, scheme, out / "report.txt", extra=extra)
    ev.write_fold_csv(report, out / "folds.csv")
    ev.write_predictions_csv(predictions, out / "predictions.csv")
    dia.write_series(series, out / "error_over_time.csv")
    print(f"balanced_accuracy = {report.balanced_accuracy:.4f} over {len(report.per_fold)} folds")
    return EXIT_OK


def _fit_full(dataset: Dataset, featurizer, config: TrainConfig, kind: ModelKind) -> tuple[LinearModel, object]:
    labeled = list(dataset.labeled())
    fitted = featurizer.fit(labeled)
    X = fitted.transform(labeled)
    y = [1 if c.label is Label.DETECTIVE else 0 for c in labeled]
    import numpy as np

    model = train(X, np.array(y), config, kind)
    return model, fitted


def cmd_detect(args) -> int:
    _check_inputs(
        args.train_characters, args.train_embeddings, args.labels,
        args.corpus_characters, args.corpus_embeddings,
    )
    train_set = _load_dataset(args.train_characters, args.train_embeddings, args.labels)
    corpus = _load_dataset(args.corpus_characters, args.corpus_embeddings, None)
    if not corpus.characters:
        raise ValueError("empty corpus")
    if not train_set.labeled():
        raise ValueError("no labeled training characters")

    if args.features == "emb":
        if train_set.embeddings is None or corpus.embeddings is None:
            raise UsageError("--features emb requires --train-embeddings and --corpus-embeddings")
        if train_set.embeddings.dim != corpus.embeddings.dim:
            raise FormatError(
                f"embedding dims differ: train {train_set.embeddings.dim}, "
                f"corpus {corpus.embeddings.dim}"
            )
        merged = EmbeddingMatrix(
            dim=train_set.embeddings.dim,
            entries={**corpus.embeddings.entries, **train_set.embeddings.entries},
        )
        featurizer = EmbeddingFeaturizer(merged)
    else:
        featurizer = BowFeaturizer(size=args.vocab_size, categories=_categories(args.include_patient))

    config = _train_config(args, featurizer.kind)
    model, fitted = _fit_full(train_set, featurizer, config, ModelKind(args.model))
    if args.save_model is not None:
        save_model(model, args.save_model)
    if args.export_vocab is not None:
        if args.features != "bow":
            raise UsageError("--export-vocab requires --features bow")
        write_vocabulary(fitted.vocab, args.export_vocab)

    retained = dia.select_top_characters(corpus, args.top_k)
    chars = retained.characters
    scores = decision_scores(model, fitted.transform(chars))
    predicted = {
        rec.character_id: (Label.DETECTIVE if s > 0 else Label.NON_DETECTIVE)
        for rec, s in zip(chars, scores)
    }

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "predictions.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["character_id", "novel_id", "year", "score", "label"])
        for rec, s in zip(chars, scores):
            writer.writerow(
                [rec.character_id, rec.novel_id, rec.year, f"{s:.12g}", predicted[rec.character_id].value]
            )
    ratio = dia.ratio_series(chars, predicted, bin_width_years=args.bin_width)
    dia.write_series(ratio, out / "ratio_series.csv")
    detective_ids = [cid for cid, lab in predicted.items() if lab is Label.DETECTIVE]
    centrality = dia.centrality_series(chars, detective_ids, bin_width_years=args.bin_width)
    dia.write_series(centrality, out / "centrality_series.csv")
    n_det = len(detective_ids)
    print(f"classified {n_det} of {len(chars)} retained characters as detectives")
    return EXIT_OK


def _label_partition(dataset: Dataset, predictions: Path | None) -> dict[str, int]:
    if predictions is not None:
        labels = read_predictions_csv(predictions)
    else:
        labels = {c.character_id: c.label for c in dataset.labeled()}
    return {
        cid: 1 if lab is Label.DETECTIVE else 2
        for cid, lab in labels.items()
        if lab is not None
    }


def cmd_zscore(args) -> int:
    _check_inputs(args.characters, args.labels, args.predictions)
    dataset = _load_dataset(args.characters, None, args.labels)
    partition = _label_partition(dataset, args.predictions)
    table = dz.group_distinctiveness(
        dataset,
        partition,
        categories=_categories(args.include_patient),
        group_labels=(Label.DETECTIVE.value, Label.NON_DETECTIVE.value),
    )
    dz.write_distinctiveness(table, args.out)
    if args.svg is not None:
        rows = dz.top_attributes(table, args.top, dz.Sign.BOTH)
        bars = [(f"{r.category}:{r.lemma}", r.normalized_z) for r in rows]
        svg.bar_chart(bars, args.svg, title="attribute distinctiveness", x_label="normalized z")
    print(f"wrote {len(table.rows)} attribute scores")
    return EXIT_OK


def cmd_cluster(args) -> int:
    _check_inputs(args.characters, args.embeddings, args.labels, args.predictions, args.coords)
    dataset = _load_dataset(args.characters, args.embeddings, args.labels)
    partition = _label_partition(dataset, args.predictions)
    detective_ids = sorted(
        cid for cid, grp in partition.items() if grp == 1 and cid in dataset.by_id
    )
    if len(detective_ids) < args.k:
        raise ValueError(f"need at least k={args.k} detective characters, have {len(detective_ids)}")
    coords = cl.read_coords_csv(args.coords) if args.coords is not None else None
    result = cl.cluster_characters(
        dataset.embeddings,
        detective_ids,
        k=args.k,
        seed=args.seed,
        restarts=args.restarts,
        coords2d=coords,
        cluster_on_coords=args.use_coords,
    )
    years = {cid: dataset.by_id[cid].year for cid in detective_ids}
    result = cl.canonicalize_by_year(result, years)
    vocab = cl.cluster_vocabulary(
        dataset, result, k_top=args.top, categories=_categories(args.include_patient)
    )

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    cl.write_assignments_csv(result, years, out / "assignments.csv")
    cl.write_cluster_vocabulary_csv(vocab, out / "cluster_vocabulary.csv")
    if args.svg is not None:
        points = [
            (result.coords2d[cid][0], result.coords2d[cid][1], result.assignments[cid])
            for cid in sorted(result.assignments)
        ]
        svg.scatter_chart(points, args.svg, title="detective clusters", x_label="dim 1", y_label="dim 2")
    print(f"clustered {len(detective_ids)} detectives into {args.k} clusters (inertia {result.inertia:.4g})")
    return EXIT_OK


def cmd_trend(args) -> int:
    _check_inputs(args.series)
    series = dia.read_series(args.series)
    xs = {p.bin_start for p in series.points}
    if len(xs) >= 3:
        series = dia.fit_series(series)
    else:
        log.warning("fewer than 3 distinct bins; skipping quadratic fit")
    dia.write_series(series, args.out)
    if args.svg is not None:
        svg.line_chart(
            [(p.bin_start, p.value) for p in series.points],
            args.svg,
            title="trend",
            x_label="year",
            y_label="value",
            fit=series.fit,
        )
    if series.fit is not None:
        a, b, c = series.fit
        print(f"fit a={a:.6g} b={b:.6g} c={c:.6g}")
    return EXIT_OK


def _add_model_flags(p: _Parser) -> None:
    p.add_argument("--features", choices=["bow", "emb"], default="emb")
    p.add_argument("--model", choices=["logreg", "svm"], default="svm")
    p.add_argument("--vocab-size", type=int, default=DEFAULT_VOCAB_SIZE)
    p.add_argument("--include-patient", action="store_true", help="re-include patient verbs")
    p.add_argument("--l2", type=float, default=1e-2)
    p.add_argument("--max-epochs", type=int, default=500)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--no-class-weights", action="store_true")
    p.add_argument("--standardize", choices=["auto", "on", "off"], default="auto")


def build_parser() -> _Parser:
    parser = _Parser(prog="archlens", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[], help="validate interchange files")
    p.add_argument("--characters", type=Path, required=True)
    p.add_argument("--embeddings", type=Path)
    p.add_argument("--labels", type=Path)
    p.add_argument("--min-year", type=int, default=1700)
    p.add_argument("--max-year", type=int, default=2100)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("eval", help="cross-validated classifier evaluation")
    p.add_argument("--characters", type=Path, required=True)
    p.add_argument("--embeddings", type=Path)
    p.add_argument("--labels", type=Path)
    p.add_argument("--scheme", default="stratified:5")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--error-bin-width", type=int, default=ev.DEFAULT_ERROR_BIN_WIDTH)
    p.add_argument("--out-dir", type=Path, required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("detect", help="train on labels, classify a corpus")
    p.add_argument("--train-characters", type=Path, required=True)
    p.add_argument("--train-embeddings", type=Path)
    p.add_argument("--labels", type=Path)
    p.add_argument("--corpus-characters", type=Path, required=True)
    p.add_argument("--corpus-embeddings", type=Path)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--bin-width", type=int, default=dia.DEFAULT_SERIES_BIN_WIDTH)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--save-model", type=Path)
    p.add_argument("--export-vocab", type=Path, help="write the fitted vocabulary CSV (bow only)")
    p.add_argument("--out-dir", type=Path, required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("zscore", help="attribute distinctiveness between groups")
    p.add_argument("--characters", type=Path, required=True)
    p.add_argument("--labels", type=Path)
    p.add_argument("--predictions", type=Path, help="use predicted labels from this CSV")
    p.add_argument("--include-patient", action="store_true")
    p.add_argument("--top", type=int, default=14, help="rows per sign in the SVG chart")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--svg", type=Path)
    p.set_defaults(func=cmd_zscore)

    p = sub.add_parser("cluster", help="k-means over detective embeddings")
    p.add_argument("--characters", type=Path, required=True)
    p.add_argument("--embeddings", type=Path, required=True)
    p.add_argument("--labels", type=Path)
    p.add_argument("--predictions", type=Path)
    p.add_argument("--coords", type=Path, help="externally computed 2-D coordinates CSV")
    p.add_argument("--use-coords", action="store_true", help="cluster on 2-D coordinates instead of full embeddings")
    p.add_argument("--k", type=int, default=cl.DEFAULT_K)
    p.add_argument("--restarts", type=int, default=cl.DEFAULT_RESTARTS)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--top", type=int, default=14)
    p.add_argument("--include-patient", action="store_true")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--svg", type=Path)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("trend", help="quadratic trend fit over a series CSV")
    p.add_argument("--series", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--svg", type=Path)
    p.set_defaults(func=cmd_trend)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 64 via _Parser.error, 0 for --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"archlens: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, FormatError, OSError, ValueError) as exc:
        print(f"archlens: error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(main())


if __name__ == "__main__":
    entry()
