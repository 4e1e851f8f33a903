"""Acceptance gate: every release criterion at its stated tolerance.

Each test prints one `[acceptance] <criterion>: PASS|FAIL` line; run with
`pytest tests/test_acceptance.py -v -s` to see them all.
"""

import math
import time
from contextlib import contextmanager

import mpmath
import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from archlens.cli import main
from archlens.cluster import kmeans
from archlens.data import (
    Label,
    read_embeddings,
    with_labels,
    write_characters_file,
    write_embeddings,
)
from archlens.distinctive import AttributeCounts, zscore
from archlens.evaluate import (
    Grouping,
    LogoScheme,
    StratifiedKFoldScheme,
    cross_validate,
    group_key,
    make_splits,
)
from archlens.features import BowFeaturizer, EmbeddingFeaturizer, build_vocabulary
from archlens.models import ModelKind, TrainConfig, train
from archlens.diachronic import mention_ratios, quadratic_fit, ratio_series
from archlens.synthetic import PlantedConfig, novel_corpus, planted_corpus

from conftest import make_character
from test_cluster import exhaustive_best_assignment, three_blobs
from test_distinctive import zscore_highprec

mpmath.mp.dps = 50


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[acceptance] {name}: FAIL", flush=True)
        raise
    print(f"[acceptance] {name}: PASS", flush=True)


def random_counts(rng):
    c1 = int(rng.integers(0, 400))
    c2 = int(rng.integers(0, 400))
    if c1 + c2 == 0:
        c1 = 1
    return AttributeCounts(
        c1=c1, c2=c2, n1=c1 + int(rng.integers(0, 4000)), n2=c2 + int(rng.integers(0, 4000))
    )


def test_zscore_oracle_suite():
    with criterion("z-score oracle suite (1e-12, <1s)"):
        start = time.perf_counter()
        rng = np.random.default_rng(1234)
        for _ in range(1000):
            counts = random_counts(rng)
            z = zscore(counts)
            expected = zscore_highprec(counts.c1, counts.c2, counts.n1, counts.n2)
            assert abs(z - expected) <= 1e-12 * max(1.0, abs(expected))
            assert abs(zscore(counts.swapped()) + z) <= 1e-12
        # strict monotonicity on a 50-point c1 grid from the symmetric point
        prev = -math.inf
        for c1 in range(5, 55):
            z = zscore(AttributeCounts(c1, 5, 1000, 1000))
            assert z > prev
            prev = z
        assert time.perf_counter() - start < 1.0


def _labeled_fixture(n_pos, n_neg, rng):
    records = []
    for i in range(n_pos + n_neg):
        records.append(
            make_character(
                character_id=f"c{i:04d}",
                author=f"a{rng.integers(6)}",
                year=int(1850 + rng.integers(120)),
                figure_id=f"fig{rng.integers(10)}",
                label=Label.DETECTIVE if i < n_pos else Label.NON_DETECTIVE,
                agent_verbs=["dire"],
            )
        )
    from archlens.data import Dataset

    return Dataset(characters=tuple(records))


def test_split_protocol_suite():
    with criterion("split protocols: 185/419 stratification + LOGO overlap (<5s)"):
        start = time.perf_counter()
        rng = np.random.default_rng(9)
        ds = _labeled_fixture(185, 419, rng)
        plan = make_splits(ds, StratifiedKFoldScheme(k=5), seed=3)
        labeled = ds.labeled()
        for fold in plan.folds:
            positives = sum(labeled[i].label is Label.DETECTIVE for i in fold.test_indices)
            assert abs(positives - 37) <= 1
        schemes = [
            LogoScheme(Grouping.CHARACTER),
            LogoScheme(Grouping.AUTHOR),
            LogoScheme(Grouping.TIME_BIN, width_years=20),
        ]
        checked = 0
        for trial in range(100):
            fixture = _labeled_fixture(int(rng.integers(8, 25)), int(rng.integers(8, 25)), rng)
            for scheme in schemes:
                try:
                    plan = make_splits(fixture, scheme, seed=trial)
                except ValueError:
                    continue  # degenerate fixture for this scheme
                labeled = fixture.labeled()
                for fold in plan.folds:
                    test_keys = {
                        group_key(labeled[i], scheme.grouping, scheme.width_years)
                        for i in fold.test_indices
                    }
                    train_keys = {
                        group_key(labeled[i], scheme.grouping, scheme.width_years)
                        for i in fold.train_indices
                    }
                    assert not (test_keys & train_keys)
                checked += 1
        assert checked > 150  # the sweep really exercised the schemes
        assert time.perf_counter() - start < 5.0


def test_leakage_sentinel():
    with criterion("vocabulary leakage sentinel"):
        rng = np.random.default_rng(21)
        ds = _labeled_fixture(20, 30, rng)
        records = list(ds.characters)
        sentinel = "sentinelle"
        for victim in range(0, 50, 7):
            rec = records[victim]
            records[victim] = make_character(
                character_id=rec.character_id,
                author=rec.author,
                year=rec.year,
                label=rec.label,
                agent_verbs=["dire", sentinel],
            )
        from archlens.data import Dataset

        ds = Dataset(characters=tuple(records))
        plan = make_splits(ds, StratifiedKFoldScheme(k=5), seed=2)
        labeled = ds.labeled()
        carriers = {c.character_id for c in labeled if sentinel in c.attributes.agent_verbs}
        for fold in plan.folds:
            test_ids = {labeled[i].character_id for i in fold.test_indices}
            if not (carriers - test_ids):  # every carrier held out in this fold
                vocab = build_vocabulary([labeled[i] for i in fold.train_indices], size=100)
                assert all(lemma != sentinel for lemma, _ in vocab.terms)
        # direct check: vocabulary fitted on any train side never sees a lemma
        # exclusive to that fold's test side
        for fold in plan.folds:
            train_chars = [labeled[i] for i in fold.train_indices]
            test_chars = [labeled[i] for i in fold.test_indices]
            train_lemmas = {l for c in train_chars for l in c.attributes.agent_verbs}
            test_only = {
                l for c in test_chars for l in c.attributes.agent_verbs
            } - train_lemmas
            vocab = build_vocabulary(train_chars, size=100)
            assert all(lemma not in test_only for lemma, _ in vocab.terms)


def test_optimizer_checks():
    with criterion("optimizer: gradient 1e-5, separable accuracy, monotone traces"):
        from test_models import logreg_objective

        rng = np.random.default_rng(5)
        X = rng.standard_normal((50, 6))
        y = (rng.random(50) < 0.35).astype(int)
        weights = np.where(y > 0, 50 / (2.0 * y.sum()), 50 / (2.0 * (50 - y.sum())))
        lam = 1e-2
        ys = 2.0 * y - 1.0

        def sigmoid(z):
            out = np.empty_like(z)
            pos = z >= 0
            out[pos] = 1 / (1 + np.exp(-z[pos]))
            ez = np.exp(z[~pos])
            out[~pos] = ez / (1 + ez)
            return out

        for _ in range(5):
            theta = rng.standard_normal(7)
            s = X @ theta[:-1] + theta[-1]
            coef = weights * (-ys) * sigmoid(-ys * s) / weights.sum()
            analytic = np.concatenate([X.T @ coef + lam * theta[:-1], [coef.sum()]])
            h = 1e-6
            numeric = np.empty(7)
            for j in range(7):
                up, dn = theta.copy(), theta.copy()
                up[j] += h
                dn[j] -= h
                numeric[j] = (
                    logreg_objective(X, y, weights, lam, up)
                    - logreg_objective(X, y, weights, lam, dn)
                ) / (2 * h)
            rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-8)
            assert rel.max() < 1e-5

        X2 = np.vstack([rng.normal(-2, 0.4, (25, 2)), rng.normal(2, 0.4, (25, 2))])
        y2 = np.array([0] * 25 + [1] * 25)
        for kind in (ModelKind.LOGREG, ModelKind.LINEAR_SVM):
            model = train(X2, y2, TrainConfig(), kind)
            from archlens.models import decision_scores

            scores = decision_scores(model, X2)
            assert np.all((scores > 0) == (y2 == 1))
            trace = np.array(model.objective_trace)
            assert np.all(np.diff(trace) <= 0)


def _run_pipelines(dataset, scheme, seed=42):
    out = {}
    plan = make_splits(dataset, scheme, seed=seed)
    for name, featurizer, kind in (
        ("bow+logreg", BowFeaturizer(size=1000), ModelKind.LOGREG),
        ("emb+svm", EmbeddingFeaturizer(dataset.embeddings), ModelKind.LINEAR_SVM),
    ):
        report, _ = cross_validate(dataset, featurizer, TrainConfig(seed=seed), kind, plan)
        out[name] = report.balanced_accuracy
    return out


def test_planted_signal_end_to_end(planted):
    with criterion("planted-signal end-to-end (BA >= 0.95, LOGO within 0.05, <30s)"):
        start = time.perf_counter()
        stratified = _run_pipelines(planted, StratifiedKFoldScheme(k=5))
        assert stratified["bow+logreg"] >= 0.95
        assert stratified["emb+svm"] >= 0.95
        logo = _run_pipelines(planted, LogoScheme(Grouping.AUTHOR))
        for name in ("bow+logreg", "emb+svm"):
            assert abs(logo[name] - stratified[name]) <= 0.05
        assert time.perf_counter() - start < 30.0


def test_permutation_null(planted):
    with criterion("permutation null (BA 0.5 +/- 0.05 over 20 shuffles)"):
        rng = np.random.default_rng(99)
        ids = [c.character_id for c in planted.labeled()]
        gold = [c.label for c in planted.labeled()]
        scores = []
        for _ in range(20):
            permuted = dict(zip(ids, rng.permutation(gold)))
            shuffled = with_labels(planted, permuted)
            plan = make_splits(shuffled, StratifiedKFoldScheme(k=5), seed=1)
            report, _ = cross_validate(
                shuffled,
                EmbeddingFeaturizer(shuffled.embeddings),
                TrainConfig(seed=1),
                ModelKind.LINEAR_SVM,
                plan,
            )
            scores.append(report.balanced_accuracy)
        mean = float(np.mean(scores))
        assert abs(mean - 0.5) <= 0.05


def test_diachronic_identities():
    with criterion("diachronic identities (1e-12 ratios, quadratic 1e-6, nested fits)"):
        rng = np.random.default_rng(31)
        ds = novel_corpus(n_novels=150, chars_per_novel=9, seed=8)
        labels = {
            c.character_id: Label.DETECTIVE if rng.random() < 0.05 else Label.NON_DETECTIVE
            for c in ds.characters
        }
        series = ratio_series(ds.characters, labels, bin_width_years=5)
        weighted = sum(p.value * p.support for p in series.points) / sum(
            p.support for p in series.points
        )
        global_ratio = sum(v is Label.DETECTIVE for v in labels.values()) / len(labels)
        assert abs(weighted - global_ratio) <= 1e-12

        ratios = mention_ratios(ds.characters)
        by_novel = {}
        for c in ds.characters:
            by_novel.setdefault(c.novel_id, []).append(ratios[c.character_id].mention_ratio)
        for values in by_novel.values():
            assert abs(sum(values) / len(values) - 1.0) <= 1e-12

        points = [(float(x), 2.0 * x * x + 3.0 * x + 1.0) for x in (-4, -1, 0, 2, 6)]
        a, b, c = quadratic_fit(points)
        assert abs(a - 2) <= 1e-6 and abs(b - 3) <= 1e-6 and abs(c - 1) <= 1e-6

        for seed in range(10):
            r = np.random.default_rng(seed)
            n = int(r.integers(5, 25))
            xs = r.choice(np.arange(1800, 2000), size=n, replace=False).astype(float)
            ys = r.standard_normal(n) * 4
            qa, qb, qc = quadratic_fit(list(zip(xs, ys)))
            quad = float(np.sum((ys - (qa * xs * xs + qb * xs + qc)) ** 2))
            slope, intercept = np.polyfit(xs, ys, 1)
            lin = float(np.sum((ys - (slope * xs + intercept)) ** 2))
            assert quad <= lin + 1e-9 * max(1.0, lin)


def test_clustering_criteria():
    with criterion("clustering: 6-sigma blobs ARI >= 0.99 x10 seeds, monotone Lloyd, tiny oracle"):
        X, truth = three_blobs(n_per=20, sep=6.0, dim=4, seed=0)
        centers = np.array([[0, 0, 0, 0], [6, 0, 0, 0], [0, 6, 0, 0]], dtype=float)
        d = ((X[:, None, :] - centers[None]) ** 2).sum(-1)
        assert np.all(d.argmin(1) == truth)  # the draw itself is separable
        for seed in range(10):
            fit = kmeans(X, 3, seed=seed, restarts=10)
            assert adjusted_rand_score(truth, fit.labels) >= 0.99
            assert np.all(np.diff(np.array(fit.trace)) <= 1e-9)

        Xt, _ = three_blobs(n_per=4, sep=8.0, dim=2, seed=5)  # 12 points
        oracle_labels, oracle_cost = exhaustive_best_assignment(Xt, 3)
        fit = kmeans(Xt, 3, seed=1, restarts=10)
        assert adjusted_rand_score(oracle_labels, fit.labels) == 1.0
        assert fit.inertia == pytest.approx(oracle_cost, rel=1e-9)


def test_determinism_and_formats(tmp_path):
    with criterion("CLI determinism, bit-exact embeddings, exit codes"):
        ds = planted_corpus(
            PlantedConfig(n_characters=90, n_detectives=36, embedding_dim=6, n_authors=6, seed=17)
        )
        chars = tmp_path / "chars.jsonl"
        emb = tmp_path / "emb.cemb"
        write_characters_file(ds, chars)
        write_embeddings(ds.embeddings, emb)

        # embeddings round-trip bit-exactly
        assert read_embeddings(emb) == ds.embeddings

        corpus = planted_corpus(
            PlantedConfig(n_characters=60, n_detectives=24, embedding_dim=6, n_authors=5, seed=18)
        )
        co_chars = tmp_path / "corpus.jsonl"
        co_emb = tmp_path / "corpus.cemb"
        write_characters_file(corpus, co_chars)
        write_embeddings(corpus.embeddings, co_emb)

        series = tmp_path / "series.csv"
        series.write_text(
            "bin_start,value,support\n" +
            "\n".join(f"{x},{2 * x * x + 3 * x + 1},1" for x in range(5)) + "\n"
        )

        commands = {
            "validate": ["validate", "--characters", str(chars), "--embeddings", str(emb)],
            "eval": ["eval", "--characters", str(chars), "--embeddings", str(emb),
                     "--scheme", "stratified:4", "--seed", "42"],
            "detect": ["detect", "--train-characters", str(chars), "--train-embeddings", str(emb),
                       "--corpus-characters", str(co_chars), "--corpus-embeddings", str(co_emb),
                       "--seed", "42", "--top-k", "10"],
            "zscore": ["zscore", "--characters", str(chars)],
            "cluster": ["cluster", "--characters", str(chars), "--embeddings", str(emb),
                        "--seed", "42"],
            "trend": ["trend", "--series", str(series)],
        }
        for name, argv in commands.items():
            outputs = []
            for run in ("r1", "r2"):
                out_dir = tmp_path / f"{name}_{run}"
                out_dir.mkdir()
                full = list(argv)
                if name in ("eval", "detect", "cluster"):
                    full += ["--out-dir", str(out_dir)]
                elif name == "zscore":
                    full += ["--out", str(out_dir / "z.csv"), "--svg", str(out_dir / "z.svg")]
                elif name == "trend":
                    full += ["--out", str(out_dir / "t.csv"), "--svg", str(out_dir / "t.svg")]
                code = main(full)
                assert code == 0, name
                blobs = {
                    p.name: p.read_bytes() for p in sorted(out_dir.glob("*")) if p.is_file()
                }
                outputs.append(blobs)
            assert outputs[0] == outputs[1], f"{name} rerun not byte-identical"

        # corrupted/malformed inputs produce the specified exit codes
        bad_emb = tmp_path / "bad.cemb"
        bad_emb.write_bytes(b"XXXX" + b"\x00" * 12)
        assert main(["validate", "--characters", str(chars), "--embeddings", str(bad_emb)]) == 2
        truncated = tmp_path / "trunc.cemb"
        truncated.write_bytes(emb.read_bytes()[:-5])
        assert main(["validate", "--characters", str(chars), "--embeddings", str(truncated)]) == 2
        bad_chars = tmp_path / "bad.jsonl"
        bad_chars.write_text('{"character_id": "x"\n')
        assert main(["validate", "--characters", str(bad_chars)]) == 2
        assert main(["eval", "--characters", str(chars), "--scheme", "nope",
                     "--out-dir", str(tmp_path / "nope")]) == 64
