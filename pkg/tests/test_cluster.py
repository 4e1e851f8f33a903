import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from archlens.cluster import (
    ClusterResult,
    canonicalize_by_year,
    cluster_characters,
    cluster_vocabulary,
    kmeans,
    pca_project,
    read_coords_csv,
)
from archlens.data import Dataset, EmbeddingMatrix
from archlens.distinctive import group_distinctiveness, top_attributes, Sign

from conftest import make_character


def power_iteration_components(X, n_components, iters=3000, seed=0):
    """Independent top-eigenvector oracle: power iteration with deflation."""
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    rng = np.random.default_rng(seed)
    comps = []
    A = cov.copy()
    for _ in range(n_components):
        v = rng.standard_normal(A.shape[0])
        v /= np.linalg.norm(v)
        for _ in range(iters):
            w = A @ v
            norm = np.linalg.norm(w)
            if norm == 0:
                break
            w /= norm
            if np.linalg.norm(w - v) < 1e-14 or np.linalg.norm(w + v) < 1e-14:
                v = w
                break
            v = w
        comps.append(v)
        lam = v @ A @ v
        A = A - lam * np.outer(v, v)
    return np.array(comps)


class TestPca:
    def test_line_in_4d_captures_all_variance(self):
        t = np.linspace(-2, 2, 30)
        direction = np.array([1.0, -2.0, 0.5, 3.0])
        X = np.outer(t, direction) + 7.0
        res = pca_project(X, out_dim=2)
        total = res.explained_variance.sum()
        assert res.explained_variance[0] / (X - X.mean(0)).var(axis=0, ddof=1).sum() == pytest.approx(1.0, abs=1e-12)
        assert res.explained_variance[1] <= 1e-20 * res.explained_variance[0] + 1e-20

    def test_isotropic_2d_variance_split_roughly_equal(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((4000, 2))
        res = pca_project(X, out_dim=2)
        ratio = res.explained_variance[0] / res.explained_variance[1]
        assert ratio == pytest.approx(1.0, abs=0.15)

    def test_reconstruction_matches_power_iteration_oracle(self):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((50, 8)) @ np.diag([5, 4, 3, 2, 1, 0.5, 0.2, 0.1])
        res = pca_project(X, out_dim=2)
        Xc = X - X.mean(axis=0)
        ours = np.linalg.norm(Xc - Xc @ res.components.T @ res.components) ** 2
        oracle_comps = power_iteration_components(X, 2)
        oracle = np.linalg.norm(Xc - Xc @ oracle_comps.T @ oracle_comps) ** 2
        assert abs(ours - oracle) <= 1e-8 * max(1.0, oracle)

    def test_zero_variance_error(self):
        with pytest.raises(ValueError, match="zero-variance"):
            pca_project(np.ones((5, 3)), out_dim=2)

    def test_sign_convention_deterministic(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((20, 4))
        r1 = pca_project(X)
        r2 = pca_project(X)
        assert np.array_equal(r1.components, r2.components)
        for comp in r1.components:
            assert comp[np.argmax(np.abs(comp))] > 0

    def test_too_few_rows_error(self):
        with pytest.raises(ValueError, match="rows"):
            pca_project(np.ones((1, 3)), out_dim=2)


def three_blobs(n_per=10, sep=6.0, dim=2, seed=0):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0] * dim, [sep] + [0.0] * (dim - 1), [0.0, sep] + [0.0] * (dim - 2)])
    X = np.vstack([c + rng.standard_normal((n_per, dim)) for c in centers])
    truth = np.repeat([0, 1, 2], n_per)
    return X, truth


def exhaustive_best_assignment(X, k):
    """Brute-force minimum-inertia assignment over all k^n labelings.

    Uses sum((x - mean)^2) = sum(x^2) - |sum(x)|^2 / n per cluster, evaluated
    for every labeling in vectorized batches.
    """
    n = X.shape[0]
    total_sq = float((X * X).sum())
    best_cost, best = np.inf, None
    all_ids = np.arange(k ** n, dtype=np.int64)
    powers = k ** np.arange(n, dtype=np.int64)
    for start in range(0, len(all_ids), 65536):
        ids = all_ids[start : start + 65536]
        labels = (ids[:, None] // powers[None, :]) % k
        cost = np.full(len(ids), total_sq)
        for c in range(k):
            mask = labels == c
            counts = mask.sum(axis=1)
            sums = mask.astype(np.float64) @ X
            nonzero = counts > 0
            cost[nonzero] -= (sums[nonzero] ** 2).sum(axis=1) / counts[nonzero]
        idx = int(cost.argmin())
        if cost[idx] < best_cost:
            best_cost = float(cost[idx])
            best = labels[idx].copy()
    return best, best_cost


class TestKmeans:
    def test_three_separated_triplets(self):
        X, truth = three_blobs(n_per=3, sep=10.0, seed=1)
        fit = kmeans(X, 3, seed=0, restarts=5)
        assert adjusted_rand_score(truth, fit.labels) == 1.0
        # inertia equals within-triplet dispersion
        expected = sum(
            ((X[truth == c] - X[truth == c].mean(axis=0)) ** 2).sum() for c in range(3)
        )
        assert fit.inertia == pytest.approx(expected, rel=1e-9)

    def test_k_equals_n_gives_zero_inertia(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((6, 3))
        fit = kmeans(X, 6, seed=0, restarts=3)
        assert fit.inertia == pytest.approx(0.0, abs=1e-18)

    def test_agrees_with_exhaustive_oracle_on_tiny_instance(self):
        X, _ = three_blobs(n_per=3, sep=8.0, seed=9)
        oracle_labels, oracle_cost = exhaustive_best_assignment(X, 3)
        fit = kmeans(X, 3, seed=4, restarts=10)
        assert adjusted_rand_score(oracle_labels, fit.labels) == 1.0
        assert fit.inertia == pytest.approx(oracle_cost, rel=1e-9)

    def test_lloyd_trace_monotone_non_increasing(self):
        rng = np.random.default_rng(15)
        X = rng.standard_normal((200, 5))
        fit = kmeans(X, 4, seed=0, restarts=1)
        trace = np.array(fit.trace)
        assert len(trace) >= 2
        assert np.all(np.diff(trace) <= 1e-9)

    def test_blob_recovery_across_seeds(self):
        # data seed chosen so the 6-sigma draw is itself separable: every
        # sampled point lies nearest its own planted center
        X, truth = three_blobs(n_per=20, sep=6.0, dim=4, seed=0)
        centers = np.array([[0, 0, 0, 0], [6, 0, 0, 0], [0, 6, 0, 0]], dtype=float)
        d = ((X[:, None, :] - centers[None]) ** 2).sum(-1)
        assert np.all(d.argmin(1) == truth)
        for seed in range(10):
            fit = kmeans(X, 3, seed=seed, restarts=10)
            assert adjusted_rand_score(truth, fit.labels) >= 0.99

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((40, 3))
        f1 = kmeans(X, 3, seed=11, restarts=4)
        f2 = kmeans(X, 3, seed=11, restarts=4)
        assert np.array_equal(f1.labels, f2.labels)
        assert np.array_equal(f1.centroids, f2.centroids)

    def test_k_out_of_range(self):
        X = np.zeros((4, 2))
        with pytest.raises(ValueError, match="k must be"):
            kmeans(X, 0)
        with pytest.raises(ValueError, match="k must be"):
            kmeans(X, 5)


class TestClusterCharacters:
    def make_dataset(self, n_per=8, seed=0):
        X, truth = three_blobs(n_per=n_per, sep=8.0, dim=6, seed=seed)
        ids = [f"c{i:02d}" for i in range(len(truth))]
        matrix = EmbeddingMatrix.build(6, dict(zip(ids, X)))
        # cluster 0 oldest, cluster 2 newest
        records = tuple(
            make_character(
                character_id=cid,
                year=1880 + int(truth[i]) * 40,
                agent_verbs=[f"verb{truth[i]}", "dire"],
            )
            for i, cid in enumerate(ids)
        )
        return Dataset(characters=records, embeddings=matrix), ids, truth

    def test_assignments_cover_all_once(self):
        ds, ids, _ = self.make_dataset()
        result = cluster_characters(ds.embeddings, ids, k=3, seed=0)
        assert sorted(result.assignments) == sorted(ids)
        assert set(result.assignments.values()) == {0, 1, 2}
        assert result.coords2d is not None and len(result.coords2d) == len(ids)

    def test_canonicalize_by_year_orders_clusters(self):
        ds, ids, truth = self.make_dataset()
        result = cluster_characters(ds.embeddings, ids, k=3, seed=0)
        years = {cid: ds.by_id[cid].year for cid in ids}
        canon = canonicalize_by_year(result, years)
        mean_years = []
        for c in range(3):
            members = [years[cid] for cid, lab in canon.assignments.items() if lab == c]
            mean_years.append(sum(members) / len(members))
        assert mean_years == sorted(mean_years)
        # canonical labels must follow the planted temporal blobs
        for i, cid in enumerate(ids):
            assert canon.assignments[cid] == truth[i]

    def test_external_coords_used(self):
        ds, ids, _ = self.make_dataset()
        coords = {cid: (float(i), -float(i)) for i, cid in enumerate(ids)}
        result = cluster_characters(ds.embeddings, ids, k=3, seed=0, coords2d=coords)
        assert result.coords2d["c00"] == (0.0, -0.0)

    def test_missing_external_coord_error(self):
        ds, ids, _ = self.make_dataset()
        with pytest.raises(ValueError, match="coordinates"):
            cluster_characters(ds.embeddings, ids, k=3, seed=0, coords2d={ids[0]: (0, 0)})

    def test_cluster_on_coords_path(self):
        ds, ids, truth = self.make_dataset(n_per=10)
        result = cluster_characters(ds.embeddings, ids, k=3, seed=0, cluster_on_coords=True)
        assert adjusted_rand_score(truth, [result.assignments[c] for c in ids]) >= 0.99


class TestClusterVocabulary:
    def test_exclusive_lemma_ranks_first(self):
        ds, ids, truth = TestClusterCharacters().make_dataset()
        result = cluster_characters(ds.embeddings, ids, k=3, seed=0)
        years = {cid: ds.by_id[cid].year for cid in ids}
        result = canonicalize_by_year(result, years)
        vocab = cluster_vocabulary(ds, result, k_top=5)
        for c in range(3):
            agent_rows = [r for r in vocab[c] if r.category == "agent_verbs"]
            assert agent_rows[0].lemma == f"verb{c}"
            assert all(r.raw_z > 0 for r in vocab[c])

    def test_identical_clusters_have_no_positive_rows(self):
        records = tuple(
            make_character(character_id=f"c{i}", agent_verbs=["dire", "voir"]) for i in range(6)
        )
        matrix = EmbeddingMatrix.build(2, {f"c{i}": np.array([i, 0.0]) for i in range(6)})
        ds = Dataset(characters=records, embeddings=matrix)
        result = ClusterResult(
            assignments={f"c{i}": i % 2 for i in range(6)},
            centroids=np.zeros((2, 2)),
            inertia=0.0,
        )
        vocab = cluster_vocabulary(ds, result, k_top=5)
        assert vocab[0] == [] and vocab[1] == []

    def test_empty_cluster_error(self):
        records = (make_character(character_id="c0", agent_verbs=["dire"]),)
        ds = Dataset(characters=records)
        result = ClusterResult(assignments={"c0": 0}, centroids=np.zeros((2, 2)), inertia=0.0)
        with pytest.raises(ValueError, match="empty"):
            cluster_vocabulary(ds, result)

    def test_matches_one_vs_rest_oracle(self):
        ds, ids, _ = TestClusterCharacters().make_dataset(seed=2)
        result = cluster_characters(ds.embeddings, ids, k=3, seed=1)
        vocab = cluster_vocabulary(ds, result, k_top=14)
        chars = [ds.by_id[cid] for cid in ids]
        for c in range(3):
            partition = {cid: 1 if lab == c else 2 for cid, lab in result.assignments.items()}
            table = group_distinctiveness(chars, partition)
            expected = []
            for cat in ("agent_verbs", "modifiers", "possessives"):
                expected.extend(top_attributes(table.category_rows(cat), 14, Sign.POSITIVE))
            assert [(r.category, r.lemma, r.raw_z) for r in vocab[c]] == [
                (r.category, r.lemma, r.raw_z) for r in expected
            ]


def test_read_coords_csv(tmp_path):
    path = tmp_path / "coords.csv"
    path.write_text("character_id,x,y\nc1,0.5,-1.5\n")
    assert read_coords_csv(path) == {"c1": (0.5, -1.5)}
    bad = tmp_path / "bad.csv"
    bad.write_text("character_id,a,b\nc1,0,0\n")
    with pytest.raises(ValueError, match="'x'"):
        read_coords_csv(bad)
