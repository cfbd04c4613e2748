import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import dconn.spectral as spectral
from dconn.graph import ConnGraph
from dconn.metrics import clustering_accuracy
from dconn.spectral import (
    SpectralEmbedding,
    SpectralError,
    build_laplacian,
    cluster_embedding,
    davies_bouldin_1d,
    embed,
    generalize_labels,
    select_k_auto,
    spectral_cluster,
    two_means_1d,
)
from dconn.vq import BmuAssignment, Codebook


def graph_from_edges(m, edges, w=1):
    a = np.zeros((m, m), dtype=int)
    for e in edges:
        p, q = e[:2]
        a[p, q] = a[q, p] = e[2] if len(e) > 2 else w
    return ConnGraph(a)


def clique_edges(vertices):
    return list(itertools.combinations(vertices, 2))


def union_find_components(m, edges):
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p, q in edges:
        parent[find(p)] = find(q)
    touched = {v for e in edges for v in e}
    return len({find(v) for v in touched})


def explicit_lsym(a):
    d = a.sum(axis=1)
    dm = np.diag(1 / np.sqrt(d))
    return np.eye(len(a)) - dm @ a @ dm


def ncut(a, mask):
    cut = a[np.ix_(mask, ~mask)].sum()
    return cut / a[mask].sum() + cut / a[~mask].sum()


def random_graph(rng, m, p=0.3, wmax=9):
    a = np.triu(rng.integers(1, wmax + 1, size=(m, m)) * (rng.random((m, m)) < p), 1)
    return ConnGraph(a + a.T)


class TestLaplacian:
    @pytest.mark.parametrize("w", [1, 7, 1000])
    def test_single_edge(self, w):
        lap = build_laplacian(graph_from_edges(2, [(0, 1, w)]))
        np.testing.assert_allclose(lap.matrix, [[1, -1], [-1, 1]], atol=1e-15)
        np.testing.assert_allclose(np.linalg.eigvalsh(lap.matrix), [0, 2], atol=1e-12)

    def test_two_components(self):
        lap = build_laplacian(graph_from_edges(4, [(0, 1), (2, 3)]))
        vals = np.linalg.eigvalsh(lap.matrix)
        assert np.sum(np.abs(vals) < 1e-10) == 2

    def test_random_connected_matches_dense_oracle(self, rng):
        # ring backbone keeps it connected
        a = np.zeros((8, 8))
        for i in range(8):
            a[i, (i + 1) % 8] = a[(i + 1) % 8, i] = rng.integers(1, 10)
        extra = np.triu(rng.integers(0, 5, size=(8, 8)), 2)
        a = a + extra + extra.T
        np.fill_diagonal(a, 0)
        lap = build_laplacian(ConnGraph(a.astype(int)))
        want = np.linalg.eigvalsh(explicit_lsym(a))
        got = np.linalg.eigvalsh(lap.matrix)
        np.testing.assert_allclose(got, want, atol=1e-12)
        assert got.min() == pytest.approx(0, abs=1e-10)
        assert got.max() <= 2 + 1e-10

    def test_isolated_vertices_removed(self):
        lap = build_laplacian(graph_from_edges(5, [(0, 3), (3, 4)]))
        assert lap.kept.tolist() == [0, 3, 4] and lap.m == 5

    def test_all_isolated(self):
        with pytest.raises(SpectralError):
            build_laplacian(ConnGraph(np.zeros((3, 3), dtype=int)))


class TestEmbed:
    def test_two_disjoint_edges(self):
        emb = embed(build_laplacian(graph_from_edges(4, [(0, 1), (2, 3)])), 2)
        x = emb.coords
        np.testing.assert_allclose(x[0], x[1], atol=1e-12)
        np.testing.assert_allclose(x[2], x[3], atol=1e-12)
        assert np.linalg.norm(x[0] - x[2]) > 0.5

    def test_k1_single_point(self, rng):
        g = random_graph(rng, 10, p=0.6)
        lap = build_laplacian(g)
        emb = embed(lap, 1)
        np.testing.assert_allclose(emb.coords, 1.0, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(emb.coords, axis=1), 1.0)

    def test_barbell_matches_min_ncut(self):
        edges = clique_edges(range(5)) + clique_edges(range(5, 10)) + [(4, 5)]
        g = graph_from_edges(10, edges)
        a = g.weights.astype(float)
        best = min(
            (ncut(a, np.array((True,) + bits)), bits)
            for bits in itertools.product([False, True], repeat=9)
            if any(not b for b in bits)
        )
        best_mask = np.array((True,) + best[1])
        assert best_mask.tolist() == [True] * 5 + [False] * 5
        labels = cluster_embedding(embed(build_laplacian(g), 2), 2, seed=0)
        assert clustering_accuracy(labels, ~best_mask) == 100.0

    def test_sign_and_determinism(self, rng):
        lap = build_laplacian(random_graph(rng, 12, p=0.5))
        a, b = embed(lap, 3, normalize=False), embed(lap, 3, normalize=False)
        assert a.coords.tobytes() == b.coords.tobytes()
        idx = np.argmax(np.abs(a.coords), axis=0)
        assert np.all(a.coords[idx, range(3)] > 0)

    def test_zero_rows_stay_zero(self):
        x = spectral._row_normalize(np.array([[0.0, 0.0], [3.0, 4.0]]))
        assert x.tolist() == [[0, 0], [0.6, 0.8]]

    def test_k_out_of_range(self):
        lap = build_laplacian(graph_from_edges(3, [(0, 1), (1, 2)]))
        with pytest.raises(SpectralError):
            embed(lap, 4)
        with pytest.raises(SpectralError):
            embed(lap, 0)


class TestDaviesBouldin:
    def test_two_means_exact(self):
        v = np.array([0.0, 0.1, 0.2, 5.0, 5.2])
        assert two_means_1d(v).tolist() == [False, False, False, True, True]

    def test_two_means_matches_brute_force(self, rng):
        v = rng.normal(size=9)
        best = min(
            (sum(((v[m] - v[m].mean()) ** 2).sum() for m in (mask, ~mask)), tuple(mask))
            for bits in itertools.product([False, True], repeat=9)
            for mask in [np.array(bits)]
            if mask.any() and (~mask).any()
        )
        got = two_means_1d(v)
        if got[0]:
            got = ~got
        want = np.array(best[1])
        if want[0]:
            want = ~want
        assert got.tolist() == want.tolist()

    def test_indicator_scores_zero(self):
        assert davies_bouldin_1d([1, 1, 1, -2, -2]) == 0.0

    def test_hand_value(self):
        # groups {0, 2} and {10, 12}: scatters 1 and 1, centroid gap 10
        assert davies_bouldin_1d([0, 2, 10, 12]) == pytest.approx(0.2)

    def test_constant(self):
        assert davies_bouldin_1d([3, 3, 3]) == np.inf


class TestSelectAuto:
    def test_two_components(self):
        g = graph_from_edges(7, clique_edges(range(3)) + clique_edges(range(3, 7)))
        sel, scores = select_k_auto(build_laplacian(g), 5)
        assert scores[1] == pytest.approx(0, abs=1e-9)
        assert 1 in sel

    def test_fallback_on_identical_scores(self, monkeypatch):
        monkeypatch.setattr(spectral, "davies_bouldin_1d", lambda v: 0.5)
        g = graph_from_edges(6, clique_edges(range(6)))
        sel, scores = select_k_auto(build_laplacian(g), 4)
        assert sel == [0, 1]
        assert np.all(scores == 0.5)

    def test_three_components_recovered(self):
        comps = [range(0, 3), range(3, 6), range(6, 9)]
        edges = [e for c in comps for e in clique_edges(c)]
        g = graph_from_edges(9, edges)
        lap = build_laplacian(g)
        sel, scores = select_k_auto(lap, 6)
        null = [j for j in range(6) if np.linalg.eigvalsh(lap.matrix)[j] < 1e-9]
        assert len(null) == union_find_components(9, edges) == 3
        assert len(sel) >= 2 and set(sel) <= set(null)
        labels = cluster_embedding(embed(lap, columns=sel), 3, seed=1)
        assert clustering_accuracy(labels, np.repeat([0, 1, 2], 3)) == 100.0

    def test_k_max_range(self):
        lap = build_laplacian(graph_from_edges(3, [(0, 1), (1, 2)]))
        with pytest.raises(SpectralError):
            select_k_auto(lap, 1)
        with pytest.raises(SpectralError):
            select_k_auto(lap, 4)

    def test_pipeline_auto_report(self):
        g = graph_from_edges(8, clique_edges(range(4)) + clique_edges(range(4, 8)) + [(3, 4)])
        res = spectral_cluster(g, k=None, auto=True, k_max=5)
        assert res.eigen_report is not None
        assert res.k_used == len(res.eigen_report["selected"])
        assert len(res.eigen_report["db_scores"]) == 5


def best_partition_sse(x, k):
    """Exhaustive minimum k-means objective over every labelling of the rows."""
    n = len(x)
    codes = np.arange(k**n)
    labels = (codes[:, None] // k ** np.arange(n)[None, :]) % k
    total = np.zeros(len(codes))
    for c in range(k):
        member = labels == c
        cnt = member.sum(1)
        s = member @ x
        sq = member @ (x**2).sum(1)
        with np.errstate(invalid="ignore", divide="ignore"):
            total += np.where(cnt > 0, sq - (s**2).sum(1) / np.maximum(cnt, 1), 0)
    return total.min()


class TestClusterEmbedding:
    def test_distinct_points(self):
        x = np.repeat(np.eye(3), 4, axis=0)
        labels = cluster_embedding(SpectralEmbedding(x, np.zeros(3)), 3, seed=2)
        assert clustering_accuracy(labels, np.repeat([0, 1, 2], 4)) == 100.0

    def test_single_cluster(self):
        x = np.random.default_rng(0).normal(size=(6, 2))
        assert cluster_embedding(SpectralEmbedding(x, np.zeros(2)), 1).tolist() == [0] * 6

    def test_matches_exhaustive_optimum(self, rng):
        centers = np.array([[0, 0], [3, 0], [0, 3]], dtype=float)
        x = np.repeat(centers, 4, axis=0) + rng.normal(scale=0.3, size=(12, 2))
        labels = cluster_embedding(SpectralEmbedding(x, np.zeros(2)), 3, seed=5, restarts=10)
        sse = sum(((x[labels == c] - x[labels == c].mean(0)) ** 2).sum() for c in range(3))
        assert sse == pytest.approx(best_partition_sse(x, 3), rel=1e-9)

    def test_range(self):
        with pytest.raises(SpectralError):
            cluster_embedding(SpectralEmbedding(np.zeros((3, 2)), np.zeros(2)), 4)


class TestGeneralize:
    def test_single_bmu(self):
        asg = BmuAssignment([2] * 5, [0] * 5)
        assert generalize_labels([0, 1, 3], asg).tolist() == [3] * 5

    def test_identity(self):
        asg = BmuAssignment(np.arange(4), (np.arange(4) + 1) % 4)
        assert generalize_labels([1, 0, 2, 1], asg).tolist() == [1, 0, 2, 1]

    def test_lookup(self):
        asg = BmuAssignment([0, 0, 0, 1, 1, 1], [1, 1, 1, 0, 0, 0])
        assert generalize_labels([0, 1], asg).tolist() == [0, 0, 0, 1, 1, 1]

    def test_isolated_bmu_takes_nearest_active(self):
        cb = Codebook(np.array([[0, 0], [10, 0], [5, 0.0]]))
        pts = np.array([[0.1, 0], [9.9, 0], [6.0, 0], [4.0, 0]])
        asg = BmuAssignment([0, 1, 2, 2], [2, 2, 1, 0])
        labels = generalize_labels([0, 1, -1], asg, np.array([0, 1]), pts, cb)
        assert labels.tolist() == [0, 1, 1, 0]

    def test_isolated_without_geometry_uses_second(self):
        asg = BmuAssignment([2, 2], [1, 0])
        assert generalize_labels([0, 1, -1], asg).tolist() == [1, 0]


class TestPipeline:
    def test_isolated_vertices_labelled_minus_one(self):
        g = graph_from_edges(6, [(0, 1), (1, 2), (3, 4)])
        res = spectral_cluster(g, k=2)
        assert res.rep_labels[5] == -1
        assert set(res.rep_labels[:5]) == {0, 1}

    def test_point_labels_follow_bmu(self, rng):
        g = random_graph(rng, 10, p=0.5)
        asg = BmuAssignment(rng.integers(0, 10, 40), np.zeros(40, dtype=int))  # placeholder second
        asg = BmuAssignment(asg.bmu, (asg.bmu + 1) % 10)
        res = spectral_cluster(g, asg, k=3)
        active = res.rep_labels[asg.bmu] >= 0
        assert np.array_equal(res.point_labels[active], res.rep_labels[asg.bmu][active])

    def test_json(self):
        import json

        res = spectral_cluster(graph_from_edges(4, [(0, 1), (2, 3)]), k=2, seed=9)
        obj = json.loads(res.to_json())
        assert set(obj) == {"rep_labels", "point_labels", "k_used", "eigen_report", "seeds"}


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 30), p=st.floats(0.05, 0.6))
def test_spectrum_bounds_and_components(seed, m, p):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, m, p)
    edges = [(a, b) for a, b, _ in g.edges()]
    if not edges:
        return
    vals = np.linalg.eigvalsh(build_laplacian(g).matrix)
    assert vals.min() >= -1e-8 and vals.max() <= 2 + 1e-8
    assert np.sum(np.abs(vals) < 1e-8) == union_find_components(m, edges)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.integers(2, 50))
def test_weight_scaling_invariance(seed, scale):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 15, 0.4)
    if g.n_edges == 0:
        return
    a = spectral_cluster(g, k=3, seed=1)
    b = spectral_cluster(ConnGraph(g.weights * scale), k=3, seed=1)
    assert np.array_equal(a.rep_labels, b.rep_labels)


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_disjoint_cliques_recovered(data):
    k = data.draw(st.integers(1, 5))
    sizes = data.draw(st.lists(st.integers(2, 4), min_size=k, max_size=k).filter(lambda s: sum(s) <= 20))
    truth = np.repeat(np.arange(k), sizes)
    starts = np.concatenate([[0], np.cumsum(sizes)])
    edges = [e for c in range(k) for e in clique_edges(range(starts[c], starts[c + 1]))]
    g = graph_from_edges(len(truth), edges, w=data.draw(st.integers(1, 9)))
    res = spectral_cluster(g, k=k, seed=data.draw(st.integers(0, 1000)))
    assert clustering_accuracy(res.rep_labels, truth) == 100.0
