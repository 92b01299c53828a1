"""Oracle and invariant tests for the analysis toolkit.

Reference implementations: numpy.linalg.eigh for the Jacobi eigensolver,
scipy's average-linkage + cophenetic distances for the dendrogram,
sklearn's adjusted Rand index. t-SNE is checked against its own declared
invariants (planted-cluster separation, non-increasing KL, determinism).
"""
import numpy as np
import pytest
from scipy.cluster import hierarchy as sp_hierarchy
from scipy.spatial.distance import squareform
from sklearn.metrics import adjusted_rand_score

from phenorx.analysis import (
    AnalysisError,
    adjusted_rand,
    category_distances,
    conditional_affinities,
    eigendecompose,
    hierarchical_cluster,
    single_component_probe,
    spectral_embed,
    symmetrize,
    tsne,
    unnormalized_laplacian,
)


# ---------------------------------------------------------------------------
# symmetrize


def test_symmetrize_leaves_symmetric_input_unchanged():
    w = np.array([[1.0, 2.0], [2.0, 3.0]])
    assert np.array_equal(symmetrize(w), w)


def test_symmetrize_averages_opposite_counts():
    c = np.array([[0.0, 4.0], [0.0, 0.0]])
    w = symmetrize(c)
    assert w[0, 1] == w[1, 0] == 2.0


def test_symmetrize_matches_elementwise_recomputation():
    rng = np.random.default_rng(0)
    c = rng.integers(0, 50, size=(17, 17)).astype(float)
    w = symmetrize(c)
    for i in range(17):
        for j in range(17):
            assert w[i, j] == pytest.approx((c[i, j] + c[j, i]) / 2.0)
    # the diagonal is retained as-is
    assert np.array_equal(np.diag(w), np.diag(c))


def test_symmetrize_rejects_non_square():
    with pytest.raises(AnalysisError):
        symmetrize(np.zeros((3, 4)))


# ---------------------------------------------------------------------------
# Laplacian + eigendecomposition


def test_laplacian_two_node_graph():
    lap = unnormalized_laplacian(np.array([[0.0, 1.0], [1.0, 0.0]]))
    vals, vecs = eigendecompose(lap)
    assert vals == pytest.approx([0.0, 2.0], abs=1e-12)
    constant = vecs[:, 0]
    assert abs(constant[0]) == pytest.approx(abs(constant[1]), abs=1e-12)


def test_laplacian_zeroes_self_affinity():
    w = np.array([[5.0, 1.0], [1.0, 7.0]])
    bare = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(unnormalized_laplacian(w), unnormalized_laplacian(bare))


def test_laplacian_rejects_asymmetry():
    with pytest.raises(AnalysisError):
        unnormalized_laplacian(np.array([[0.0, 1.0], [0.5, 0.0]]))


def _random_affinity(rng, n):
    w = rng.random((n, n))
    w = (w + w.T) / 2.0
    np.fill_diagonal(w, 0.0)
    return w


def test_eigendecompose_matches_numpy_and_reconstructs():
    rng = np.random.default_rng(1)
    for trial in range(5):
        lap = unnormalized_laplacian(_random_affinity(rng, 50))
        vals, vecs = eigendecompose(lap)
        assert np.all(np.diff(vals) >= -1e-12), "eigenvalues must ascend"
        np.testing.assert_allclose(vals, np.linalg.eigvalsh(lap), atol=1e-8)
        residual = lap - vecs @ np.diag(vals) @ vecs.T
        assert np.abs(residual).max() < 1e-8
        gram = vecs.T @ vecs
        assert np.abs(gram - np.eye(50)).max() < 1e-8


def test_zero_eigenvalue_multiplicity_counts_components():
    rng = np.random.default_rng(2)
    blocks = [_random_affinity(rng, n) + (1.0 - np.eye(n)) for n in (4, 5, 7)]
    w = np.zeros((16, 16))
    offset = 0
    for b in blocks:
        n = b.shape[0]
        w[offset:offset + n, offset:offset + n] = b
        offset += n
    vals, _ = eigendecompose(unnormalized_laplacian(w))
    assert vals[0] >= -1e-9, "Laplacian is positive semi-definite"
    assert int(np.sum(np.array(vals) < 1e-9)) == 3


def test_constant_vector_in_null_space():
    w = _random_affinity(np.random.default_rng(3), 12)
    lap = unnormalized_laplacian(w)
    assert np.abs(lap @ np.ones(12)).max() < 1e-9


# ---------------------------------------------------------------------------
# spectral embedding + category distances


def _planted_affinity(sizes, strong=10.0, weak=0.01, seed=0):
    rng = np.random.default_rng(seed)
    n = sum(sizes)
    w = np.full((n, n), weak)
    offset = 0
    for size in sizes:
        block = strong + 0.1 * rng.random((size, size))
        w[offset:offset + size, offset:offset + size] = block
        offset += size
    w = (w + w.T) / 2.0
    np.fill_diagonal(w, 0.0)
    return w


def _block_separation(coords, sizes):
    groups = np.split(coords, np.cumsum(sizes)[:-1])
    centroids = [g.mean(axis=0) for g in groups]
    between = min(
        np.linalg.norm(centroids[i] - centroids[j])
        for i in range(len(groups)) for j in range(i + 1, len(groups))
    )
    within = max(
        np.linalg.norm(g - c, axis=1).max() for g, c in zip(groups, centroids)
    )
    return between, within


def test_spectral_embed_separates_two_planted_blocks():
    # with c blocks the c-1 smallest nonzero eigenvectors contrast blocks
    coords = spectral_embed(_planted_affinity([6, 6]), k=1)
    assert coords.shape == (12, 1)
    between, within = _block_separation(coords, [6, 6])
    assert between > 10.0 * within


def test_spectral_embed_separates_three_planted_blocks():
    coords = spectral_embed(_planted_affinity([6, 5, 7]), k=2)
    assert coords.shape == (18, 2)
    between, within = _block_separation(coords, [6, 5, 7])
    assert between > 10.0 * within


def test_spectral_embed_rejects_k_not_below_n():
    with pytest.raises(AnalysisError):
        spectral_embed(_planted_affinity([3, 3]), k=6)


def test_category_distances_symmetric_zero_diagonal():
    coords = np.random.default_rng(4).random((9, 3))
    labels, dist = category_distances(coords, ["a", "b", "c"] * 3)
    assert labels == ("a", "b", "c")
    assert np.array_equal(dist, dist.T)
    assert np.all(np.diag(dist) == 0.0)


def test_category_distances_identical_categories_coincide():
    coords = np.tile(np.random.default_rng(5).random((3, 2)), (2, 1))
    _, dist = category_distances(coords, ["u"] * 3 + ["v"] * 3)
    assert dist[0, 1] == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# hierarchical clustering


def test_three_equidistant_points_merge_smallest_pair_first():
    d = np.ones((3, 3)) - np.eye(3)
    dendro = hierarchical_cluster(d)
    first = dendro.merges[0]
    assert first.height == pytest.approx(1.0)
    assert (first.left, first.right) == (0, 1)


def test_merge_heights_non_decreasing():
    rng = np.random.default_rng(6)
    pts = rng.random((20, 4))
    d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
    dendro = hierarchical_cluster(d)
    heights = [m.height for m in dendro.merges]
    assert all(a <= b + 1e-12 for a, b in zip(heights, heights[1:]))


def test_cophenetic_distances_match_scipy_average_linkage():
    rng = np.random.default_rng(7)
    for trial in range(4):
        pts = rng.random((15, 3))
        d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
        dendro = hierarchical_cluster(d)
        ours = dendro.cophenetic()
        link = sp_hierarchy.average(squareform(d, checks=False))
        theirs = squareform(sp_hierarchy.cophenet(link), checks=False)
        np.testing.assert_allclose(ours, theirs, atol=1e-10)


def test_cut_matches_scipy_maxclust_partition():
    rng = np.random.default_rng(8)
    pts = rng.random((18, 2))
    d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
    dendro = hierarchical_cluster(d)
    link = sp_hierarchy.average(squareform(d, checks=False))
    for k in (2, 3, 5):
        ours = dendro.cut(k)
        theirs = sp_hierarchy.fcluster(link, t=k, criterion="maxclust")
        assert adjusted_rand_score(ours, theirs) == pytest.approx(1.0)


def test_root_split_separates_planted_clusters():
    rng = np.random.default_rng(9)
    pts = np.vstack([rng.random((8, 2)), rng.random((8, 2)) + 50.0])
    d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
    cut = hierarchical_cluster(d).cut(2)
    assert len(set(cut[:8])) == 1 and len(set(cut[8:])) == 1
    assert cut[0] != cut[8]


def test_dendrogram_invariant_under_input_permutation():
    rng = np.random.default_rng(10)
    pts = rng.random((12, 3))
    d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
    labels = [f"c{i}" for i in range(12)]
    base = hierarchical_cluster(d, labels=labels).cophenetic()
    perm = rng.permutation(12)
    permuted = hierarchical_cluster(d[np.ix_(perm, perm)],
                                    labels=[labels[i] for i in perm]).cophenetic()
    # cophenetic distance between the same labels must not depend on order
    inverse = np.argsort(perm)
    np.testing.assert_allclose(base, permuted[np.ix_(inverse, inverse)], atol=1e-12)


def test_newick_text_structure():
    d = np.array([[0.0, 1.0, 4.0], [1.0, 0.0, 4.0], [4.0, 4.0, 0.0]])
    dendro = hierarchical_cluster(d, labels=["a", "b", "c"])
    text = dendro.newick()
    assert text.endswith(";")
    assert text.count("(") == text.count(")") == 2
    for label in ("a", "b", "c"):
        assert label in text
    # leaves a and b merge at height 1 -> branch length 1 from each leaf
    assert "a:1" in text.replace("1.0", "1") or "a:1.0" in text


def test_single_and_complete_linkage_match_scipy():
    rng = np.random.default_rng(11)
    pts = rng.random((14, 3))
    d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
    condensed = squareform(d, checks=False)
    for method in ("single", "complete"):
        ours = hierarchical_cluster(d, linkage=method).cophenetic()
        theirs = squareform(sp_hierarchy.cophenet(
            getattr(sp_hierarchy, method)(condensed)), checks=False)
        np.testing.assert_allclose(ours, theirs, atol=1e-10)


# ---------------------------------------------------------------------------
# adjusted Rand


def test_adjusted_rand_matches_sklearn():
    rng = np.random.default_rng(12)
    for trial in range(5):
        a = rng.integers(0, 4, size=40)
        b = rng.integers(0, 3, size=40)
        assert adjusted_rand(a, b) == pytest.approx(adjusted_rand_score(a, b))
    assert adjusted_rand(a, a) == pytest.approx(1.0)


def test_adjusted_rand_rejects_length_mismatch():
    with pytest.raises(AnalysisError):
        adjusted_rand([0, 1], [0, 1, 2])


# ---------------------------------------------------------------------------
# t-SNE


def _two_clouds(n_per=20, gap=30.0, dim=5, seed=13):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, 0.5, size=(n_per, dim))
    b = rng.normal(0.0, 0.5, size=(n_per, dim)) + gap
    return np.vstack([a, b])


def test_conditional_affinities_hit_target_perplexity():
    pts = _two_clouds()
    p = conditional_affinities(pts, perplexity=12.0)
    assert p.shape == (40, 40)
    assert np.all(np.diag(p) == 0.0)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)
    entropy = -np.sum(np.where(p > 0, p * np.log2(p, where=p > 0), 0.0), axis=1)
    np.testing.assert_allclose(2.0 ** entropy, 12.0, rtol=1e-3)


def test_tsne_keeps_planted_clusters_separated():
    pts = _two_clouds()
    result = tsne(pts, out_dim=2, perplexity=10.0, iterations=300, seed=0)
    coords = result.coords
    assert coords.shape == (40, 2)
    a, b = coords[:20], coords[20:]
    between = np.linalg.norm(a.mean(axis=0) - b.mean(axis=0))
    within = max(np.linalg.norm(a - a.mean(axis=0), axis=1).max(),
                 np.linalg.norm(b - b.mean(axis=0), axis=1).max())
    assert between > within


def test_tsne_kl_non_increasing_after_exaggeration():
    result = tsne(_two_clouds(), out_dim=2, perplexity=10.0, iterations=300, seed=0)
    steps, values = zip(*result.kl_checkpoints)
    assert all(v >= 0.0 for v in values)
    settle = int(round(0.15 * 300))
    post = [v for s, v in result.kl_checkpoints if s > settle]
    assert all(a >= b - 1e-12 for a, b in zip(post, post[1:]))


def test_tsne_deterministic_under_seed():
    pts = _two_clouds(n_per=10)
    first = tsne(pts, out_dim=2, perplexity=5.0, iterations=120, seed=7)
    second = tsne(pts, out_dim=2, perplexity=5.0, iterations=120, seed=7)
    assert np.array_equal(first.coords, second.coords)


def test_tsne_duplicates_land_together():
    rng = np.random.default_rng(7)
    centers = rng.normal(0.0, 8.0, size=(6, 6))
    pts = np.concatenate(
        [c + rng.normal(0.0, 0.5, size=(10, 6)) for c in centers])
    pts[1] = pts[0]
    coords = tsne(pts, out_dim=2, perplexity=8.0, iterations=500, seed=1).coords
    diameter = np.linalg.norm(coords - coords.mean(axis=0), axis=1).max() * 2.0
    assert np.linalg.norm(coords[0] - coords[1]) < 0.01 * diameter


def test_tsne_rejects_perplexity_not_below_n():
    with pytest.raises(AnalysisError):
        tsne(np.zeros((5, 2)), out_dim=2, perplexity=5.0, iterations=50, seed=0)


def test_tsne_supports_three_output_dimensions():
    coords = tsne(_two_clouds(n_per=8), out_dim=3, perplexity=4.0,
                  iterations=100, seed=2).coords
    assert coords.shape == (16, 3)


def test_tsne_rejects_other_output_dimensions():
    with pytest.raises(AnalysisError):
        tsne(_two_clouds(n_per=8), out_dim=4, perplexity=4.0, iterations=50, seed=0)


# ---------------------------------------------------------------------------
# single-component probes


def _tiny_classifier():
    from phenorx.classifier import ClassifierConfig, build

    cfg = ClassifierConfig(head_sizes=(6, 7, 7, 2, 105, 12, 10))
    return build(cfg, seed=0)


def test_probe_matrix_shape_and_row_sums():
    model = _tiny_classifier()
    component_ids = [1, 2, 304, 305, 306]
    probe = single_component_probe(model, component_ids)
    assert probe.matrix.shape == (5, 6)
    np.testing.assert_allclose(probe.matrix.sum(axis=1), 1.0, atol=1e-6)
    assert probe.component_ids == (1, 2, 304, 305, 306)
    assert probe.dendrogram.n_leaves == 5


def test_probe_is_deterministic():
    model = _tiny_classifier()
    a = single_component_probe(model, [1, 5, 400])
    b = single_component_probe(model, [1, 5, 400])
    assert np.array_equal(a.matrix, b.matrix)
