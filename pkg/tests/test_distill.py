import itertools
import logging

import numpy as np
import pytest
from scipy.cluster.hierarchy import fcluster, linkage

from bench.selftest import toy_homogenizer, toy_rows
from data import make_blobs
from distill import (
    DistillConfig,
    DistilledSet,
    GmConfig,
    KipConfig,
    SetSpace,
    backbone_gradients,
    closest_members,
    decode_distilled,
    decode_predictions,
    distill,
    distill_gm,
    distill_kip,
    distill_kmeans,
    encode_targets,
    gradient_distance,
    gradient_distance_tensor,
    init_backbone,
    kip_predict,
    kmeans,
    lloyd,
    random_indices,
    ward_clusters,
    ward_tree,
)
from errors import ConfigError, ContractError, DimensionError
from numerics import Rng
from representation import EncoderConfig, init_autoencoder

FAST_KIP = KipConfig(epochs=5, ridge=1e-3)
FAST_GM = GmConfig(epochs=2, hidden_width=8, depth=1, inner_steps=2)


@pytest.fixture(scope='module')
def blobs():
    ds = make_blobs(rows=60, n_features=3, n_classes=3, seed=1)
    return np.stack(ds.columns, axis=1), ds.labels


def _canonical(assignment: np.ndarray) -> np.ndarray:
    _, first = np.unique(assignment, return_index=True)
    order = np.argsort(first)
    relabel = np.empty_like(order)
    relabel[order] = np.arange(order.size)
    return relabel[np.unique(assignment, return_inverse=True)[1]]


GRID = [
    ('random', 'as-is'),
    ('kmeans', 'as-is'),
    ('kmeans', 'closest-real'),
    ('agglomerative', 'as-is'),
    ('agglomerative', 'closest-real'),
    ('kip', 'as-is'),
    ('gm', 'as-is'),
]


@pytest.mark.parametrize('space', ['original', 'latent'])
@pytest.mark.parametrize('method, output', GRID)
def test_every_method_is_class_balanced(blobs, method, output, space):
    X, y = blobs
    cfg = DistillConfig(method=method, output=output, ipc=4, space=space, seed=2, restarts=2, kip=FAST_KIP, gm=FAST_GM)
    result = distill(X, y, cfg)
    np.testing.assert_array_equal(result.class_counts(), [4, 4, 4])
    np.testing.assert_array_equal(result.labels, np.repeat([0, 1, 2], 4))
    assert result.width == X.shape[1]
    assert result.space is SetSpace(space)
    assert np.all(np.isfinite(result.features))
    if result.is_real:
        np.testing.assert_array_equal(result.features, X[result.source_indices])
        np.testing.assert_array_equal(result.labels, y[result.source_indices])
        assert np.unique(result.source_indices).size == result.size
    assert result.is_real == (method == 'random' or output == 'closest-real')


def test_small_classes_are_truncated_with_a_warning(blobs, caplog):
    X, y = blobs
    with caplog.at_level(logging.WARNING):
        result = distill(X, y, DistillConfig(method='random', ipc=50))
    np.testing.assert_array_equal(result.class_counts(), [20, 20, 20])
    assert 'truncating' in caplog.text


def test_distill_config_guards():
    with pytest.raises(ConfigError):
        DistillConfig(method='kip', output='closest-real').validate()
    with pytest.raises(ConfigError):
        DistillConfig(method='random', ipc=0).validate()
    with pytest.raises(ConfigError):
        DistillConfig.from_dict({'method': 'gm', 'gm': {'depth': 0}})
    with pytest.raises(ConfigError):
        DistillConfig.from_dict({'method': 'gm', 'speed': 3})


def test_random_selection_is_seeded_and_sorted_per_class(blobs):
    _, y = blobs
    rows = random_indices(y, 5, seed=9)
    np.testing.assert_array_equal(rows, random_indices(y, 5, seed=9))
    for label in range(3):
        picked = rows[label * 5:(label + 1) * 5]
        assert np.all(np.diff(picked) > 0)
        assert np.all(y[picked] == label)
    assert not np.array_equal(rows, random_indices(y, 5, seed=10))


def test_single_instance_per_class_is_the_class_mean(blobs):
    X, y = blobs
    means = np.stack([X[y == label].mean(axis=0) for label in range(3)])
    for method in ('kmeans', 'agglomerative'):
        np.testing.assert_allclose(distill(X, y, DistillConfig(method=method, ipc=1)).features, means, atol=1e-12)


def _brute_force_sse(points: np.ndarray, k: int) -> float:
    best = np.inf
    for assignment in itertools.product(range(k), repeat=points.shape[0]):
        assignment = np.array(assignment)
        if np.unique(assignment).size < k:
            continue
        sse = sum(((points[assignment == c] - points[assignment == c].mean(axis=0)) ** 2).sum() for c in range(k))
        best = min(best, sse)
    return best


def test_kmeans_finds_the_optimal_partition():
    rng = Rng(4)
    centers = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]])
    points = np.concatenate([center + rng.child(i).normal((3, 2), 0.5) for i, center in enumerate(centers)])
    run = kmeans(points, 3, Rng(0), restarts=5)
    assert run.sse == pytest.approx(_brute_force_sse(points, 3), rel=1e-9)
    assert run.converged


def _two_groups(instance: int) -> tuple[np.ndarray, np.ndarray]:
    """Eight points in two tight groups ten units apart; group sizes vary with ``instance``."""
    rng = Rng(100 + instance)
    truth = (np.arange(8) >= 2 + instance % 5).astype(np.int64)
    points = rng.normal((8, 2), 0.5) + truth[:, None] * np.array([10.0, 0.0])
    return points, truth


@pytest.mark.parametrize('instance', range(20))
def test_two_cluster_oracles(instance):
    points, truth = _two_groups(instance)
    run = kmeans(points, 2, Rng(instance), restarts=5)
    assert run.sse == pytest.approx(_brute_force_sse(points, 2), rel=0, abs=1e-9)
    np.testing.assert_array_equal(_canonical(run.assignment), _canonical(truth))
    np.testing.assert_array_equal(_canonical(ward_clusters(ward_tree(points), 2)), _canonical(truth))


def test_lloyd_sse_never_increases():
    points = Rng(8).normal((80, 2))
    run = lloyd(points, 6, Rng(1))
    assert all(later <= earlier + 1e-9 for earlier, later in zip(run.sse_trace, run.sse_trace[1:]))
    assert np.bincount(run.assignment, minlength=6).min() > 0


def test_lloyd_refills_empty_clusters_on_duplicates():
    points = np.array([[0.0, 0.0]] * 4 + [[1.0, 1.0]])
    run = lloyd(points, 3, Rng(2), max_iter=10)
    assert run.reseeded >= 1
    assert np.unique(run.assignment).size == 3
    assert run.sse == 0.0


def test_closest_members_prefers_lowest_row_on_ties():
    points = np.array([[1.0], [-1.0], [5.0], [3.0]])
    picks = closest_members(points, np.array([[0.0], [4.0]]), np.array([0, 0, 1, 1]))
    np.testing.assert_array_equal(picks, [0, 2])


def test_kmeans_closest_real_picks_members_of_the_same_class(blobs):
    X, y = blobs
    result = distill_kmeans(X, y, 3, 'closest-real', seed=4)
    assert result.method == 'kmeans-real'
    assert set(result.traces) == {'sse.0', 'sse.1', 'sse.2'}
    np.testing.assert_array_equal(y[result.source_indices], result.labels)


def test_ward_matches_scipy():
    points = Rng(12).normal((14, 3))
    tree = ward_tree(points)
    reference = linkage(points, method='ward')
    np.testing.assert_allclose(tree.heights, reference[:, 2], rtol=1e-9)
    for k in (2, 3, 5):
        ours = _canonical(ward_clusters(tree, k))
        theirs = _canonical(fcluster(reference, k, criterion='maxclust'))
        np.testing.assert_array_equal(ours, theirs)


def test_ward_cut_is_stable_when_stopping_early():
    points = Rng(13).normal((10, 2))
    full, partial = ward_tree(points), ward_tree(points, stop_at=4)
    assert partial.merges == full.merges[:6]
    np.testing.assert_array_equal(ward_clusters(partial, 4), ward_clusters(full, 4))


def test_agglomerative_is_deterministic(blobs):
    X, y = blobs
    a = distill(X, y, DistillConfig(method='agglomerative', ipc=3, seed=0))
    b = distill(X, y, DistillConfig(method='agglomerative', ipc=3, seed=7))
    np.testing.assert_array_equal(a.features, b.features)


def test_target_encoding_and_decoding():
    np.testing.assert_array_equal(encode_targets(np.array([0, 1, 1]), 2), [[-1.0], [1.0], [1.0]])
    multi = encode_targets(np.array([0, 2]), 3)
    np.testing.assert_allclose(multi.sum(axis=1), 0.0, atol=1e-12)
    assert multi[0].argmax() == 0 and multi[1].argmax() == 2
    np.testing.assert_array_equal(decode_predictions(np.array([[0.0], [0.2], [-0.1]]), 2), [0, 1, 0])
    np.testing.assert_array_equal(decode_predictions(np.array([[0.5, 0.5, 0.1]]), 3), [0])


def test_kernel_ridge_interpolates_its_support(blobs):
    X, y = blobs
    rows = random_indices(y, 4, seed=0)
    X, y = X[rows], y[rows]
    np.testing.assert_array_equal(kip_predict(X, y, X, ridge=1e-6), y)
    binary = (y > 0).astype(np.int64)
    np.testing.assert_array_equal(kip_predict(X, binary, X, ridge=1e-6), binary)


@pytest.mark.parametrize('seed', range(5))
def test_kip_reduces_its_loss(blobs, seed):
    X, y = blobs
    result = distill_kip(X, y, 2, KipConfig(epochs=20, ridge=1e-3), seed=seed)
    trace = result.traces['loss']
    assert len(trace) == 21
    assert trace[-1] < trace[0]
    assert result.targets is None


def test_kip_learns_labels_on_request(blobs):
    X, y = blobs
    result = distill_kip(X, y, 2, KipConfig(epochs=3, ridge=1e-3, learn_labels=True, batch_size=16), seed=3)
    assert result.targets.shape == (6, 3)
    assert not np.allclose(result.targets, encode_targets(result.labels, 3))


def test_gradient_distance_edge_cases():
    a = {'w': np.array([1.0, 2.0]), 'b': np.zeros(2)}
    assert gradient_distance(a, a) == pytest.approx(0.0)
    assert gradient_distance(a, {'w': -a['w'], 'b': np.zeros(2)}) == pytest.approx(2.0)
    assert gradient_distance(a, {'w': a['w'], 'b': np.ones(2)}) == pytest.approx(1.0)
    with pytest.raises(ContractError):
        gradient_distance(a, {'w': a['w']})
    other = {'w': np.array([0.5, -1.0]), 'b': np.array([1.0, 1.0])}
    assert gradient_distance_tensor(a, other).item() == pytest.approx(gradient_distance(a, other))


def test_gm_is_seeded_and_moves_the_features(blobs):
    X, y = blobs
    first = distill_gm(X, y, 3, FAST_GM, seed=5)
    again = distill_gm(X, y, 3, FAST_GM, seed=5)
    start = X[random_indices(y, 3, 5)]
    np.testing.assert_array_equal(first.features, again.features)
    assert not np.allclose(first.features, start)
    assert len(first.traces['distance']) == FAST_GM.epochs


@pytest.mark.parametrize('seed', range(5))
def test_gm_reduces_the_matching_distance(blobs, seed):
    X, y = blobs
    cfg = GmConfig(epochs=5, hidden_width=16, depth=1, inner_steps=5)
    result = distill_gm(X, y, 3, cfg, seed=seed)
    # first backbone draw of the run, scored before and after distillation
    theta = init_backbone(X.shape[1], 3, cfg, Rng(seed).child('gm').child('theta', 1))
    onehot = np.eye(3)
    real = {name: grad.data for name, grad in backbone_gradients(theta, X, onehot[y]).items()}

    def distance(features: np.ndarray) -> float:
        synthetic = backbone_gradients(theta, features, onehot[result.labels])
        return gradient_distance(real, {name: grad.data for name, grad in synthetic.items()})

    assert distance(result.features) < distance(X[random_indices(y, 3, seed)])


def test_gm_starting_from_the_full_data_has_zero_distance(blobs):
    X, y = blobs
    cfg = GmConfig(epochs=1, hidden_width=16, depth=1, inner_steps=1)
    whole = DistilledSet(X, y, SetSpace.original, method='full', n_classes=3)
    result = distill_gm(X, y, 20, cfg, seed=2, init=whole)
    assert result.traces['distance'][0] == pytest.approx(0.0, abs=1e-12)
    assert result.labels.size == y.size


def test_decoding_latent_sets():
    h = toy_homogenizer()
    ae = init_autoencoder(EncoderConfig(latent_dim=2, embedding_dim=2, ffn_width=4, decoder_width=4), h, seed=0)
    codes = ae.encode(toy_rows(h, Rng(0), 4))
    latent = DistilledSet(codes, [0, 0, 1, 1], SetSpace.latent, method='kmeans')
    decoded = decode_distilled(ae, latent)
    assert decoded.space is SetSpace.decoded and decoded.width == h.dim
    for start, stop in h.slices:
        np.testing.assert_allclose(decoded.features[:, start:stop].sum(axis=1), 1.0)
    with pytest.raises(ContractError):
        decode_distilled(ae, DistilledSet(codes, [0, 0, 1, 1], SetSpace.original, method='kmeans'))
    with pytest.raises(DimensionError):
        decode_distilled(ae, DistilledSet(codes[:, :1], [0, 0, 1, 1], SetSpace.latent, method='kmeans'))


def test_distilled_set_survives_a_save(tmp_path, blobs):
    X, y = blobs
    result = distill_kmeans(X, y, 2, 'closest-real', seed=1)
    loaded = DistilledSet.load(result.save(tmp_path / 'set.msgpack'))
    assert loaded.features.tobytes() == result.features.tobytes()
    np.testing.assert_array_equal(loaded.source_indices, result.source_indices)
    assert loaded.traces == result.traces
    assert (loaded.method, loaded.space, loaded.n_classes) == ('kmeans-real', SetSpace.original, 3)
