import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bench.selftest import toy_homogenizer, toy_rows
from data import encode_binary, fit_homogenizer, make_rings
from errors import ConfigError, ContractError, DimensionError
from numerics import Graph, Rng, grad_check
from representation import (
    EncoderConfig,
    TrainConfig,
    active_indices,
    decoder_logits,
    expected_parameter_count,
    fine_tune_supervised,
    forward_latent,
    group_softmax,
    init_autoencoder,
    leading_order_size,
    load_autoencoder,
    parameter_count,
    recon_loss,
    recon_loss_tensor,
    save_autoencoder,
    slot_weights,
    train_unsupervised,
)

SMALL = {
    'ffn': EncoderConfig(latent_dim=4, embedding_dim=3, ffn_width=8, decoder_width=8, head_width=8),
    'gnn': EncoderConfig.from_dict({'arch': 'gnn', 'latent_dim': 4, 'gnn_layers': 2, 'decoder_width': 8}),
    'tf': EncoderConfig.from_dict({
        'arch': 'tf', 'latent_dim': 4, 'embedding_dim': 4, 'tf_blocks': 1, 'tf_heads': 2,
        'tf_head_dim': 2, 'tf_mlp_width': 6, 'decoder_width': 8,
    }),
}


@pytest.fixture(scope='module')
def rings():
    ds = make_rings(rows=240, n_features=3, categorical=True, seed=2)
    h = fit_homogenizer(ds, np.arange(ds.n_rows), bins=4)
    return h, encode_binary(h, ds), ds.labels


@pytest.mark.parametrize('arch', sorted(SMALL))
def test_parameter_count_matches_formula(arch, rings):
    h, _, _ = rings
    ae = init_autoencoder(SMALL[arch], h, seed=0)
    assert parameter_count(ae) == expected_parameter_count(SMALL[arch], h.dim, h.n_features)
    assert 0 < leading_order_size(SMALL[arch], h.dim, h.n_features) <= parameter_count(ae)


def test_leading_order_dominates_wide_ffn():
    cfg = EncoderConfig(latent_dim=16, embedding_dim=16, ffn_width=100, decoder_width=1, decoder_depth=1)
    dim, features = 60, 6
    decoder = 16 * 1 + 1 + 1 * dim + dim
    encoder = expected_parameter_count(cfg, dim, features) - decoder
    assert leading_order_size(cfg, dim, features) / encoder > 0.95


@pytest.mark.parametrize('arch', sorted(SMALL))
def test_encode_decode_shapes_and_group_simplex(arch, rings):
    h, b, _ = rings
    ae = init_autoencoder(SMALL[arch], h, seed=1)
    z = ae.encode(b[:7])
    assert z.shape == (7, 4)
    probs = ae.decode(z)
    assert probs.shape == (7, h.dim)
    assert np.all(probs > 0.0)
    for start, stop in h.slices:
        np.testing.assert_allclose(probs[:, start:stop].sum(axis=1), 1.0, atol=1e-12)
    with pytest.raises(DimensionError):
        ae.decode(np.zeros((2, 3)))


@pytest.mark.parametrize('arch', ['gnn', 'tf'])
def test_reconstruction_gradients_for_every_encoder(arch):
    h = toy_homogenizer()
    cfg = SMALL[arch]
    ae = init_autoencoder(cfg, h, seed=3)
    b = toy_rows(h, Rng(3), 5)
    names = ('embeddings', 'decoder.output.weight')
    fixed = {name: value for name, value in ae.params.items() if name not in names}

    def build(graph: Graph):
        p = {**fixed, **graph.params}
        return recon_loss_tensor(decoder_logits(cfg, p, forward_latent(cfg, h, p, b)), b, h)

    report = grad_check(build, {name: ae.params[name] for name in names}, floor=1e-4)
    assert report.passed, report.errors


def test_recon_loss_is_one_for_uniform_and_zero_for_perfect(rings):
    h, b, _ = rings
    uniform = np.concatenate([np.full(size, 1.0 / size) for size in h.group_sizes])
    assert recon_loss(b, np.tile(uniform, (b.shape[0], 1)), h) == pytest.approx(1.0)
    assert recon_loss(b, b, h) == 0.0
    with pytest.raises(DimensionError):
        recon_loss(b, b[:, :-1], h)


@given(rows=st.integers(1, 6), scale=st.floats(0.01, 200.0), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_group_softmax_stays_on_the_simplex(rows, scale, seed):
    h = toy_homogenizer()
    probs = group_softmax(Rng(seed).normal((rows, h.dim), scale), h)
    assert np.all(probs >= 0.0)
    for start, stop in h.slices:
        np.testing.assert_allclose(probs[:, start:stop].sum(axis=1), 1.0, atol=1e-12)


def test_recon_loss_tensor_matches_array_loss(rings):
    h, b, _ = rings
    logits = Rng(4).normal((b.shape[0], h.dim))
    tensor = recon_loss_tensor(logits, b, h).item()
    assert tensor == pytest.approx(recon_loss(b, group_softmax(logits, h), h), rel=1e-10)


def test_single_slot_groups_carry_no_weight():
    h = toy_homogenizer()._replace(groups=(
        toy_homogenizer().groups[0],
        toy_homogenizer().groups[1]._replace(size=1, offset=3),
    ))
    weights = slot_weights(h)
    np.testing.assert_allclose(weights[:3], 1.0 / (np.log2(3) * 2))
    assert weights[3] == 0.0


def test_active_indices_rejects_bad_rows():
    h = toy_homogenizer()
    b = toy_rows(h, Rng(0), 3)
    np.testing.assert_array_equal(active_indices(h, b) < h.dim, True)
    b[0, :3] = 1.0
    with pytest.raises(ContractError):
        active_indices(h, b)
    with pytest.raises(ContractError):
        active_indices(h, b * 0.5)


def test_gnn_requires_matching_widths(rings):
    h, _, _ = rings
    with pytest.raises(ConfigError):
        init_autoencoder(EncoderConfig(arch='gnn', latent_dim=4, embedding_dim=3), h, seed=0)


def test_training_reduces_reconstruction_loss(rings):
    h, b, _ = rings
    ae = init_autoencoder(SMALL['ffn'], h, seed=5)
    cfg = TrainConfig(epochs=15, batch_size=32, learning_rate=1e-2, patience=15, seed=5)
    trained, history = train_unsupervised(ae, b, cfg=cfg)
    assert history.epochs_run <= 15
    assert history.best_val_loss < history.val_loss[0]
    assert history.train_loss[-1] < history.train_loss[0]
    assert trained.params.keys() == ae.params.keys()
    # the input autoencoder is left untouched
    np.testing.assert_array_equal(ae.params['embeddings'], init_autoencoder(SMALL['ffn'], h, seed=5).params['embeddings'])


def test_fine_tuning_attaches_a_head(rings):
    h, b, y = rings
    ae = init_autoencoder(SMALL['ffn'], h, seed=6)
    cfg = TrainConfig(epochs=3, batch_size=64, learning_rate=1e-2, seed=6)
    tuned, history = fine_tune_supervised(ae, b, y, cfg=cfg)
    assert tuned.has_head and tuned.n_classes == 2
    assert tuned.classify_logits(b[:5]).shape == (5, 2)
    assert len(history.train_loss) == history.epochs_run + 1
    with pytest.raises(ContractError):
        ae.classify_logits(b[:5])
    with pytest.raises(ConfigError):
        fine_tune_supervised(ae, b, y, cfg=cfg, alpha=-1.0)
    with pytest.raises(ContractError):
        fine_tune_supervised(ae, b, y[:-1], cfg=cfg)


def test_checkpoint_round_trip(tmp_path, rings):
    h, b, _ = rings
    ae = init_autoencoder(SMALL['tf'], h, seed=7)
    loaded = load_autoencoder(save_autoencoder(ae, tmp_path / 'ckpt' / 'tf.msgpack'))
    assert loaded.cfg == ae.cfg
    assert loaded.homogenizer == ae.homogenizer
    for name, value in ae.params.items():
        assert loaded.params[name].tobytes() == value.tobytes()
    np.testing.assert_array_equal(loaded.encode(b[:4]), ae.encode(b[:4]))
