import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from errors import ConfigError, ContractError, DimensionError, NumericalError, SchemaError
from numerics import (
    Graph,
    OptimizerState,
    Rng,
    as_matrix,
    backward,
    cholesky_solve,
    grad_check,
    matmul,
    pack_array,
    read_document,
    step,
    unpack_array,
    write_document,
)
from numerics.autodiff import concat, exp, group_log_softmax, lift, log, softmax, spd_solve, take
from distill.kernel import ntk, ntk_tensor


def _spd(n: int, seed: int) -> np.ndarray:
    m = Rng(seed).normal((n, n))
    return m @ m.T + n * np.eye(n)


@given(n=st.integers(1, 8), cols=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_cholesky_solve_matches_dense_solve(n, cols, seed):
    a = _spd(n, seed)
    b = Rng(seed).child('rhs').normal((n, cols))
    np.testing.assert_allclose(cholesky_solve(a, b), np.linalg.solve(a, b), rtol=1e-8, atol=1e-10)


def test_cholesky_solve_keeps_vector_shape():
    x = cholesky_solve(np.diag([2.0, 4.0]), np.array([2.0, 2.0]))
    assert x.shape == (2,)
    np.testing.assert_allclose(x, [1.0, 0.5])


@pytest.mark.parametrize('a, pivot', [
    ([[0.0]], 0),
    ([[1.0, 0.0], [0.0, -1.0]], 1),
    ([[1.0, 2.0], [2.0, 1.0]], 1),
])
def test_cholesky_solve_reports_failing_pivot(a, pivot):
    with pytest.raises(NumericalError) as excinfo:
        cholesky_solve(np.array(a), np.ones(len(a)))
    assert excinfo.value.pivot == pivot


def test_cholesky_solve_rejects_mismatched_rhs():
    with pytest.raises(DimensionError):
        cholesky_solve(np.eye(3), np.ones((2, 1)))


def test_matmul_and_as_matrix_guards():
    np.testing.assert_array_equal(matmul(np.ones((2, 3)), np.ones((3, 4))), np.full((2, 4), 3.0))
    with pytest.raises(DimensionError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(DimensionError):
        as_matrix([[1.0, np.nan]])
    assert as_matrix([1.0, 2.0]).shape == (2, 1)


def test_backward_composite_expression_passes_grad_check():
    rng = Rng(3)
    x = rng.normal((5, 3))
    rows = np.array([1, 4, 5, 7, 7])
    groups = ((0, 2), (2, 4))
    params = {
        'w': rng.child('w').normal((3, 4)),
        'b': rng.child('b').normal(4),
        'm': rng.child('m').normal((3, 3)),
    }

    def build(graph: Graph):
        p = graph.params
        logits = x @ p['w'] + p['b']
        slots = group_log_softmax(logits, groups)
        gram = p['m'] @ p['m'].T + 3.0 * np.eye(3)
        solved = spd_solve(gram, p['w'])
        picked = take(concat([softmax(logits), solved], axis=0), rows)
        return -slots.sum() * 0.1 + (picked * picked).mean() + log(exp(p['b'] * 0.5) + 1.0).sum()

    report = grad_check(build, params, floor=1e-4)
    assert report.passed, report.errors


def test_backward_gives_zero_for_unused_parameters():
    graph = Graph()
    a = graph.param('a', np.array([1.0, 2.0]))
    graph.param('unused', np.ones((2, 2)))
    grads = backward(graph, (a * a).sum())
    np.testing.assert_array_equal(grads['a'], [2.0, 4.0])
    np.testing.assert_array_equal(grads['unused'], np.zeros((2, 2)))


def test_backward_accumulates_reused_nodes():
    graph = Graph()
    a = graph.param('a', 3.0)
    b = a * a
    grads = backward(graph, b + b * a)
    assert grads['a'] == pytest.approx(2 * 3.0 + 3 * 9.0)


def test_graph_contracts():
    graph = Graph()
    a = graph.param('a', np.ones(3))
    with pytest.raises(ContractError):
        graph.param('a', np.ones(3))
    with pytest.raises(ContractError):
        backward(graph, a * 2.0)
    with pytest.raises(DimensionError):
        lift(np.ones((2, 3))) + np.ones(2)


def test_broadcast_vector_gradient_is_summed_over_rows():
    graph = Graph()
    bias = graph.param('bias', np.zeros(3))
    grads = backward(graph, (lift(np.ones((4, 3))) + bias).sum())
    np.testing.assert_array_equal(grads['bias'], np.full(3, 4.0))


def test_adam_first_step_moves_by_learning_rate():
    opt = OptimizerState.adam(0.01)
    params = {'p': np.array([1.0, -1.0, 0.5])}
    updated = step(opt, params, {'p': np.array([3.0, -0.2, 1e-3])})
    np.testing.assert_allclose(updated['p'], params['p'] - 0.01 * np.array([1.0, -1.0, 1.0]), rtol=1e-5)
    assert opt.t == 1


def test_sgd_momentum_accumulates_velocity():
    opt = OptimizerState.sgd(0.1, momentum=0.5)
    grad = {'p': np.array([1.0])}
    params = step(opt, {'p': np.array([0.0])}, grad)
    params = step(opt, params, grad)
    assert params['p'][0] == pytest.approx(-0.1 - 0.1 * 1.5)


def test_step_guards():
    opt = OptimizerState.adam()
    untouched = np.ones(2)
    assert step(opt, {'p': untouched}, {})['p'] is untouched
    with pytest.raises(DimensionError):
        step(opt, {'p': np.ones(2)}, {'p': np.ones(3)})
    with pytest.raises(ConfigError):
        OptimizerState.sgd(0.0)


def test_rng_children_ignore_parent_consumption():
    a, b = Rng(7), Rng(7)
    a.normal(100)
    np.testing.assert_array_equal(a.child('x', 1).normal(5), b.child('x', 1).normal(5))
    assert not np.array_equal(b.child('x', 1).normal(5), b.child('x', 2).normal(5))


def test_msgpack_document_round_trip_is_bit_exact(tmp_path):
    values = Rng(1).normal((4, 3))
    path = write_document(tmp_path / 'nested' / 'doc.msgpack', 'probe', 1, {
        'values': pack_array(values),
        'ids': pack_array(np.arange(4)),
    })
    raw = read_document(path, 'probe')
    assert unpack_array(raw['values']).tobytes() == values.tobytes()
    assert unpack_array(raw['ids']).dtype == np.int64
    with pytest.raises(SchemaError):
        read_document(path, 'other')
    with pytest.raises(SchemaError):
        read_document(path, 'probe', versions=(2,))


def test_ntk_matches_wide_network_monte_carlo():
    # 5 inputs give 10 distinct off-diagonal pairs
    rng = Rng(11)
    base = np.abs(rng.normal((1, 8))) + 0.5
    X = base + 0.3 * rng.child('jitter').normal((5, 8))
    width = 2 ** 17
    w = rng.child('w').normal((8, width))
    pre = X @ w / np.sqrt(8.0)
    active = (pre > 0.0).astype(np.float64)
    relu = pre * active
    estimate = relu @ relu.T / width + (X @ X.T / 8.0) * (active @ active.T / width)
    np.testing.assert_allclose(ntk(X), estimate, rtol=0.02)


def test_ntk_is_symmetric_psd_and_zero_on_zero_rows():
    X = Rng(2).normal((6, 3))
    X[4] = 0.0
    K = ntk(X)
    np.testing.assert_allclose(K, K.T, atol=1e-12)
    assert np.linalg.eigvalsh(K).min() > -1e-10
    np.testing.assert_array_equal(K[4], np.zeros(6))
    with pytest.raises(DimensionError):
        ntk_tensor(np.ones((2, 3)), np.ones((2, 4)))


def test_ntk_gradient_passes_grad_check():
    rng = Rng(5)
    query = rng.normal((4, 3))

    def build(graph: Graph):
        return ntk_tensor(query, graph.params['support']).sum()

    assert grad_check(build, {'support': rng.child('s').normal((3, 3))}).passed
