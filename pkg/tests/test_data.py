import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from data import (
    ColumnKind,
    ColumnSchema,
    Dataset,
    encode_binary,
    fit_homogenizer,
    group_argmax_decode,
    load_csv,
    make_blobs,
    make_rings,
    make_synthetic,
    stratified_split,
)
from data.split import _allocate
from errors import ConfigError, ContractError, SchemaError, StratificationError

SIDECAR = """\
label: outcome
columns:
  age: numerical
  color: {kind: categorical, categories: [red, green, blue]}
"""

TABLE = """\
age,color,outcome,note
31,red,yes,a
?,green,no,b
27,,yes,c
45,blue,maybe,d
"""


@pytest.fixture
def table(tmp_path):
    (tmp_path / 'people.csv').write_text(TABLE, encoding='utf-8')
    (tmp_path / 'people.yaml').write_text(SIDECAR, encoding='utf-8')
    return tmp_path / 'people.csv', tmp_path / 'people.yaml'


def test_load_csv_reads_missing_cells_and_reindexes_labels(table):
    ds = load_csv(*table)
    assert ds.name == 'people'
    assert [column.name for column in ds.schema] == ['age', 'color']
    assert ds.row(1) == (None, 'green')
    assert ds.row(2) == (27.0, None)
    np.testing.assert_array_equal(ds.labels, [0, 1, 0, 2])
    assert ds.label_names == ('yes', 'no', 'maybe')
    assert ds.schema[1].categories == ('red', 'green', 'blue')


def test_load_csv_rejects_bad_cells(tmp_path, table):
    csv, sidecar = table
    csv.write_text(TABLE.replace('45', 'old'), encoding='utf-8')
    with pytest.raises(SchemaError, match='non-numeric'):
        load_csv(csv, sidecar)
    sidecar.write_text(SIDECAR + '  height: numerical\n', encoding='utf-8')
    with pytest.raises(SchemaError, match='absent'):
        load_csv(csv, sidecar)


def test_dataset_rejects_empty_classes():
    with pytest.raises(SchemaError):
        Dataset('gap', [ColumnSchema('x', ColumnKind.numerical)], [np.zeros(3)], np.array([0, 0, 2]))


@st.composite
def mixed_tables(draw):
    rows = draw(st.integers(3, 40))
    n_num = draw(st.integers(0, 3))
    n_cat = draw(st.integers(0 if n_num else 1, 3))
    schema, columns = [], []
    for j in range(n_num):
        values = np.array(draw(st.lists(st.floats(-1e3, 1e3), min_size=rows, max_size=rows)))
        holes = np.array(draw(st.lists(st.booleans(), min_size=rows, max_size=rows)))
        values[holes] = np.nan
        schema.append(ColumnSchema(f'n{j}', ColumnKind.numerical))
        columns.append(values)
    for j in range(n_cat):
        cells = draw(st.lists(st.sampled_from(['a', 'b', 'c', None]), min_size=rows, max_size=rows))
        schema.append(ColumnSchema(f'c{j}', ColumnKind.categorical, ('a', 'b', 'c')))
        columns.append(np.array(cells, dtype=object))
    labels = np.arange(rows) % 2
    return Dataset('mixed', schema, columns, labels)


@given(ds=mixed_tables(), bins=st.integers(2, 12))
@settings(max_examples=200, deadline=None)
def test_every_group_has_exactly_one_active_slot(ds, bins):
    train = np.arange(0, ds.n_rows, 2)
    h = fit_homogenizer(ds, train, bins)
    encoded = encode_binary(h, ds)
    assert encoded.shape == (ds.n_rows, h.dim)
    assert set(np.unique(encoded)) <= {0.0, 1.0}
    np.testing.assert_array_equal(encoded.sum(axis=1), np.full(ds.n_rows, h.n_features))
    for start, stop in h.slices:
        np.testing.assert_array_equal(encoded[:, start:stop].sum(axis=1), 1.0)
    np.testing.assert_array_equal(group_argmax_decode(h, encoded), encoded)


@given(ds=mixed_tables(), bins=st.integers(2, 12), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_encoding_does_not_depend_on_row_order(ds, bins, seed):
    order = np.random.default_rng(seed).permutation(ds.n_rows)
    h = fit_homogenizer(ds, np.arange(ds.n_rows), bins)
    assert fit_homogenizer(ds, order, bins) == h
    np.testing.assert_array_equal(encode_binary(h, ds, order), encode_binary(h, ds)[order])


def _numeric(values) -> Dataset:
    values = np.asarray(values, dtype=np.float64)
    return Dataset('num', [ColumnSchema('x', ColumnKind.numerical)], [values], np.arange(values.size) % 2)


def test_quantile_bins_are_half_open_and_clamped():
    ds = _numeric(np.arange(100))
    h = fit_homogenizer(ds, np.arange(100), bins=4)
    assert h.groups[0].edges == pytest.approx((24.75, 49.5, 74.25))
    probe = _numeric([-5.0, 24.75, 50.0, 1000.0])
    np.testing.assert_array_equal(encode_binary(h, probe).argmax(axis=1), [0, 1, 2, 3])


def test_uniform_bins_and_constant_columns():
    h = fit_homogenizer(_numeric([0.0, 10.0, 2.0, 4.0]), np.arange(4), bins=5, strategy='uniform')
    assert h.groups[0].edges == pytest.approx((2.0, 4.0, 6.0, 8.0))
    flat = fit_homogenizer(_numeric([3.0, 3.0, 3.0, 3.0]), np.arange(4))
    assert flat.groups[0].size == 1
    with pytest.raises(ConfigError):
        fit_homogenizer(_numeric([1.0, 2.0]), np.arange(2), bins=1)


def test_tied_quantile_edges_warn_about_lost_bins(caplog):
    skewed = _numeric([0.0] * 19 + [1.0])
    with caplog.at_level(logging.WARNING):
        h = fit_homogenizer(skewed, np.arange(20), bins=10)
    assert h.groups[0].size == 1
    assert '1 of 10 bins kept' in caplog.text
    caplog.clear()
    with caplog.at_level(logging.WARNING):
        fit_homogenizer(_numeric(np.arange(100)), np.arange(100), bins=4)
    assert caplog.text == ''


def test_categorical_groups_learn_missing_slots_from_training_rows():
    ds = Dataset(
        'colors', [ColumnSchema('color', ColumnKind.categorical)],
        [np.array(['red', 'blue', None, 'green'], dtype=object)], np.array([0, 1, 0, 1]),
    )
    h = fit_homogenizer(ds, [0, 1, 2])
    group = h.groups[0]
    assert group.categories == ('blue', 'red')
    assert group.has_missing and group.size == 3
    # unseen 'green' joins the missing slot
    np.testing.assert_array_equal(encode_binary(h, ds).argmax(axis=1), [1, 0, 2, 2])


def test_group_argmax_decode_prefers_lowest_index_and_checks_sums():
    h = fit_homogenizer(_numeric(np.arange(10)), np.arange(10), bins=2)
    np.testing.assert_array_equal(group_argmax_decode(h, np.array([[0.5, 0.5]])), [[1.0, 0.0]])
    with pytest.raises(ContractError):
        group_argmax_decode(h, np.array([[0.5, 0.6]]))


def test_allocate_uses_largest_remainders_and_fills_empty_parts():
    assert _allocate(10, (0.7, 0.15, 0.15)) == [7, 2, 1]
    assert _allocate(3, (0.7, 0.15, 0.15)) == [1, 1, 1]
    assert _allocate(100, (0.7, 0.15, 0.15)) == [70, 15, 15]


def test_stratified_split_is_disjoint_deterministic_and_stratified():
    ds = make_blobs(rows=90, n_classes=3)
    split = stratified_split(ds, seed=4)
    joined = np.concatenate(split)
    assert np.unique(joined).size == joined.size == ds.n_rows
    for part, expected in zip(split, (21, 5, 4)):
        np.testing.assert_array_equal(np.bincount(ds.labels[part], minlength=3), expected)
    again = stratified_split(ds, seed=4)
    for a, b in zip(split, again):
        np.testing.assert_array_equal(a, b)
    assert not np.array_equal(split.train, stratified_split(ds, seed=5).train)


def test_stratified_split_guards():
    with pytest.raises(StratificationError):
        stratified_split(_numeric([1.0, 2.0, 3.0, 4.0]))
    with pytest.raises(ConfigError):
        stratified_split(make_blobs(), (0.5, 0.5))


def test_rings_are_balanced_and_optionally_categorical():
    ds = make_rings(rows=200, n_features=5, categorical=True)
    assert (ds.n_numerical, ds.n_categorical, ds.n_classes) == (5, 1, 2)
    np.testing.assert_array_equal(ds.class_counts(), [100, 100])
    radius = np.hypot(ds.columns[0], ds.columns[1])
    assert radius[ds.labels == 0].mean() < radius[ds.labels == 1].mean()
    assert set(ds.columns[-1]) <= {'q0', 'q1', 'q2', 'q3'}


def test_make_synthetic_dispatch():
    ds = make_synthetic('toy', {'kind': 'blobs', 'rows': 30, 'n_classes': 3})
    assert (ds.name, ds.n_rows, ds.n_classes) == ('toy', 30, 3)
    with pytest.raises(ConfigError):
        make_synthetic('toy', {'kind': 'spirals'})
    with pytest.raises(ConfigError):
        make_synthetic('toy', {'kind': 'rings', 'depth': 3})
