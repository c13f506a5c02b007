import logging
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import yaml

import config
from bench import (
    TIMING_COLUMNS,
    PipelineContext,
    ResultsStore,
    RunPlan,
    baseline_entries,
    compute_context,
    compute_contexts,
    emit_reports,
    expand,
    load_plan,
    run_baselines,
    run_grad_checks,
    run_plan,
)
from distill import DistillSpace
from errors import ConfigError, MissingBaselineError, SchemaError
from evaluation import STAGE_SECONDS, RunRecord, regret_frame, relative_regret
from main import main

PLANS = Path(__file__).resolve().parent.parent / 'plans'


def _raw(out: Path, **overrides) -> dict:
    raw = {
        'name': 'tiny',
        'seed': 3,
        'datasets': [{'name': 'blobs', 'synthetic': {'kind': 'blobs', 'rows': 90, 'n_features': 3, 'spread': 2.0, 'seed': 1}}],
        'homogenizer': {'bins': 4},
        'encoders': ['none', {'arch': 'ffn', 'latent_dim': 3, 'embedding_dim': 3, 'ffn_width': 8, 'decoder_width': 8}],
        'train': {'epochs': 2, 'batch_size': 32, 'learning_rate': 0.01},
        'distill': {'methods': ['random', 'kmeans'], 'outputs': ['as-is', 'closest-real'], 'ipc': 2, 'seeds': 1, 'restarts': 2},
        'classifiers': [{'kind': 'knn', 'params': {'k': 1}}, 'gnb'],
        'output_dir': str(out),
        'workers': 2,
    }
    return {**raw, **overrides}


def _rec(dataset: str, method: str, ipc: int, seed: int, accuracy: float, **fields) -> RunRecord:
    base = dict(
        dataset=dataset, encoder='none', method=method, space='original', representation='original',
        ipc=ipc, seed=seed, classifier='knn', balanced_accuracy=accuracy,
    )
    return RunRecord(**{**base, **fields})


def _baselines(dataset: str, full: float, random: list[float], **fields) -> list[RunRecord]:
    return [
        _rec(dataset, 'full', 0, 0, full, **fields),
        *(_rec(dataset, 'random', 10, seed, value, **fields) for seed, value in enumerate(random)),
    ]


def test_expansion_is_ordered_and_skips_closest_real_where_undefined(tmp_path):
    raw = _raw(tmp_path, encoders=['none', {'arch': 'ffn', 'sft': [False, True]}])
    raw['distill'] = {'methods': ['random', 'kmeans', 'agglomerative', 'kip', 'gm'], 'outputs': ['as-is', 'closest-real'], 'ipc': [2], 'seeds': 2}
    plan = RunPlan.from_dict(raw)
    entries = expand(plan)
    assert len(entries) == 3 * 7 * 2
    assert [repr(entry) for entry in entries] == [repr(entry) for entry in expand(plan)]

    vanilla = [entry for entry in entries if entry.is_vanilla]
    assert [entry.distill.tag for entry in vanilla[::2]] == [
        'random', 'kmeans', 'kmeans-real', 'agglomerative', 'agglomerative-real', 'kip', 'gm',
    ]
    assert all(entry.distill.space is DistillSpace.original for entry in vanilla)
    assert {entry.encoder_tag for entry in entries if not entry.is_vanilla} == {'ffn', 'ffn*'}
    assert all(entry.distill.space is DistillSpace.latent for entry in entries if not entry.is_vanilla)
    assert [entry.distill.seed for entry in entries[:2]] == [0, 1]


def test_digest_ignores_workers_and_output_dir(tmp_path):
    plan = RunPlan.from_dict(_raw(tmp_path))
    moved = RunPlan.from_dict(_raw(tmp_path / 'elsewhere', workers=5))
    assert plan.digest == moved.digest
    assert RunPlan.from_dict(_raw(tmp_path, seed=4)).digest != plan.digest


@pytest.mark.parametrize('change', [
    {'colour': 'red'},
    {'distill': {'speed': 3}},
    {'distill': {'methods': ['annealing']}},
    {'distill': {'ipc': 0}},
    {'classifiers': []},
    {'classifiers': ['knn', {'kind': 'knn', 'params': {'k': 3}}]},
    {'datasets': []},
    {'datasets': [{'schema': 'x.yaml'}]},
    {'baseline_seeds': [0, 1, 2]},
    {'workers': 0},
])
def test_invalid_plans_are_rejected(tmp_path, change):
    with pytest.raises(ConfigError):
        RunPlan.from_dict(_raw(tmp_path, **change))


def test_load_plan_resolves_paths_and_applies_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv('TDCOLER_SEED', '11')
    raw = _raw(tmp_path)
    del raw['seed'], raw['output_dir'], raw['workers']
    raw['datasets'] = [{'csv': 'tables/people.csv'}]
    path = tmp_path / 'plan.yaml'
    path.write_text(yaml.safe_dump(raw), encoding='utf-8')

    plan = load_plan(path)
    assert plan.seed == 11
    (dataset,) = plan.datasets
    assert dataset.name == 'people'
    assert dataset.csv == tmp_path / 'tables' / 'people.csv'
    assert dataset.schema == tmp_path / 'tables' / 'people.yaml'

    overridden = load_plan(path, seed=2, workers=3, output_dir=tmp_path / 'out')
    assert (overridden.seed, overridden.workers, overridden.output_dir) == (2, 3, tmp_path / 'out')
    assert overridden.digest != plan.digest


def test_desk_plan_parses():
    plan = load_plan(PLANS / 'desk.yaml')
    assert len(expand(plan)) == 3 * 7 * 5
    assert [spec.name for spec in plan.classifiers] == ['knn', 'logreg', 'gnb', 'mlp']


def test_baseline_entries_are_random_at_ten(tmp_path):
    plan = RunPlan.from_dict(_raw(tmp_path))
    entries = baseline_entries(plan, plan.datasets[0])
    assert [entry.distill.seed for entry in entries] == [0, 1, 2, 3, 4]
    assert all(entry.is_vanilla and entry.distill.tag == 'random' and entry.distill.ipc == 10 for entry in entries)


def test_store_appends_and_keeps_latest_records(tmp_path):
    store = ResultsStore(tmp_path / 'store')
    assert store.read() == [] and store.append([]) == 0
    assert not store.records_path.exists()
    store.append([_rec('a', 'kmeans', 2, 1, 0.5), _rec('a', 'kmeans', 2, 0, 0.4)])
    store.append([_rec('a', 'kmeans', 2, 1, 0.6)])
    assert len(store.read()) == 3
    latest = store.latest()
    assert [(record.seed, record.balanced_accuracy) for record in latest] == [(0, 0.4), (1, 0.6)]

    with open(store.records_path, 'a', encoding='utf-8') as f:
        f.write('{not json\n')
    with pytest.raises(SchemaError):
        store.read()


def test_compute_context_averages_five_random_runs():
    records = [
        *_baselines('a', 0.9, [0.5, 0.6, 0.7, 0.6, 0.6]),
        _rec('a', 'full', 0, 0, 0.1, encoder='ffn'),
        _rec('a', 'random', 20, 0, 0.1),
    ]
    ctx = compute_context(records, 'a', 'knn')
    assert ctx.a_full == 0.9
    assert ctx.a_random == pytest.approx(0.6)
    assert ctx.n_random == 5


def test_missing_baselines_are_reported(caplog):
    records = _baselines('a', 0.9, [0.5, 0.6, 0.7, 0.6])
    with pytest.raises(MissingBaselineError) as excinfo:
        compute_context(records, 'a', 'knn')
    assert 'found 4, need 5' in str(excinfo.value)
    with pytest.raises(MissingBaselineError):
        compute_context(records[1:], 'a', 'gnb')
    with caplog.at_level(logging.WARNING):
        assert compute_contexts(records) == {}
    assert "run the 'baselines' verb" in caplog.text


def test_reports_from_an_empty_store(tmp_path):
    assert emit_reports(ResultsStore(tmp_path)) == []


def test_reports_rank_competitors_and_regenerate_identically(tmp_path):
    store = ResultsStore(tmp_path / 'store')
    for dataset in ('a', 'b'):
        store.append(_baselines(dataset, 0.9, [0.6] * 5, minority_ratio=0.5))
        store.append([
            _rec(dataset, 'kmeans', 10, 0, 0.8, minority_ratio=0.5, seconds=1.5),
            _rec(dataset, 'agglomerative', 10, 0, 0.7, minority_ratio=0.5),
        ])
    written = emit_reports(store)
    names = {path.name for path in written}
    assert {'runs.csv', 'timings.csv', 'baselines.csv', 'regret_summary.csv', 'imbalance.csv', 'ranks.csv', 'winloss.csv', 'ties.csv'} <= names

    ranks = pd.read_csv(store.tables_dir / 'ranks.csv', index_col=0)
    assert list(ranks.index) == [
        'none/kmeans/original/original', 'none/agglomerative/original/original', 'none/random/original/original',
    ]
    np.testing.assert_allclose(ranks['mean_rank'], [1.0, 2.0, 3.0])
    np.testing.assert_allclose(ranks['median_regret'], [1 / 3, 2 / 3, 1.0])
    runs = pd.read_csv(store.tables_dir / 'runs.csv')
    assert not {'seconds', *STAGE_SECONDS} & set(runs.columns)
    timings = pd.read_csv(store.tables_dir / 'timings.csv')
    assert list(timings.columns) == TIMING_COLUMNS
    assert timings['seconds'].max() == 1.5

    before = {path.name: path.read_bytes() for path in written}
    again = emit_reports(store)
    assert {path.name: path.read_bytes() for path in again} == before


def test_plan_reports_keep_their_records_when_another_plan_reruns_an_entry(tmp_path):
    plan = RunPlan.from_dict(_raw(tmp_path))
    store = ResultsStore(tmp_path / 'shared')
    store.append(_baselines('a', 0.9, [0.6] * 5, plan_hash=plan.digest))
    store.append([_rec('a', 'kmeans', 10, 0, 0.8, plan_hash=plan.digest)])
    store.append([_rec('a', 'kmeans', 10, 0, 0.3, plan_hash='another-plan')])

    assert store.latest()[-1].plan_hash == 'another-plan'
    mine = store.latest(plan.digest)
    assert len(mine) == 7 and {record.plan_hash for record in mine} == {plan.digest}

    emit_reports(store, plan)
    runs = pd.read_csv(store.tables_dir / 'runs.csv')
    kmeans = runs[runs['method'] == 'kmeans']
    assert kmeans['balanced_accuracy'].tolist() == pytest.approx([0.8])


ALL_METHODS = {
    'methods': ['random', 'kmeans', 'agglomerative', 'kip', 'gm'],
    'outputs': ['as-is', 'closest-real'],
    'ipc': 2,
    'seeds': 1,
    'restarts': 2,
    'kip': {'epochs': 5, 'ridge': 1e-3},
    'gm': {'epochs': 2, 'hidden_width': 8, 'depth': 1, 'inner_steps': 2},
}


def _campaign(root: Path) -> tuple[list[RunRecord], list[RunRecord]]:
    plan = RunPlan.from_dict(_raw(root, distill=ALL_METHODS))
    ctx = PipelineContext(plan)
    baselines = run_baselines(ctx)
    records = run_plan(ctx, expand(plan))
    emit_reports(ctx.store, plan)
    return baselines, records


def test_small_campaign_is_complete_and_reproducible(tmp_path):
    baselines, records = _campaign(tmp_path / 'first')
    assert len(baselines) == 2 + 5 * 2
    # 7 vanilla entries x 1 representation; 7 latent entries, 5 as-is x 2 and 2 closest-real x 3
    # representations; 2 classifiers each
    assert len(records) == (7 + 16) * 2
    assert all(record.ok for record in baselines + records), [r for r in baselines + records if not r.ok]
    assert {record.method for record in records} == {
        'random', 'kmeans', 'kmeans-real', 'agglomerative', 'agglomerative-real', 'kip', 'gm',
    }
    assert {(record.encoder, record.space) for record in records} == {('none', 'original'), ('ffn', 'latent')}
    assert {record.representation for record in records if record.encoder == 'ffn'} == {'encoded', 'decoded', 'original'}
    assert (tmp_path / 'first' / 'checkpoints' / 'blobs-ffn.msgpack').exists()

    store = ResultsStore(tmp_path / 'first')
    for record in baselines + records:
        if record.method == 'full':
            continue
        loaded = store.load_distilled(record.distilled_path)
        np.testing.assert_array_equal(loaded.class_counts(), [record.ipc] * 3)

    latent = [record for record in records if record.encoder == 'ffn']
    assert len({record.autoencoder_seconds for record in latent}) == 1
    assert len({record.encode_seconds for record in latent}) == 1
    assert latent[0].autoencoder_seconds > 0.0 and latent[0].encode_seconds > 0.0
    for record in baselines + records:
        stages = [getattr(record, name) for name in STAGE_SECONDS]
        assert min(stages) >= 0.0
        assert record.seconds >= sum(stages)
        assert (record.decode_seconds > 0.0) == (record.representation == 'decoded')
        if record.encoder == 'none':
            assert record.autoencoder_seconds == record.encode_seconds == 0.0

    _campaign(tmp_path / 'second')
    first = (tmp_path / 'first' / 'tables' / 'runs.csv').read_bytes()
    assert first == (tmp_path / 'second' / 'tables' / 'runs.csv').read_bytes()


def test_grad_checks_pass():
    reports = run_grad_checks()
    assert set(reports) == {'reconstruction', 'fine-tune', 'kip', 'gm'}
    for name, report in reports.items():
        assert report.passed, (name, report.errors)


def test_config_getters(monkeypatch, tmp_path):
    monkeypatch.setenv('TDCOLER_WORKERS', '0')
    with pytest.raises(ConfigError):
        config.get_workers()
    monkeypatch.setenv('TDCOLER_LOG_LEVEL', 'debug')
    assert config.get_log_level() == 'DEBUG'
    monkeypatch.setenv('TDCOLER_OUT', str(tmp_path))
    assert config.get_output_dir() == tmp_path

    listing = tmp_path / 'list.yaml'
    listing.write_text('- a\n- b\n', encoding='utf-8')
    with pytest.raises(ConfigError):
        config.load_yaml(listing)
    empty = tmp_path / 'empty.yaml'
    empty.write_text('', encoding='utf-8')
    assert config.load_yaml(empty) == {}


def test_command_line_exit_codes(tmp_path, capsys):
    plan = tmp_path / 'plan.yaml'
    plan.write_text(yaml.safe_dump(_raw(tmp_path / 'out', encoders=['none'])), encoding='utf-8')

    assert main(['report', '--out', str(tmp_path / 'nothing')]) == 0
    assert main(['bench']) == 2
    assert main(['distill', '--plan', str(plan), '--method', 'kmeans-real']) == 0
    assert 'kmeans-real' in capsys.readouterr().out
    assert len(ResultsStore(tmp_path / 'out').read()) == 2
    assert main(['distill', '--plan', str(plan), '--method', 'kip']) == 2
    with pytest.raises(SystemExit):
        main(['shuffle'])


def test_stored_baselines_anchor_regret_at_zero_and_one(tmp_path):
    store = ResultsStore(tmp_path)
    store.append(_baselines('a', 0.85, [0.55, 0.6, 0.7, 0.65, 0.5]))
    full, *random = store.latest()
    ctx = compute_context(store, 'a', 'knn')
    assert relative_regret(ctx, full.balanced_accuracy) == 0.0
    assert relative_regret(ctx, np.mean([record.balanced_accuracy for record in random])) == 1.0


@pytest.mark.slow
def test_latent_clustering_beats_random_and_original_space_at_desk_scale(tmp_path):
    raw = config.load_yaml(PLANS / 'desk.yaml')
    encoder = {**raw['encoders'][1], 'sft': True}
    raw.update(
        encoders=['none', encoder], representations=['encoded'], output_dir=str(tmp_path),
        classifiers=[{'kind': 'knn', 'params': {'k': 5}}, {'kind': 'mlp', 'params': {'learning_rate': 0.001, 'max_epochs': 200}}],
    )
    raw['distill'].update(methods=['kmeans'], outputs=['as-is'])
    plan = RunPlan.from_dict(raw)
    ctx = PipelineContext(plan)
    run_baselines(ctx)
    run_plan(ctx, expand(plan))

    records = ctx.store.latest()
    regrets = regret_frame(records, compute_contexts(records))
    medians = regrets.groupby(['classifier', 'competitor'])['regret'].median()
    for classifier in ('knn', 'mlp'):
        latent = medians[classifier, 'ffn*/kmeans/latent/encoded']
        assert latent < 1.0
        assert latent < medians[classifier, 'none/kmeans/original/original']
