from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from functools import partial
from threading import Lock
from typing import Any, Callable, Hashable, NamedTuple

import numpy as np

from data import Dataset, Homogenizer, encode_binary, fit_homogenizer, stratified_split
from distill import DistilledSet, OutputKind, SetSpace, decode_distilled, distill
from evaluation import FULL_METHOD, Representation, RunRecord
from models import balanced_accuracy, fit, predict
from representation import (
    Autoencoder,
    TrainHistory,
    fine_tune_supervised,
    init_autoencoder,
    save_autoencoder,
    train_unsupervised,
)
from .plan import DatasetEntry, EncoderEntry, PlanEntry, RunPlan, baseline_entries
from .store import ResultsStore, record_key

__all__ = (
    'PreparedData',
    'TrainedEncoder',
    'LatentCodes',
    'prepare_data',
    'PipelineContext',
    'run_vanilla',
    'run_tdcoler',
    'run_full',
    'run_entry',
    'run_plan',
    'run_baselines',
)

logger = logging.getLogger(__name__)


class PreparedData(NamedTuple):
    """A dataset after splitting and homogenizing; shared by every run on it."""

    dataset: Dataset
    homogenizer: Homogenizer
    train_b: np.ndarray
    train_y: np.ndarray
    val_b: np.ndarray
    val_y: np.ndarray
    test_b: np.ndarray
    test_y: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.dataset.n_classes

    @property
    def minority_ratio(self) -> float:
        counts = self.dataset.class_counts()
        return float(counts.min() / counts.sum())


class TrainedEncoder(NamedTuple):
    """An autoencoder with the history of its last training phase.

    ``seconds`` covers every phase, so a fine-tuned encoder includes the
    unsupervised training it started from.
    """

    autoencoder: Autoencoder
    history: TrainHistory
    seconds: float


class LatentCodes(NamedTuple):
    train: np.ndarray
    test: np.ndarray
    seconds: float


def prepare_data(entry: DatasetEntry, plan: RunPlan) -> PreparedData:
    """Load, split with the plan seed and homogenize; test rows pass through the training homogenizer."""
    ds = entry.load()
    split = stratified_split(ds, plan.ratios, plan.seed)
    h = fit_homogenizer(ds, split.train, plan.bins, plan.strategy)
    return PreparedData(
        dataset=ds,
        homogenizer=h,
        train_b=encode_binary(h, ds, split.train), train_y=ds.labels[split.train],
        val_b=encode_binary(h, ds, split.validation), val_y=ds.labels[split.validation],
        test_b=encode_binary(h, ds, split.test), test_y=ds.labels[split.test],
    )


class PipelineContext:
    """Plan, results store and the per-dataset artifacts pipelines share.

    Prepared data, trained autoencoders and latent codes are built once per
    key; concurrent requests for the same key wait on its lock.
    """

    __slots__ = ('plan', 'store', '_guard', '_locks', '_cache')

    def __init__(self, plan: RunPlan, store: ResultsStore | None = None) -> None:
        self.plan: RunPlan = plan
        self.store: ResultsStore = store or ResultsStore(plan.output_dir)
        self._guard: Lock = Lock()
        self._locks: dict[Hashable, Lock] = {}
        self._cache: dict[Hashable, Any] = {}

    def _cached(self, key: Hashable, build: Callable[[], Any]) -> Any:
        with self._guard:
            lock = self._locks.setdefault(key, Lock())
        with lock:
            if key not in self._cache:
                self._cache[key] = build()
            return self._cache[key]

    def data(self, dataset: DatasetEntry) -> PreparedData:
        return self._cached(('data', dataset.name), partial(prepare_data, dataset, self.plan))

    def autoencoder(self, dataset: DatasetEntry, encoder: EncoderEntry) -> TrainedEncoder:
        return self._cached(('autoencoder', dataset.name, encoder), partial(self._train, dataset, encoder))

    def latent(self, dataset: DatasetEntry, encoder: EncoderEntry) -> LatentCodes:
        """Latent codes of the training and test rows."""
        def build() -> LatentCodes:
            ae, data = self.autoencoder(dataset, encoder).autoencoder, self.data(dataset)
            started = time.perf_counter()
            train, test = ae.encode(data.train_b), ae.encode(data.test_b)
            return LatentCodes(train, test, time.perf_counter() - started)
        return self._cached(('latent', dataset.name, encoder), build)

    def _train(self, dataset: DatasetEntry, encoder: EncoderEntry) -> TrainedEncoder:
        data = self.data(dataset)
        cfg = self.plan.train.with_seed(self.plan.seed)
        if encoder.sft:
            base = self.autoencoder(dataset, encoder._replace(sft=False))
            ae, history = fine_tune_supervised(
                base.autoencoder, data.train_b, data.train_y, data.val_b, data.val_y, cfg, n_classes=data.n_classes,
            )
            seconds = base.seconds + history.seconds
        else:
            ae = init_autoencoder(encoder.cfg, data.homogenizer, self.plan.seed)
            ae, history = train_unsupervised(ae, data.train_b, data.val_b, cfg)
            seconds = history.seconds
        path = save_autoencoder(ae, self.store.checkpoint_dir / f'{dataset.name}-{encoder.slug}.msgpack')
        logger.info(f'Trained {encoder.tag} autoencoder for {dataset.name} in {seconds:.2f}s: {ae!r} -> {path}')
        return TrainedEncoder(ae, history, seconds)

    def __repr__(self) -> str:
        return f'<PipelineContext plan={self.plan.name!r} store={self.store!r}>'


def _fields(entry: PlanEntry, data: PreparedData | None, plan: RunPlan) -> dict[str, Any]:
    cfg = entry.distill
    return {
        'dataset': entry.dataset.name,
        'encoder': entry.encoder_tag,
        'method': cfg.tag,
        'space': cfg.space.value,
        'ipc': cfg.ipc,
        'seed': cfg.seed,
        'plan_hash': plan.digest,
        'minority_ratio': 0.0 if data is None else data.minority_ratio,
    }


def _failures(ctx: PipelineContext, fields: dict[str, Any], representations, stage: str, error: Exception) -> list[RunRecord]:
    logger.error(f'{fields["dataset"]} {fields["encoder"]}/{fields["method"]} seed={fields["seed"]} failed at {stage}: {error}')
    return [
        RunRecord.failure(stage, error, representation=representation.value, classifier=spec.name, **fields)
        for representation in representations
        for spec in ctx.plan.classifiers
    ]


def _evaluate(
    ctx: PipelineContext,
    fields: dict[str, Any],
    representation: Representation,
    train_set: DistilledSet,
    test: tuple[np.ndarray, np.ndarray],
    n_classes: int,
    timings: dict[str, float],
) -> list[RunRecord]:
    """Fit every planned classifier on ``train_set`` and score it on ``test``.

    ``timings`` maps the ``*_seconds`` record fields of the stages already run
    to their wall-clock time.
    """
    slug = fields['encoder'].replace('*', '-sft')
    relative = (
        f'{fields["dataset"]}/{slug}/{fields["method"]}-{fields["space"]}-ipc{fields["ipc"]}'
        f'-seed{fields["seed"]}-{representation.value}.msgpack'
    )
    try:
        path = ctx.store.save_distilled(train_set, relative)
    except OSError as e:
        return _failures(ctx, fields, (representation,), 'save', e)
    test_X, test_y = test

    records = []
    for spec in ctx.plan.classifiers:
        row = {**fields, 'representation': representation.value, 'classifier': spec.name}
        stage = 'fit'
        started = time.perf_counter()
        try:
            model = fit(spec, train_set.features, train_set.labels, fields['seed'], n_classes=n_classes)
            fitted = time.perf_counter() - started
            stage = 'predict'
            accuracy = balanced_accuracy(test_y, predict(model, test_X))
        except Exception as e:
            logger.error(f'{spec.name} on {relative} failed at {stage}: {e}')
            records.append(RunRecord.failure(stage, e, **row))
            continue
        records.append(RunRecord(
            **row, **timings, balanced_accuracy=accuracy, fit_seconds=fitted,
            seconds=sum(timings.values()) + time.perf_counter() - started, distilled_path=path,
        ).checked())
    return records


def run_vanilla(ctx: PipelineContext, entry: PlanEntry) -> list[RunRecord]:
    """Distill homogenized training rows in the binary space; classifiers see homogenized test rows."""
    fields = _fields(entry, None, ctx.plan)
    stage = 'prepare'
    try:
        data = ctx.data(entry.dataset)
        fields = _fields(entry, data, ctx.plan)
        stage = 'distill'
        started = time.perf_counter()
        distilled = distill(data.train_b, data.train_y, entry.distill, n_classes=data.n_classes)
        timings = {'distill_seconds': time.perf_counter() - started}
    except Exception as e:
        return _failures(ctx, fields, (Representation.original,), stage, e)
    return _evaluate(ctx, fields, Representation.original, distilled, (data.test_b, data.test_y), data.n_classes, timings)


def run_tdcoler(ctx: PipelineContext, entry: PlanEntry) -> list[RunRecord]:
    """Train (and optionally fine-tune) the autoencoder, distill latent codes, evaluate each representation.

    ``encoded`` trains and tests on latent codes, ``decoded`` trains on the
    decoded set and tests on homogenized rows, and closest-real variants are
    also evaluated on the selected rows in the homogenized space.
    """
    wanted = [
        representation for representation in ctx.plan.representations
        if representation is not Representation.original or entry.distill.output is OutputKind.closest_real
    ]
    fields = _fields(entry, None, ctx.plan)
    stage = 'prepare'
    try:
        data = ctx.data(entry.dataset)
        fields = _fields(entry, data, ctx.plan)
        stage = 'autoencoder'
        trained = ctx.autoencoder(entry.dataset, entry.encoder)
        stage = 'encode'
        codes = ctx.latent(entry.dataset, entry.encoder)
        stage = 'distill'
        started = time.perf_counter()
        latent = distill(codes.train, data.train_y, entry.distill, n_classes=data.n_classes)
        timings = {
            'autoencoder_seconds': trained.seconds,
            'encode_seconds': codes.seconds,
            'distill_seconds': time.perf_counter() - started,
        }
        stage = 'decode'
        decoded, decode_seconds = None, 0.0
        if Representation.decoded in wanted:
            started = time.perf_counter()
            decoded = decode_distilled(trained.autoencoder, latent)
            decode_seconds = time.perf_counter() - started
    except Exception as e:
        return _failures(ctx, fields, wanted, stage, e)

    records = []
    for representation in wanted:
        if representation is Representation.encoded:
            records.extend(_evaluate(
                ctx, fields, representation, latent, (codes.test, data.test_y), data.n_classes, timings,
            ))
        elif representation is Representation.decoded:
            records.extend(_evaluate(
                ctx, fields, representation, decoded, (data.test_b, data.test_y), data.n_classes,
                {**timings, 'decode_seconds': decode_seconds},
            ))
        else:
            rows = latent.source_indices
            real = DistilledSet(
                data.train_b[rows], latent.labels, SetSpace.original,
                method=latent.method, seed=latent.seed, source_indices=rows, n_classes=latent.n_classes,
            )
            records.extend(_evaluate(
                ctx, fields, representation, real, (data.test_b, data.test_y), data.n_classes, timings,
            ))
    return records


def run_full(ctx: PipelineContext, dataset: DatasetEntry) -> list[RunRecord]:
    """Train every classifier on the whole homogenized training split."""
    fields = {
        'dataset': dataset.name, 'encoder': 'none', 'method': FULL_METHOD, 'space': 'original',
        'ipc': 0, 'seed': ctx.plan.seed, 'plan_hash': ctx.plan.digest, 'minority_ratio': 0.0,
    }
    try:
        data = ctx.data(dataset)
    except Exception as e:
        return _failures(ctx, fields, (Representation.original,), 'prepare', e)
    fields['minority_ratio'] = data.minority_ratio
    full = DistilledSet(
        data.train_b, data.train_y, SetSpace.original,
        method=FULL_METHOD, seed=ctx.plan.seed, source_indices=np.arange(data.train_y.size), n_classes=data.n_classes,
    )
    return _evaluate(ctx, fields, Representation.original, full, (data.test_b, data.test_y), data.n_classes, {})


def run_entry(ctx: PipelineContext, entry: PlanEntry) -> list[RunRecord]:
    logger.info(f'Running {entry!r}')
    if entry.is_vanilla:
        return run_vanilla(ctx, entry)
    return run_tdcoler(ctx, entry)


def _execute(ctx: PipelineContext, jobs: list[tuple[str, Callable[[], list[RunRecord]]]]) -> list[RunRecord]:
    collected: list[RunRecord] = []
    with ThreadPoolExecutor(max_workers=ctx.plan.workers, thread_name_prefix='pipeline') as pool:
        futures = {pool.submit(job): label for label, job in jobs}
        for done, future in enumerate(as_completed(futures), start=1):
            records = future.result()
            ctx.store.append(records)
            collected.extend(records)
            failed = sum(not record.ok for record in records)
            logger.info(f'[{done}/{len(jobs)}] {futures[future]}: {len(records)} records, {failed} failed')
    return sorted(collected, key=record_key)


def run_plan(ctx: PipelineContext, entries: list[PlanEntry]) -> list[RunRecord]:
    """Execute entries on the plan's worker pool, appending each entry's records as it finishes."""
    return _execute(ctx, [(repr(entry), partial(run_entry, ctx, entry)) for entry in entries])


def run_baselines(ctx: PipelineContext) -> list[RunRecord]:
    """Full-data training and random selection at the reference ipc, per dataset and classifier."""
    jobs: list[tuple[str, Callable[[], list[RunRecord]]]] = []
    for dataset in ctx.plan.datasets:
        jobs.append((f'{dataset.name} full', partial(run_full, ctx, dataset)))
        jobs.extend((repr(entry), partial(run_entry, ctx, entry)) for entry in baseline_entries(ctx.plan, dataset))
    return _execute(ctx, jobs)
