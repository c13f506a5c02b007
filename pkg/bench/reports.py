from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd

from errors import ContractError, MissingBaselineError
from evaluation import (
    FULL_METHOD,
    RANDOM_BASELINE_IPC,
    RECORD_COLUMNS,
    STAGE_SECONDS,
    RegretContext,
    RunRecord,
    correlation_gap,
    feature_correlation,
    imbalance_table,
    mean_rank,
    pairwise_winloss,
    regret_frame,
    regret_summary,
    zero_variance_columns,
)
from .plan import RunPlan
from .store import ResultsStore

__all__ = ('RUN_COLUMNS', 'TIMING_COLUMNS', 'compute_context', 'compute_contexts', 'emit_reports')

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
KEY_COLUMNS = ['dataset', 'encoder', 'method', 'space', 'representation', 'ipc', 'seed', 'classifier']
TIMING_FIELDS = (*STAGE_SECONDS, 'seconds')
RUN_COLUMNS = [column for column in RECORD_COLUMNS if column not in TIMING_FIELDS]
TIMING_COLUMNS = [*KEY_COLUMNS, *TIMING_FIELDS]
REQUIRED_RANDOM_RUNS = 5


def _records(source: ResultsStore | Iterable[RunRecord]) -> list[RunRecord]:
    return source.latest() if isinstance(source, ResultsStore) else list(source)


def _is_reference(record: RunRecord, dataset: str, classifier: str) -> bool:
    return (
        record.ok and record.dataset == dataset and record.classifier == classifier
        and record.encoder == 'none' and record.representation == 'original'
    )


def compute_context(store: ResultsStore | Iterable[RunRecord], dataset: str, classifier: str) -> RegretContext:
    """Full-data and random@10 reference accuracies for one (dataset, classifier) pair.

    Raises
    ------
    MissingBaselineError
        If the full-data run or at least five random@10 seeds are missing.
    """
    candidates = [record for record in _records(store) if _is_reference(record, dataset, classifier)]
    full = [record for record in candidates if record.method == FULL_METHOD]
    random = {
        record.seed: record for record in candidates
        if record.method == 'random' and record.ipc == RANDOM_BASELINE_IPC
    }

    missing = []
    if not full:
        missing.append(f'full-data run for {dataset}/{classifier}')
    if len(random) < REQUIRED_RANDOM_RUNS:
        missing.append(
            f'random@{RANDOM_BASELINE_IPC} runs for {dataset}/{classifier}: '
            f'found {len(random)}, need {REQUIRED_RANDOM_RUNS}'
        )
    if missing:
        raise MissingBaselineError('missing ' + '; '.join(missing) + " (run the 'baselines' verb)", missing=tuple(missing))

    return RegretContext.from_accuracies(
        dataset, classifier, full[-1].balanced_accuracy,
        [random[seed].balanced_accuracy for seed in sorted(random)],
    )


def compute_contexts(records: list[RunRecord]) -> dict[tuple[str, str], RegretContext]:
    contexts = {}
    for dataset, classifier in sorted({(record.dataset, record.classifier) for record in records}):
        try:
            contexts[dataset, classifier] = compute_context(records, dataset, classifier)
        except MissingBaselineError as e:
            logger.warning(str(e))
    return contexts


def _write(frame: pd.DataFrame, path: Path, *, index: bool = False) -> Path:
    frame.to_csv(path, index=index, float_format=FLOAT_FORMAT, lineterminator='\n')
    return path


def _best_competitors(ranks: pd.DataFrame | None) -> list[str]:
    """Ranked competitors whose training sets live in the homogenized width."""
    if ranks is None:
        return []
    return [
        name for name in ranks.index
        if name.split('/')[3] in ('original', 'decoded') and name.split('/')[1] not in ('random', FULL_METHOD)
    ]


def _correlation_reports(store: ResultsStore, records: list[RunRecord], ranks: pd.DataFrame | None, out: Path) -> list[Path]:
    """Correlation matrices of the original, random@10 and best-ranked training sets per dataset."""
    corr_dir = out / 'correlation'
    written, summary = [], []
    best = _best_competitors(ranks)
    for dataset in sorted({record.dataset for record in records}):
        usable = [record for record in records if record.dataset == dataset and record.ok and record.distilled_path]
        sources: list[tuple[str, RunRecord]] = []
        full = [record for record in usable if record.method == FULL_METHOD]
        if not full:
            logger.warning(f'No full-data record for {dataset}; skipping its correlation reports')
            continue
        sources.append(('original', full[0]))
        random = sorted(
            (r for r in usable if r.encoder == 'none' and r.method == 'random' and r.ipc == RANDOM_BASELINE_IPC),
            key=lambda r: r.seed,
        )
        if random:
            sources.append(('random', random[0]))
        for competitor in best:
            matches = sorted((r for r in usable if r.competitor == competitor), key=lambda r: (r.ipc, r.seed))
            if matches:
                sources.append(('best', matches[0]))
                break

        reference = None
        for source, record in sources:
            features = store.load_distilled(record.distilled_path).features
            if features.shape[0] < 2:
                logger.warning(f'{dataset} {source} set has fewer than 2 rows; no correlation computed')
                continue
            corr = feature_correlation(features)
            reference = corr if source == 'original' else reference
            corr_dir.mkdir(parents=True, exist_ok=True)
            written.append(_write(pd.DataFrame(corr), corr_dir / f'{dataset}-{source}.csv', index=True))
            summary.append({
                'dataset': dataset,
                'source': source,
                'competitor': record.competitor,
                'rows': features.shape[0],
                'zero_variance_columns': int(zero_variance_columns(features).size),
                'gap_from_original': correlation_gap(reference, corr) if reference is not None else np.nan,
            })

    if summary:
        written.append(_write(pd.DataFrame(summary), out / 'correlation_preservation.csv'))
    return written


def emit_reports(store: ResultsStore, plan: RunPlan | None = None, out_dir: str | Path | None = None) -> list[Path]:
    """Regenerate every summary table from the store.

    With a plan, only records carrying its digest are used. Output depends
    only on the stored records, so regenerating from an unchanged store
    rewrites identical files.
    """
    records = store.latest(None if plan is None else plan.digest)
    if not records:
        logger.warning(f'No records in {store!r}; nothing to report')
        return []

    out = Path(out_dir) if out_dir is not None else store.tables_dir
    out.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([record.to_dict() for record in records], columns=list(RECORD_COLUMNS))
    written = [
        _write(frame[RUN_COLUMNS], out / 'runs.csv'),
        _write(frame[TIMING_COLUMNS], out / 'timings.csv'),
    ]

    contexts = compute_contexts(records)
    written.append(_write(
        pd.DataFrame([ctx._asdict() for ctx in contexts.values()], columns=list(RegretContext._fields)),
        out / 'baselines.csv',
    ))
    regrets = regret_frame(records, contexts)
    competing = regrets[regrets['method'] != FULL_METHOD]
    written.append(_write(regret_summary(competing), out / 'regret_summary.csv'))
    written.append(_write(imbalance_table(competing), out / 'imbalance.csv'))

    ranks = None
    try:
        ranks = mean_rank(competing)
        outcomes = pairwise_winloss(competing)
    except ContractError as e:
        logger.warning(f'No rank tables: {e}')
    else:
        written.append(_write(ranks, out / 'ranks.csv', index=True))
        written.append(_write(outcomes.wins, out / 'winloss.csv', index=True))
        written.append(_write(outcomes.tie_counts, out / 'ties.csv', index=True))

    written.extend(_correlation_reports(store, records, ranks, out))
    logger.info(f'Wrote {len(written)} report files to {out}')
    return written
