from __future__ import annotations

import logging
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
import pandas as pd

from errors import ContractError, UndefinedRegretError
from .records import RECORD_COLUMNS, RunRecord

__all__ = ('RegretContext', 'relative_regret', 'regret_frame')

logger = logging.getLogger(__name__)


class RegretContext(NamedTuple):
    """Reference accuracies of one (dataset, classifier) pair.

    ``a_full`` comes from training on the whole homogenized training split,
    ``a_random`` is the mean over the random IPC-10 repetitions.
    """

    dataset: str
    classifier: str
    a_full: float
    a_random: float
    n_random: int = 5

    @classmethod
    def from_accuracies(cls, dataset: str, classifier: str, full: float, random: Sequence[float]) -> RegretContext:
        for value in (full, *random):
            if not 0.0 <= value <= 1.0:
                raise ContractError(f'baseline accuracy {value!r} outside [0, 1]')
        return cls(dataset, classifier, float(full), float(np.mean(random)), len(random))

    @property
    def key(self) -> tuple[str, str]:
        return self.dataset, self.classifier

    def __repr__(self) -> str:
        return (
            f'<RegretContext {self.dataset}/{self.classifier} '
            f'full={self.a_full:.4f} random10={self.a_random:.4f} n={self.n_random}>'
        )


def relative_regret(ctx: RegretContext, accuracy: float) -> float:
    """``(A_F - A) / (A_F - A_R10)``.

    0 matches full-data training and 1 matches random sampling at ten
    instances per class; values outside [0, 1] are reported unclamped.
    """
    gap = ctx.a_full - ctx.a_random
    if gap == 0.0:
        raise UndefinedRegretError(ctx.a_full, ctx.a_random)
    return (ctx.a_full - accuracy) / gap


def regret_frame(records: Iterable[RunRecord], contexts: Mapping[tuple[str, str], RegretContext]) -> pd.DataFrame:
    """Successful records as a frame with ``competitor`` and ``regret`` columns.

    Records whose (dataset, classifier) pair has no context, or whose context
    leaves regret undefined, are dropped with a warning.
    """
    rows = []
    undefined: set[tuple[str, str]] = set()
    missing: set[tuple[str, str]] = set()
    for record in records:
        if not record.ok:
            continue
        key = (record.dataset, record.classifier)
        ctx = contexts.get(key)
        if ctx is None:
            missing.add(key)
            continue
        try:
            regret = relative_regret(ctx, record.balanced_accuracy)
        except UndefinedRegretError:
            undefined.add(key)
            continue
        rows.append({**record.to_dict(), 'competitor': record.competitor, 'regret': regret})

    for dataset, classifier in sorted(missing):
        logger.warning(f'No regret context for {dataset}/{classifier}; its records are skipped')
    for dataset, classifier in sorted(undefined):
        logger.warning(f'Regret undefined for {dataset}/{classifier}: full-data and random@10 accuracies coincide')
    return pd.DataFrame(rows, columns=[*RECORD_COLUMNS, 'competitor', 'regret'])
