from __future__ import annotations

import logging
from typing import NamedTuple, Sequence

import numpy as np
import pandas as pd

from errors import ContractError

__all__ = (
    'GROUP_KEYS',
    'WinLoss',
    'regret_table',
    'mean_rank',
    'pairwise_winloss',
    'regret_summary',
    'imbalance_table',
)

logger = logging.getLogger(__name__)

GROUP_KEYS = ('dataset', 'classifier', 'ipc')


def regret_table(
    frame: pd.DataFrame,
    *,
    group_keys: Sequence[str] = GROUP_KEYS,
    competitor: str = 'competitor',
) -> pd.DataFrame:
    """One row per complete group, one column per competitor.

    Repeated seeds of a competitor within a group collapse to their median
    regret. Groups missing any competitor are skipped with a warning.

    Raises
    ------
    ContractError
        If no complete group remains.
    """
    if frame.empty:
        raise ContractError('cannot rank an empty set of records')
    table = frame.pivot_table(index=list(group_keys), columns=competitor, values='regret', aggfunc='median')
    table = table.sort_index().sort_index(axis=1)
    incomplete = table.isna().any(axis=1)
    if incomplete.any():
        logger.warning(f'Skipping {int(incomplete.sum())} group(s) lacking a competitor: {list(table.index[incomplete])}')
        table = table[~incomplete]
    if table.empty:
        raise ContractError('no group contains every competitor')
    return table


def _in_groups(frame: pd.DataFrame, table: pd.DataFrame, group_keys: Sequence[str]) -> pd.DataFrame:
    return frame[frame.set_index(list(group_keys)).index.isin(table.index)]


def mean_rank(
    frame: pd.DataFrame,
    *,
    group_keys: Sequence[str] = GROUP_KEYS,
    competitor: str = 'competitor',
) -> pd.DataFrame:
    """Average within-group rank by ascending regret, ties sharing the average rank.

    Returns a frame indexed by competitor with ``mean_rank``,
    ``median_regret`` (pooled over every record of the ranked groups) and
    ``groups``, ordered best first.
    """
    table = regret_table(frame, group_keys=group_keys, competitor=competitor)
    ranks = table.rank(axis=1, method='average', ascending=True)
    pooled = _in_groups(frame, table, group_keys).groupby(competitor)['regret'].median()
    result = pd.DataFrame({
        'mean_rank': ranks.mean(axis=0),
        'median_regret': pooled.reindex(table.columns),
        'groups': len(table),
    })
    result.index.name = competitor
    return result.sort_values('mean_rank', kind='mergesort')


class WinLoss(NamedTuple):
    """Pairwise outcomes over the complete groups.

    ``wins.loc[i, j]`` is the fraction of groups where ``i`` had strictly
    lower regret than ``j``; ``ties`` holds the fraction where they were
    equal, so ``wins[i, j] + wins[j, i] + ties[i, j] == 1``.
    """

    wins: pd.DataFrame
    ties: pd.DataFrame
    groups: int

    @property
    def tie_counts(self) -> pd.DataFrame:
        return (self.ties * self.groups).round().astype(np.int64)

    def __repr__(self) -> str:
        return f'<WinLoss competitors={len(self.wins)} groups={self.groups}>'


def pairwise_winloss(
    frame: pd.DataFrame,
    *,
    group_keys: Sequence[str] = GROUP_KEYS,
    competitor: str = 'competitor',
) -> WinLoss:
    table = regret_table(frame, group_keys=group_keys, competitor=competitor)
    values = table.to_numpy()
    wins = (values[:, :, None] < values[:, None, :]).mean(axis=0)
    ties = (values[:, :, None] == values[:, None, :]).mean(axis=0)
    names = table.columns
    return WinLoss(
        wins=pd.DataFrame(wins, index=names, columns=names),
        ties=pd.DataFrame(ties, index=names, columns=names),
        groups=len(table),
    )


def regret_summary(frame: pd.DataFrame, keys: Sequence[str] = ('encoder', 'method', 'representation', 'ipc')) -> pd.DataFrame:
    """Median and quartiles of pooled regret per key."""
    if frame.empty:
        return pd.DataFrame(columns=[*keys, 'count', 'q1', 'median', 'q3'])
    grouped = frame.groupby(list(keys), sort=True)['regret']
    summary = pd.DataFrame({
        'count': grouped.size(),
        'q1': grouped.quantile(0.25),
        'median': grouped.median(),
        'q3': grouped.quantile(0.75),
    })
    return summary.reset_index()


def imbalance_table(frame: pd.DataFrame, competitor: str = 'competitor') -> pd.DataFrame:
    """Median regret per (dataset, competitor) next to the dataset's minority-class ratio."""
    columns = ['dataset', 'minority_ratio', competitor, 'median_regret']
    if frame.empty:
        return pd.DataFrame(columns=columns)
    grouped = frame.groupby(['dataset', 'minority_ratio', competitor], sort=True)['regret'].median()
    return grouped.rename('median_regret').reset_index()[columns]
