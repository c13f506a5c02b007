from .correlation import correlation_gap, feature_correlation, zero_variance_columns
from .ranking import GROUP_KEYS, WinLoss, imbalance_table, mean_rank, pairwise_winloss, regret_summary, regret_table
from .records import FULL_METHOD, RANDOM_BASELINE_IPC, RECORD_COLUMNS, STAGE_SECONDS, Representation, RunRecord, RunStatus
from .regret import RegretContext, regret_frame, relative_regret

__all__ = (
    'correlation_gap',
    'feature_correlation',
    'zero_variance_columns',
    'GROUP_KEYS',
    'WinLoss',
    'imbalance_table',
    'mean_rank',
    'pairwise_winloss',
    'regret_summary',
    'regret_table',
    'FULL_METHOD',
    'RANDOM_BASELINE_IPC',
    'RECORD_COLUMNS',
    'STAGE_SECONDS',
    'Representation',
    'RunRecord',
    'RunStatus',
    'RegretContext',
    'regret_frame',
    'relative_regret',
)
