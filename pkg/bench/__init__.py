from .pipelines import (
    LatentCodes,
    PipelineContext,
    PreparedData,
    TrainedEncoder,
    prepare_data,
    run_baselines,
    run_entry,
    run_full,
    run_plan,
    run_tdcoler,
    run_vanilla,
)
from .plan import DatasetEntry, EncoderEntry, PlanEntry, RunPlan, baseline_entries, expand, load_plan
from .reports import RUN_COLUMNS, TIMING_COLUMNS, compute_context, compute_contexts, emit_reports
from .selftest import run_grad_checks
from .store import ResultsStore, record_key

__all__ = (
    'LatentCodes',
    'PipelineContext',
    'PreparedData',
    'TrainedEncoder',
    'prepare_data',
    'run_baselines',
    'run_entry',
    'run_full',
    'run_plan',
    'run_tdcoler',
    'run_vanilla',
    'DatasetEntry',
    'EncoderEntry',
    'PlanEntry',
    'RunPlan',
    'baseline_entries',
    'expand',
    'load_plan',
    'RUN_COLUMNS',
    'TIMING_COLUMNS',
    'compute_context',
    'compute_contexts',
    'emit_reports',
    'run_grad_checks',
    'ResultsStore',
    'record_key',
)
