from __future__ import annotations

import argparse
import logging
import sys

from dotenv import load_dotenv

load_dotenv()

from config import get_log_level, get_output_dir  # noqa: E402
from bench import (  # noqa: E402
    PipelineContext,
    PlanEntry,
    ResultsStore,
    emit_reports,
    expand,
    load_plan,
    run_baselines,
    run_entry,
    run_grad_checks,
    run_plan,
)
from errors import ConfigError, TDColerError  # noqa: E402

logging.basicConfig(
    level=get_log_level(),
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='tdcoler', description='Tabular dataset distillation benchmark')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--plan', help='YAML campaign plan')
    common.add_argument('--seed', type=int, help='overrides the plan seed')
    common.add_argument('--workers', type=int, help='concurrent pipeline entries')
    common.add_argument('--out', help='results directory')

    verbs = parser.add_subparsers(dest='verb', required=True)
    one = verbs.add_parser('distill', parents=[common], help='run the plan entries matching a filter')
    one.add_argument('--dataset', help='dataset name (default: every dataset)')
    one.add_argument('--encoder', default='none', help="encoder tag such as 'none', 'ffn' or 'tf*'")
    one.add_argument('--method', required=True, help='distillation method tag, e.g. kmeans or kmeans-real')
    one.add_argument('--ipc', type=int, help='instances per class (default: every planned value)')

    bench = verbs.add_parser('bench', parents=[common], help='run the full plan and write reports')
    bench.add_argument('--no-baselines', action='store_true', help='skip the full-data and random@10 runs')
    verbs.add_parser('report', parents=[common], help='regenerate report tables from stored records')
    verbs.add_parser('baselines', parents=[common], help='full-data and random@10 runs per classifier')
    verbs.add_parser('grad-check', parents=[common], help='finite-difference checks of every objective')
    return parser


def _context(args: argparse.Namespace) -> PipelineContext:
    if not args.plan:
        raise ConfigError(f'the {args.verb!r} verb needs --plan')
    plan = load_plan(args.plan, seed=args.seed, workers=args.workers, output_dir=args.out)
    return PipelineContext(plan)


def _matches(entry: PlanEntry, args: argparse.Namespace) -> bool:
    return (
        (args.dataset is None or entry.dataset.name == args.dataset)
        and entry.encoder_tag == args.encoder
        and entry.distill.tag == args.method
        and (args.ipc is None or entry.distill.ipc == args.ipc)
    )


def run(args: argparse.Namespace) -> int:
    if args.verb == 'grad-check':
        reports = run_grad_checks(args.seed or 0)
        failed = [name for name, report in reports.items() if not report.passed]
        for name, report in reports.items():
            print(f'{name:16s} {report!r}')
        if failed:
            logger.error(f'Gradient checks failed: {failed}')
            return 1
        return 0

    if args.verb == 'report':
        if args.plan:
            ctx = _context(args)
            emit_reports(ctx.store, ctx.plan)
        else:
            emit_reports(ResultsStore(args.out or get_output_dir()))
        return 0

    ctx = _context(args)
    if args.verb == 'baselines':
        run_baselines(ctx)
        return 0

    if args.verb == 'distill':
        entries = [entry for entry in expand(ctx.plan) if _matches(entry, args)]
        if not entries:
            raise ConfigError(f'no plan entry matches encoder={args.encoder} method={args.method} ipc={args.ipc}')
        for entry in entries:
            records = run_entry(ctx, entry)
            ctx.store.append(records)
            for record in records:
                print(repr(record))
        return 0

    if not args.no_baselines:
        run_baselines(ctx)
    records = run_plan(ctx, expand(ctx.plan))
    failed = sum(not record.ok for record in records)
    logger.info(f'Campaign {ctx.plan.name!r} finished: {len(records)} records, {failed} failed')
    emit_reports(ctx.store, ctx.plan)
    return 0


def main(argv: list[str] | None = None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except TDColerError as e:
        logger.error(f'{type(e).__name__}: {e}')
        return 2
    except KeyboardInterrupt:
        logger.info("Received keyboard interrupt. Shutting down...")
        return 130


if __name__ == "__main__":
    sys.exit(main())
