"""
Fold positions over a list of ε and the scaling of the second fold.

Each ε is traced independently in a worker process. The second fold vanishes
like λ_c^(2) ~ ε for the Laplacian and ε^(3/2) for the bi-Laplacian, so the
fitted slope of log λ_c^(2) against log ε should be close to 1 and 3/2.

Outputs:
- sweep.csv: ε with both folds
- sweep.json: the fitted exponent and the check
"""
from __future__ import annotations

import argparse
import logging
import os
import textwrap
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, NamedTuple

from .numerics import ContinuationConfig, Order, ValidationError, fold_scaling_fit, folds_at
from .run_helpers import (
    Panel,
    add_common_arguments,
    log_and_check,
    metadata,
    output_dir,
    resolve_args,
    write_csv,
    write_plot_script,
    write_summary,
)

logger = logging.getLogger("sweep")

EXPECTED_SLOPE = {Order.SECOND: 1.0, Order.FOURTH: 1.5}
SLOPE_TOLERANCE = 0.1
DEFAULT_EPS = [0.005, 0.01, 0.02, 0.04]


class SweepTask(NamedTuple):
    """
    One independent continuation of a sweep.

    :param eps: The regularization parameter.
    :param m: The regularization exponent.
    :param order: The operator order.
    :param n: Interior node count, or None for the default size at this ε.
    :param ds0: Initial norm step.
    """

    eps: float
    m: int
    order: Order
    n: int | None
    ds0: float


def run_task(task: SweepTask) -> Dict[str, Any]:
    """Trace one branch and return its folds as a CSV row."""
    folds = folds_at(task.eps, task.m, task.order, ContinuationConfig(n=task.n, ds0=task.ds0))
    return {'eps': task.eps, 'lambda_c1': folds.lambda_c1, 'lambda_c2': folds.lambda_c2}


def default_workers(count: int) -> int:
    """One worker per task, up to the number of CPUs."""
    return max(1, min(count, os.cpu_count() or 1))


def sweep(tasks: List[SweepTask], workers: int) -> List[Dict[str, Any]]:
    """Run the tasks, in worker processes when ``workers`` > 1, keeping their order."""
    if workers <= 1:
        return [run_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(run_task, tasks))


def main(args: argparse.Namespace) -> None:
    """Main function for the sweep command."""
    resolve_args(args, {'eps_list': DEFAULT_EPS, 'workers': None, 'ds0': 0.01})
    order = Order(args.order)
    if any(eps <= 0 for eps in args.eps_list):
        raise ValidationError("every eps of a sweep must be positive")
    tasks = [SweepTask(float(eps), args.m, order, args.n, args.ds0)
             for eps in sorted(args.eps_list)]
    if args.workers is None:
        args.workers = default_workers(len(tasks))
    if args.workers < 1:
        raise ValidationError(f"workers must be at least 1, got {args.workers}")
    out = output_dir(args)
    meta = metadata(args)
    meta.pop('eps', None)
    meta.pop('lam', None)

    logger.info(f"Sweeping {len(tasks)} values of eps with {args.workers} worker(s)")
    rows = sweep(tasks, args.workers)
    write_csv(out / 'sweep.csv', meta, ['eps', 'lambda_c1', 'lambda_c2'], rows)

    results: Dict[str, Any] = {'passed': False}
    results.update(meta)
    results['folds'] = rows
    try:
        table = [(row['eps'], row['lambda_c2']) for row in rows
                 if row['lambda_c2'] is not None]
        assert len(table) >= 2, "Fewer than two values of eps have a second fold."
        slope, intercept = fold_scaling_fit(table)
        results['intercept'] = intercept
        expected = EXPECTED_SLOPE[order]
        log_and_check(
            results, 'slope', slope, 'second fold exponent',
            expected - SLOPE_TOLERANCE, expected + SLOPE_TOLERANCE)
        results['passed'] = True
    except AssertionError as e:
        logger.error(f"Check failed: {e}")
    finally:
        write_summary(out / 'sweep.json', results)

    if args.emit_plots:
        write_plot_script(out, 'sweep', [
            Panel('sweep.csv', 'eps', ['lambda_c2'], 'Second fold', logx=True, logy=True),
            Panel('sweep.csv', 'eps', ['lambda_c1'], 'Principal fold', logx=True),
        ])


def create_subparser(subparsers: argparse._SubParsersAction) -> None:
    """sweep command parser."""
    parser = subparsers.add_parser(
        "sweep",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=textwrap.dedent(__doc__),
        help="Locate the folds over several eps and fit the second-fold exponent.",
    )

    add_common_arguments(parser, eps_list=True)
    parser.add_argument(
        '--workers', type=int, default=None,
        help='Worker processes, one continuation each; by default one per CPU.')
    parser.add_argument('--ds0', type=float, default=None, help='Initial norm step.')

    parser.set_defaults(func=main, command='sweep')
