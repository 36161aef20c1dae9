"""
Fold points of the bifurcation diagram at one ε.

The principal fold λ_c^(1) is where the minimal branch ends; below ε_c a second
fold λ_c^(2) bounds the bistable window from below. Both are found by norm
continuation. For order 2 they are also computed from the extrema of the
phase-plane length l_ε(α) and compared, and λ_c^(1) is compared with its
small-ε expansion.

Outputs:
- folds.csv: the fold values from every route
- folds.json: the same values and the checks
"""
from __future__ import annotations

import argparse
import logging
import textwrap
from typing import Any, Dict, List

from .numerics import (
    ContinuationConfig,
    Order,
    fold_points_from_curve,
    folds_at,
    lambda_c,
    lambda_c1_expansion,
    length_curve,
)
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

logger = logging.getLogger("folds")

ROUTE_TOLERANCE = 1e-3
# the principal-fold expansion is only checked for ε up to this value
EXPANSION_EPS = 0.02


def _relative(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def main(args: argparse.Namespace) -> None:
    """Main function for the folds command."""
    resolve_args(args, {})
    order = Order(args.order)
    out = output_dir(args)
    meta = metadata(args)

    results: Dict[str, Any] = {'passed': False}
    folds = folds_at(args.eps, args.m, order, ContinuationConfig(n=args.n))
    rows: List[Dict[str, Any]] = [
        {'source': 'continuation', 'lambda_c1': folds.lambda_c1, 'lambda_c2': folds.lambda_c2},
    ]
    results.update(meta)
    results['lambda_c1'] = folds.lambda_c1
    results['lambda_c2'] = folds.lambda_c2
    results['bistable'] = folds.bistable
    logger.info(
        f"Continuation folds: lambda_c1={folds.lambda_c1}, lambda_c2={folds.lambda_c2}")

    try:
        if order == Order.SECOND:
            if args.eps == 0:
                curve_c1, curve_c2 = lambda_c(), None
            else:
                curve_c1, curve_c2 = fold_points_from_curve(length_curve(args.eps, args.m))
            rows.append({'source': 'phaseplane', 'lambda_c1': curve_c1, 'lambda_c2': curve_c2})
            results['phaseplane_lambda_c1'] = curve_c1
            results['phaseplane_lambda_c2'] = curve_c2
            assert (curve_c1 is None) == (folds.lambda_c1 is None), (
                "Continuation and phase plane disagree on the principal fold: "
                f"{folds.lambda_c1} vs {curve_c1}.")
            assert (curve_c2 is None) == (folds.lambda_c2 is None), (
                "Continuation and phase plane disagree on the second fold: "
                f"{folds.lambda_c2} vs {curve_c2}.")
            if curve_c1 is not None and folds.lambda_c1 is not None:
                log_and_check(
                    results, 'lambda_c1_route_error', _relative(folds.lambda_c1, curve_c1),
                    'principal fold mismatch between routes', 0.0, ROUTE_TOLERANCE)
            if curve_c2 is not None and folds.lambda_c2 is not None:
                log_and_check(
                    results, 'lambda_c2_route_error', _relative(folds.lambda_c2, curve_c2),
                    'second fold mismatch between routes', 0.0, ROUTE_TOLERANCE)
            if args.eps <= EXPANSION_EPS:
                assert folds.lambda_c1 is not None, "No principal fold found on the branch."
                expansion = lambda_c1_expansion(args.eps, args.m)
                rows.append({'source': 'expansion', 'lambda_c1': expansion, 'lambda_c2': None})
                log_and_check(
                    results, 'lambda_c1_expansion_error',
                    _relative(folds.lambda_c1, expansion),
                    'principal fold mismatch with its expansion', 0.0, ROUTE_TOLERANCE)
        results['passed'] = True
    except AssertionError as e:
        logger.error(f"Check failed: {e}")
    finally:
        write_csv(out / 'folds.csv', meta, ['source', 'lambda_c1', 'lambda_c2'], rows)
        write_summary(out / 'folds.json', results)

    if args.emit_plots:
        write_plot_script(out, 'folds', [
            Panel('folds.csv', 'source', ['lambda_c1', 'lambda_c2'], 'Fold values by route'),
        ])


def create_subparser(subparsers: argparse._SubParsersAction) -> None:
    """folds command parser."""
    parser = subparsers.add_parser(
        "folds",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=textwrap.dedent(__doc__),
        help="Locate the folds of the bifurcation diagram.",
    )

    add_common_arguments(parser)

    parser.set_defaults(func=main, command='folds')
