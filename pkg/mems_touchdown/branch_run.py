"""
Bifurcation diagram by norm continuation.

Traces the equilibrium branch λ(s), s = ‖u‖₂², from the trivial solution up to
--smax and reports its folds.

Outputs:
- branch.csv: s, λ, min u and the stability hint of every branch point
- branch.json: fold values and the checks below

For order 2 the branch is cross-checked against the phase plane at points
past the principal fold: λ must equal l_ε(1 + min u)², and near α = ε the norm
must match that of the trajectory with the same λ.
"""
from __future__ import annotations

import argparse
import logging
import textwrap
from typing import Any, Dict, List

import numpy as np

from .numerics import (
    BracketFailure,
    Branch,
    ContinuationConfig,
    Order,
    find_folds,
    gap_for_lambda,
    l0,
    l_eps,
    length_curve,
    trace_branch,
    trajectory_norm_sq,
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

logger = logging.getLogger("branch")

ROUTE_SAMPLES = 20
ROUTE_TOLERANCE = 5e-3


def route_mismatch(branch: Branch, start: int) -> float:
    """
    Largest relative mismatch with the phase plane over points from ``start`` onwards.

    Points with 1 + min u ≥ 2ε are compared by λ against l_ε(α)². Closer to
    α = ε that comparison is ill-conditioned, so λ is inverted for the gap on
    the matching piece of the length curve and the norms are compared instead.
    At most ROUTE_SAMPLES evenly spaced points are compared.
    """
    picks = np.unique(np.linspace(start, len(branch.points) - 1, ROUTE_SAMPLES).astype(int))
    curve = length_curve(branch.eps, branch.m) if branch.eps > 0 else None
    worst = 0.0
    for i in picks:
        point = branch.points[int(i)]
        if curve is None:
            gap = abs(l0(point.alpha) ** 2 - point.lam) / point.lam
        elif point.alpha >= 2 * branch.eps:
            gap = abs(l_eps(point.alpha, branch.eps, branch.m) ** 2 - point.lam) / point.lam
        else:
            upper = curve.alpha_min is None or point.alpha < curve.alpha_min
            try:
                alpha = gap_for_lambda(point.lam, curve, upper)
            except BracketFailure as e:
                logger.debug(f"Skipping s={point.norm_sq:.6g}: {e}")
                continue
            s = trajectory_norm_sq(alpha, branch.eps, branch.m)
            gap = abs(s - point.norm_sq) / point.norm_sq
        worst = max(worst, gap)
    return worst


def main(args: argparse.Namespace) -> None:
    """Main function for the branch command."""
    resolve_args(args, {'smax': None, 'ds0': 0.01})
    order = Order(args.order)
    config = ContinuationConfig(n=args.n, ds0=args.ds0, stability=True)
    out = output_dir(args)
    meta = metadata(args)

    results: Dict[str, Any] = {'passed': False}
    branch = trace_branch(args.eps, args.m, order, args.smax, config=config)
    folds = find_folds(branch)
    rows: List[Dict[str, Any]] = [
        {
            's': pt.norm_sq,
            'lambda': pt.lam,
            'min_u': pt.min_u,
            'stability': pt.stability.value,
        }
        for pt in branch.points
    ]
    write_csv(out / 'branch.csv', meta, ['s', 'lambda', 'min_u', 'stability'], rows)

    results.update(meta)
    results['points'] = len(branch.points)
    results['lambda_c1'] = folds.lambda_c1
    results['lambda_c2'] = folds.lambda_c2
    results['s_c1'] = folds.s_c1
    results['s_c2'] = folds.s_c2
    logger.info(f"Folds: lambda_c1={folds.lambda_c1}, lambda_c2={folds.lambda_c2}")
    try:
        if order == Order.SECOND and folds.s_c1 is not None:
            start = int(np.searchsorted(branch.norms(), folds.s_c1))
            log_and_check(
                results, 'route_mismatch', route_mismatch(branch, start),
                'phase-plane mismatch past the fold', 0.0, ROUTE_TOLERANCE)
        results['passed'] = True
    except AssertionError as e:
        logger.error(f"Check failed: {e}")
    finally:
        write_summary(out / 'branch.json', results)

    if args.emit_plots:
        write_plot_script(out, 'branch', [
            Panel('branch.csv', 'lambda', ['s'], 'Bifurcation diagram'),
            Panel('branch.csv', 'lambda', ['min_u'], 'Minimum deflection'),
        ])


def create_subparser(subparsers: argparse._SubParsersAction) -> None:
    """branch command parser."""
    parser = subparsers.add_parser(
        "branch",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=textwrap.dedent(__doc__),
        help="Trace the equilibrium branch and report its folds.",
    )

    add_common_arguments(parser)
    parser.add_argument(
        '--smax', type=float, default=None,
        help='Final squared norm; defaults to 0.98 of the flat-state norm.')
    parser.add_argument('--ds0', type=float, default=None, help='Initial norm step.')

    parser.set_defaults(func=main, command='branch')
