"""
Composite asymptotic expansion against the computed upper-branch equilibrium.

The composite joins the flat interior u ≈ −1 + ε, the inner layers around ±x_c
and the boundary layers. It is compared with the large-norm equilibrium found
by continuation at the same (λ, ε, m):
- largest pointwise gap, within 5ε (order 2) or 10ε (order 4)
- contact point from the expansion against the one located on the equilibrium
- squared norm from the asymptotic formula against the computed one

Outputs:
- composite.csv: x, the equilibrium and the composite
- composite.json: the comparisons
"""
from __future__ import annotations

import argparse
import logging
import textwrap
from typing import Any, Dict

import numpy as np

from .numerics import (
    ContinuationConfig,
    Order,
    composite_bilaplacian,
    composite_laplacian,
    contact_point_bilaplacian,
    contact_point_laplacian,
    inner_bilaplacian_shoot,
    inner_laplacian,
    locate_contact_point,
    norm_sq,
    norm_sq_bilaplacian,
    norm_sq_laplacian,
    upper_branch_point,
)
from .run_helpers import (
    Panel,
    add_common_arguments,
    log_and_check,
    metadata,
    model_params,
    output_dir,
    resolve_args,
    write_csv,
    write_plot_script,
    write_summary,
)

logger = logging.getLogger("composite")

# allowed largest pointwise gap, in units of ε
GAP_FACTOR = {Order.SECOND: 5.0, Order.FOURTH: 10.0}
NORM_TOLERANCE = {Order.SECOND: 0.02, Order.FOURTH: 0.03}


def main(args: argparse.Namespace) -> None:
    """Main function for the composite command."""
    resolve_args(args, {'xi_max': 50.0, 'smax': None})
    p = model_params(args)
    out = output_dir(args)
    meta = metadata(args)

    results: Dict[str, Any] = {'passed': False}
    point = upper_branch_point(p, ContinuationConfig(n=args.n), args.smax)
    grid = point.field.grid
    if p.order == Order.SECOND:
        profile = inner_laplacian(p.lam, p.m, args.xi_max)
        composite = composite_laplacian(p.lam, p.eps, p.m, grid, profile)
        x_c_leading = contact_point_laplacian(p.lam, p.eps, p.m, profile.gamma, terms=1)
        x_c_asym = contact_point_laplacian(p.lam, p.eps, p.m, profile.gamma)
        norm_asym = norm_sq_laplacian(p.lam, p.eps, p.m)
    else:
        profile = inner_bilaplacian_shoot(p.lam, p.m, args.xi_max)
        composite = composite_bilaplacian(p.lam, p.eps, p.m, profile, grid)
        x_c_leading = contact_point_bilaplacian(p.lam, p.eps, p.m, profile.xi0, terms=1)
        x_c_asym = contact_point_bilaplacian(p.lam, p.eps, p.m, profile.xi0)
        norm_asym = norm_sq_bilaplacian(p.lam, p.eps, p.m)

    rows = [
        {'x': float(x), 'u_numeric': float(u), 'u_composite': float(c)}
        for x, u, c in zip(grid.nodes, point.field.values, composite.values)
    ]
    write_csv(out / 'composite.csv', meta, ['x', 'u_numeric', 'u_composite'], rows)

    x_c = locate_contact_point(point.field, p.order)
    results.update(meta)
    results['x_c_numeric'] = x_c
    results['x_c_leading'] = x_c_leading
    results['x_c_asymptotic'] = x_c_asym
    results['norm_sq_numeric'] = point.norm_sq
    results['norm_sq_asymptotic'] = norm_asym
    results['norm_sq_composite'] = norm_sq(composite)
    try:
        gap = float(np.max(np.abs(composite.values - point.field.values)))
        log_and_check(
            results, 'max_gap_over_eps', gap / p.eps,
            'largest composite gap in units of eps', 0.0, GAP_FACTOR[p.order])
        log_and_check(
            results, 'norm_relative_error', abs(norm_asym - point.norm_sq) / point.norm_sq,
            'relative error of the norm formula', 0.0, NORM_TOLERANCE[p.order])
        log_and_check(
            results, 'x_c_error', abs(x_c_asym - x_c),
            'contact point error', 0.0, abs(x_c_leading - x_c) + grid.h)
        results['passed'] = True
    except AssertionError as e:
        logger.error(f"Check failed: {e}")
    finally:
        write_summary(out / 'composite.json', results)

    if args.emit_plots:
        write_plot_script(out, 'composite', [
            Panel('composite.csv', 'x', ['u_numeric', 'u_composite'],
                  'Upper-branch equilibrium'),
        ])


def create_subparser(subparsers: argparse._SubParsersAction) -> None:
    """composite command parser."""
    parser = subparsers.add_parser(
        "composite",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=textwrap.dedent(__doc__),
        help="Compare the composite expansion with the computed equilibrium.",
    )

    add_common_arguments(parser)
    parser.add_argument(
        '--xi-max', type=float, default=None, help='Half-width of the inner profile.')
    parser.add_argument(
        '--smax', type=float, default=None,
        help='Largest squared norm traced while looking for the target lambda.')

    parser.set_defaults(func=main, command='composite')
