"""
Phase-plane analysis of the Laplacian equilibria.

An equilibrium with minimum −1 + α exists at λ = l_ε(α)², where l_ε is the
length of the phase-plane trajectory from (−1 + α, 0) to u = 0. The command
samples l_ε and l₀, extracts the folds from their extrema and checks:
- the unregularized maximum α_c ≈ 0.612 with λ_c ≈ 0.350
- quadrature against direct integration of the trajectory
- the logarithmic divergence bounds of l_ε as α approaches ε

Outputs:
- phaseplane.csv: α, l_ε(α), l_ε(α)² and l₀(α)
- phaseplane.json: folds, critical values and the checks
"""
from __future__ import annotations

import argparse
import logging
import textwrap
from typing import Any, Dict, List

from .numerics import (
    GapClosedError,
    critical_alpha,
    divergence_bounds,
    fold_points_from_curve,
    l0,
    l_eps,
    l_eps_ode,
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

logger = logging.getLogger("phaseplane")

DIVERGENCE_ETAS = (1e-2, 1e-3)
DIVERGENCE_SLACK = 0.2
ODE_CHECK_ALPHA = 0.5


def main(args: argparse.Namespace) -> None:
    """Main function for the phaseplane command."""
    resolve_args(args, {})
    out = output_dir(args)
    meta = metadata(args)
    eps, m = args.eps, args.m

    results: Dict[str, Any] = {'passed': False}
    curve = length_curve(eps, m)
    rows: List[Dict[str, Any]] = [
        {'alpha': float(a), 'l': float(length), 'l_squared': float(length**2),
         'l0': l0(float(a))}
        for a, length in zip(curve.alpha, curve.length)
    ]
    write_csv(out / 'phaseplane.csv', meta, ['alpha', 'l', 'l_squared', 'l0'], rows)

    lambda_c1, lambda_c2 = fold_points_from_curve(curve)
    results.update(meta)
    results['alpha_max'] = curve.alpha_max
    results['alpha_min'] = curve.alpha_min
    results['lambda_c1'] = lambda_c1
    results['lambda_c2'] = lambda_c2
    results['lambda_c1_expansion'] = lambda_c1_expansion(eps, m)
    logger.info(f"Folds from the length curve: lambda_c1={lambda_c1}, lambda_c2={lambda_c2}")
    try:
        log_and_check(results, 'alpha_c', critical_alpha(), 'alpha_c', 0.607, 0.617)
        log_and_check(results, 'lambda_c', lambda_c(), 'lambda_c', 0.345, 0.355)
        if ODE_CHECK_ALPHA > eps:
            quad_length = l_eps(ODE_CHECK_ALPHA, eps, m)
            ode_length = l_eps_ode(ODE_CHECK_ALPHA, eps, m)
            log_and_check(
                results, 'ode_quadrature_gap', abs(quad_length - ode_length) / quad_length,
                'relative gap between quadrature and trajectory lengths', 0.0, 1e-8)
        for eta in DIVERGENCE_ETAS:
            if eps == 0:
                break
            try:
                length = l_eps(eps * (1 + eta), eps, m)
            except GapClosedError:
                continue
            lower, upper = divergence_bounds(eta, eps, m)
            results[f'divergence_{eta:g}'] = [lower, length, upper]
            log_and_check(
                results, f'divergence_{eta:g}_lower_ratio', length / lower,
                f'l_eps over its lower bound at eta={eta:g}',
                1 - DIVERGENCE_SLACK, float('inf'))
            log_and_check(
                results, f'divergence_{eta:g}_upper_ratio', length / upper,
                f'l_eps over its upper bound at eta={eta:g}', 0.0, 1 + DIVERGENCE_SLACK)
        results['passed'] = True
    except AssertionError as e:
        logger.error(f"Check failed: {e}")
    finally:
        write_summary(out / 'phaseplane.json', results)

    if args.emit_plots:
        write_plot_script(out, 'phaseplane', [
            Panel('phaseplane.csv', 'alpha', ['l', 'l0'], 'Trajectory length'),
            Panel('phaseplane.csv', 'alpha', ['l_squared'], 'lambda = l^2', logy=True),
        ])


def create_subparser(subparsers: argparse._SubParsersAction) -> None:
    """phaseplane command parser."""
    parser = subparsers.add_parser(
        "phaseplane",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=textwrap.dedent(__doc__),
        help="Sample the phase-plane length curve of the Laplacian problem.",
    )

    add_common_arguments(parser)

    parser.set_defaults(func=main, command='phaseplane')
