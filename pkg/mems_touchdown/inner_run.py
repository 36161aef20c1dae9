"""
Inner transition-layer profile and its matching constants.

Order 2 integrates the first integral of v″ = λ(1/v² − 1/v^m) and extrapolates
the far-field constant γ. Order 4 shoots along the unstable manifold of v = 1
for the quadratically growing profile of −v⁗ = λ(1/v² − 1/v^m) and fits the
translation constant ξ₀ (about −3.77).

Outputs:
- inner.csv: ξ and v(ξ)
- inner_coefficients.json: every named constant of the matched expansion
- inner.json: the profile constants and the checks
"""
from __future__ import annotations

import argparse
import logging
import textwrap
from typing import Any, Dict

import numpy as np

from .numerics import (
    ExpansionCoeffsB,
    ExpansionCoeffsL,
    InnerProfile,
    Order,
    first_integral_residual,
    inner_bilaplacian_shoot,
    inner_laplacian,
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

logger = logging.getLogger("inner")

RESIDUAL_TOLERANCE = 1e-8
XI0_RANGE = (-3.82, -3.72)


def coefficient_table(profile: InnerProfile) -> Dict[str, Any]:
    """All matching constants derived from a profile, keyed by name."""
    coeffs: ExpansionCoeffsL | ExpansionCoeffsB
    if profile.order == Order.SECOND:
        assert profile.gamma is not None
        coeffs = ExpansionCoeffsL(profile.lam, profile.m, profile.gamma)
        names = ['lambda0c', 'lambda1c', 'lambda2c', 'a_half', 'a1', 'gamma']
    else:
        assert profile.xi0 is not None
        coeffs = ExpansionCoeffsB(profile.lam, profile.m, profile.xi0)
        names = ['lambda0c', 'lambda1c', 'lambda2c', 'alpha1', 'alpha2', 'beta1',
                 'b0', 'a1', 'xi0']
    table = {name: getattr(coeffs, name) for name in names}
    for name in ('b0', 'c0', 'd0'):
        value = getattr(profile, name)
        if value is not None:
            table[f'profile_{name}'] = value
    return table


def main(args: argparse.Namespace) -> None:
    """Main function for the inner command."""
    resolve_args(args, {'xi_max': 50.0})
    p = model_params(args)
    out = output_dir(args)
    meta = metadata(args)
    meta.pop('eps', None)

    results: Dict[str, Any] = {'passed': False}
    if p.order == Order.SECOND:
        profile = inner_laplacian(p.lam, p.m, args.xi_max)
    else:
        profile = inner_bilaplacian_shoot(p.lam, p.m, args.xi_max)
    rows = [{'xi': float(x), 'v': float(v)} for x, v in zip(profile.xi, profile.v)]
    write_csv(out / 'inner.csv', meta, ['xi', 'v'], rows)
    table = coefficient_table(profile)
    write_summary(out / 'inner_coefficients.json', {**meta, **table})

    results.update(meta)
    results.update(table)
    results['min_v'] = float(np.min(profile.v))
    try:
        log_and_check(
            results, 'first_integral_residual', first_integral_residual(profile),
            'first integral drift', 0.0, RESIDUAL_TOLERANCE)
        if p.order == Order.FOURTH:
            assert profile.xi0 is not None
            log_and_check(results, 'xi0', profile.xi0, 'xi0', *XI0_RANGE)
            spacing = float(profile.xi[1] - profile.xi[0])
            log_and_check(
                results, 'argmin_xi', float(profile.xi[int(np.argmin(profile.v))]),
                'position of the profile minimum', -spacing, spacing)
        results['passed'] = True
    except AssertionError as e:
        logger.error(f"Check failed: {e}")
    finally:
        write_summary(out / 'inner.json', results)

    if args.emit_plots:
        write_plot_script(out, 'inner', [Panel('inner.csv', 'xi', ['v'], 'Inner profile')])


def create_subparser(subparsers: argparse._SubParsersAction) -> None:
    """inner command parser."""
    parser = subparsers.add_parser(
        "inner",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=textwrap.dedent(__doc__),
        help="Compute the inner layer profile and its matching constants.",
    )

    add_common_arguments(parser)
    parser.add_argument(
        '--xi-max', type=float, default=None, help='Half-width of the computed profile.')

    parser.set_defaults(func=main, command='inner')
