"""
Time evolution from rest.

Integrates u_t = Δu − λf(u) (order 2) or u_t = −Δ²u − λf(u) (order 4) from
u = 0 with adaptive semi-implicit steps until the run reaches a steady state
or --t-end. --scheme imex (default) keeps the force explicit; after touchdown
its steps are limited to about ε³/(λ(m − 2)), so runs that should spread and
pin use --scheme linearized, which moves the force Jacobian into the implicit
solve.

Outputs:
- evolve.csv: time, energy, extreme values and touchdown fronts per snapshot
- evolve_snapshots.csv: the recorded deflection profiles
- evolve.json: touchdown time and points, step count and the checks below

The run checks that no accepted step raised the energy and, for order 2,
that every snapshot respects the comparison bounds. The bounds are stepped
with the accepted step sizes and scheme of the run, and the exact comparison
ODE is written next to them.
"""
from __future__ import annotations

import argparse
import logging
import math
import textwrap
from typing import Any, Dict

import numpy as np

from .numerics import (
    EvolveConfig,
    Field,
    Grid,
    Order,
    Scheme,
    Trajectory,
    comparison_series,
    comparison_tolerance,
    evolve,
    lower_bound,
    stepped_comparison_series,
)
from .run_helpers import (
    Panel,
    add_common_arguments,
    grid_size,
    log_and_check,
    metadata,
    model_params,
    output_dir,
    resolve_args,
    write_csv,
    write_plot_script,
    write_summary,
)

logger = logging.getLogger("evolve")

# profiles are thinned to about this many points per snapshot in the CSV
SNAPSHOT_POINTS = 1000


def trajectory_rows(traj: Trajectory, bounds: tuple[Any, Any] | None,
                    ode_bounds: tuple[Any, Any] | None = None) -> list[Dict[str, Any]]:
    """One row per recorded snapshot."""
    rows = []
    highs = traj.max_u()
    for i, t in enumerate(traj.times):
        row = {
            't': t,
            'energy': traj.energies[i],
            'min_u': traj.snapshots[i].min(),
            'max_u': highs[i],
            'front_left': traj.front_left[i],
            'front_right': traj.front_right[i],
        }
        if bounds is not None:
            row['lower_bound'] = float(bounds[0][i])
            row['upper_bound'] = float(bounds[1][i])
        if ode_bounds is not None:
            row['ode_lower_bound'] = float(ode_bounds[0][i])
            row['ode_upper_bound'] = float(ode_bounds[1][i])
        rows.append(row)
    return rows


def snapshot_rows(traj: Trajectory) -> list[Dict[str, Any]]:
    """Long-format (t, x, u) rows of the thinned snapshots."""
    rows = []
    for t, snap in zip(traj.times, traj.snapshots):
        stride = max(1, snap.grid.n // SNAPSHOT_POINTS)
        for x, u in zip(snap.x[::stride], snap.values[::stride]):
            rows.append({'t': t, 'x': float(x), 'u': float(u)})
    return rows


def front_retreat(traj: Trajectory) -> float:
    """Largest inward move of the right front between consecutive snapshots."""
    fronts = [f for f in traj.front_right if math.isfinite(f)]
    if len(fronts) < 2:
        return 0.0
    return float(max(0.0, -np.min(np.diff(fronts))))


def comparison_margin(traj: Trajectory, bounds: tuple[Any, Any]) -> float:
    """
    Smallest distance of the snapshots inside the comparison bounds.

    Each gap is measured beyond the accuracy of the bound it is taken against,
    so a non-negative result means every snapshot lies between the bounds.
    """
    low, high = (np.asarray(b, dtype=float) for b in bounds)
    lows = np.asarray(traj.min_u()) - low + comparison_tolerance(low)
    highs = high - np.asarray(traj.max_u()) + comparison_tolerance(high)
    return float(min(lows.min(), highs.min()))


def main(args: argparse.Namespace) -> None:
    """Main function for the evolve command."""
    resolve_args(args, {'lam': None, 't_end': 200.0, 'dt0': 1e-4, 'scheme': Scheme.IMEX})
    p = model_params(args)
    grid = Grid.uniform(grid_size(args))
    scheme = Scheme(args.scheme)
    args.scheme = scheme.value
    config = EvolveConfig(dt0=args.dt0, t_end=args.t_end, scheme=scheme).validate()
    out = output_dir(args)
    meta = metadata(args)
    logger.info(f"Evolving {p} on {grid} with the {scheme.value} scheme")

    results: Dict[str, Any] = {'passed': False}
    traj = evolve(Field.zeros(grid), p, config)
    bounds = ode_bounds = None
    if p.order == Order.SECOND:
        bounds = stepped_comparison_series(traj.snapshots[0], p, traj, scheme)
        ode_bounds = comparison_series(traj.snapshots[0], p, traj.times)

    fieldnames = ['t', 'energy', 'min_u', 'max_u', 'front_left', 'front_right']
    if bounds is not None:
        fieldnames += ['lower_bound', 'upper_bound', 'ode_lower_bound', 'ode_upper_bound']
    write_csv(out / 'evolve.csv', meta, fieldnames, trajectory_rows(traj, bounds, ode_bounds))
    write_csv(out / 'evolve_snapshots.csv', meta, ['t', 'x', 'u'], snapshot_rows(traj))

    results.update(meta)
    results['scheme'] = scheme.value
    results['steps'] = traj.steps
    results['steady'] = traj.steady
    results['final_time'] = traj.times[-1]
    results['final_min_u'] = traj.final.min()
    results['touchdown_time'] = traj.touchdown_time
    results['touchdown_points'] = list(traj.touchdown_points or ())
    try:
        log_and_check(
            results, 'max_energy_rise', traj.max_energy_rise,
            'largest relative energy rise', -math.inf, config.energy_tol)
        log_and_check(
            results, 'front_retreat', front_retreat(traj),
            'largest front retreat', 0.0, 2 * grid.h)
        if bounds is not None:
            log_and_check(
                results, 'lower_bound_margin',
                min(traj.min_u()) - lower_bound(traj.snapshots[0], p),
                'margin above the pointwise lower bound', -1e-8, math.inf)
            log_and_check(
                results, 'comparison_margin', comparison_margin(traj, bounds),
                'comparison bound margin', 0.0, math.inf)
        logger.info("Evolution checks passed")
        results['passed'] = True
    except AssertionError as e:
        logger.error(f"Check failed: {e}")
    finally:
        write_summary(out / 'evolve.json', results)

    if args.emit_plots:
        write_plot_script(out, 'evolve', [
            Panel('evolve_snapshots.csv', 'x', ['u'], 'Deflection snapshots', group='t'),
            Panel('evolve.csv', 't', ['front_left', 'front_right'], 'Touchdown fronts'),
            Panel('evolve.csv', 't', ['min_u'], 'Minimum deflection'),
        ])


def create_subparser(subparsers: argparse._SubParsersAction) -> None:
    """evolve command parser."""
    parser = subparsers.add_parser(
        "evolve",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=textwrap.dedent(__doc__),
        help="Integrate the gradient flow from rest and track touchdown.",
    )

    add_common_arguments(parser)
    parser.add_argument('--t-end', type=float, default=None, help='Final time.')
    parser.add_argument('--dt0', type=float, default=None, help='Initial time step.')
    parser.add_argument(
        '--scheme', choices=[s.value for s in Scheme], default=None,
        help='Semi-implicit scheme, imex by default.')

    parser.set_defaults(func=main, command='evolve')
