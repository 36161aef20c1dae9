"""
Critical regularization ε_c where the two folds merge.

Below ε_c the bifurcation diagram has a bistable window between two folds;
above it λ(s) is monotone. ε_c is found by bisecting on "the branch has two
folds", and the predicate is re-evaluated at 0.9·ε_c and 1.1·ε_c, where it must
flip. For order 2 the same bisection is repeated on the phase-plane length
curve as a cross-check.

Outputs:
- epscrit.csv: ε_c from every route
- epscrit.json: the same values and the checks
"""
from __future__ import annotations

import argparse
import logging
import textwrap
from typing import Any, Dict, List

from .numerics import (
    BracketFailure,
    ContinuationConfig,
    Order,
    find_eps_c,
    has_two_folds,
    switching_window,
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

logger = logging.getLogger("epscrit")

BRACKET_WIDTH = 1e-3
FLIP_MARGIN = 0.1


def phaseplane_eps_c(m: int, low: float = 1e-3, high: float = 0.5,
                     width: float = BRACKET_WIDTH) -> float:
    """
    ε_c from the extrema of l_ε(α), by bisection on the existence of a local minimum.

    :raises BracketFailure: If the window is not open at ``low`` and closed at ``high``.
    """
    if switching_window(low, m) is None or switching_window(high, m) is not None:
        raise BracketFailure(f"no change of the switching window in ({low}, {high})")
    while high - low >= width:
        mid = 0.5 * (low + high)
        if switching_window(mid, m) is not None:
            low = mid
        else:
            high = mid
    return 0.5 * (low + high)


def verify_flip(eps_c: float, m: int, order: Order,
                config: ContinuationConfig | None = None) -> tuple[bool, bool]:
    """
    Re-evaluate the two-fold predicate on either side of ε_c.

    :raises BracketFailure: Unless the branch is bistable at (1 − margin)·ε_c and
        monotone at (1 + margin)·ε_c.
    :return: The predicate below and above ε_c.
    """
    below = has_two_folds((1 - FLIP_MARGIN) * eps_c, m, order, config)
    above = has_two_folds((1 + FLIP_MARGIN) * eps_c, m, order, config)
    logger.info(f"two folds at {1 - FLIP_MARGIN:g} eps_c: {below}, "
                f"at {1 + FLIP_MARGIN:g} eps_c: {above}")
    if not below or above:
        raise BracketFailure(
            f"two-fold predicate does not flip across eps_c={eps_c:.6g} "
            f"(below: {below}, above: {above})")
    return below, above


def main(args: argparse.Namespace) -> None:
    """Main function for the epscrit command."""
    resolve_args(args, {})
    order = Order(args.order)
    out = output_dir(args)
    meta = metadata(args)
    meta.pop('eps', None)
    meta.pop('lam', None)

    results: Dict[str, Any] = {'passed': False}
    config = ContinuationConfig(n=args.n)
    eps_c = find_eps_c(args.m, order, config, width=BRACKET_WIDTH)
    logger.info(f"eps_c = {eps_c:.6g} from continuation")
    rows: List[Dict[str, Any]] = [{'source': 'continuation', 'eps_c': eps_c}]
    results.update(meta)
    results['eps_c'] = eps_c
    try:
        results['two_folds_below'], results['two_folds_above'] = verify_flip(
            eps_c, args.m, order, config)
        if order == Order.SECOND:
            curve_eps_c = phaseplane_eps_c(args.m)
            rows.append({'source': 'phaseplane', 'eps_c': curve_eps_c})
            results['phaseplane_eps_c'] = curve_eps_c
            log_and_check(
                results, 'eps_c_route_gap', abs(eps_c - curve_eps_c),
                'eps_c gap between routes', 0.0, 2 * BRACKET_WIDTH)
        results['passed'] = True
    except AssertionError as e:
        logger.error(f"Check failed: {e}")
    finally:
        write_csv(out / 'epscrit.csv', meta, ['source', 'eps_c'], rows)
        write_summary(out / 'epscrit.json', results)

    if args.emit_plots:
        write_plot_script(out, 'epscrit', [
            Panel('epscrit.csv', 'source', ['eps_c'], 'Critical regularization by route'),
        ])


def create_subparser(subparsers: argparse._SubParsersAction) -> None:
    """epscrit command parser."""
    parser = subparsers.add_parser(
        "epscrit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=textwrap.dedent(__doc__),
        help="Find the regularization at which the bistable window closes.",
    )

    add_common_arguments(parser)

    parser.set_defaults(func=main, command='epscrit')
