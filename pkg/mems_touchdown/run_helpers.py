"""Argument, configuration and artifact helpers shared by the subcommands."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, NamedTuple, Sequence

from .numerics import ModelParams, Order, Scheme, ValidationError, default_grid_size

logger = logging.getLogger("run_helpers")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _float_list(text: str) -> List[float]:
    return [float(item) for item in text.split(',') if item.strip()]


def _flag(text: str) -> bool:
    return text.strip().lower() in ('1', 'true', 'yes', 'on')


# Converters for values read from a config file, keyed by argparse dest
CONVERTERS: Dict[str, Callable[[str], Any]] = {
    'order': int,
    'lam': float,
    'eps': float,
    'eps_list': _float_list,
    'm': int,
    'n': int,
    'out': str,
    'emit_plots': _flag,
    'smax': float,
    'ds0': float,
    't_end': float,
    'dt0': float,
    'scheme': Scheme,
    'xi_max': float,
    'workers': int,
}

# Config-file spellings that differ from the argparse dest
ALIASES = {'lambda': 'lam'}

COMMON_DEFAULTS: Dict[str, Any] = {
    'order': 2,
    'm': 4,
    'eps': 0.01,
    'n': None,
    'out': 'out',
    'emit_plots': False,
}


def add_common_arguments(parser: argparse.ArgumentParser, eps_list: bool = False) -> None:
    """
    Add the flags shared by every subcommand.

    All defaults are None so that config-file values can be told apart from
    explicit flags; :func:`resolve_args` fills in the rest.

    :param parser: The subcommand parser.
    :param eps_list: Take ``--eps`` as a comma-separated list.
    """
    parser.add_argument(
        '--order', type=int, choices=(2, 4), default=None,
        help='Operator order: 2 for the Laplacian, 4 for the bi-Laplacian.')
    parser.add_argument(
        '--lambda', dest='lam', type=float, default=None, help='The voltage parameter.')
    if eps_list:
        parser.add_argument(
            '--eps', dest='eps_list', type=_float_list, default=None,
            help='Comma-separated regularization parameters.')
    else:
        parser.add_argument(
            '--eps', type=float, default=None, help='The regularization parameter.')
    parser.add_argument('--m', type=int, default=None, help='The regularization exponent.')
    parser.add_argument(
        '--n', type=int, default=None,
        help='Interior grid nodes. Defaults to a size resolving the boundary layers.')
    parser.add_argument(
        '--out', default=None, help='Directory for the CSV, JSON and plot outputs.')
    parser.add_argument('--config', default=None, help='A key = value configuration file.')
    parser.add_argument(
        '--emit-plots', action='store_true', default=None,
        help='Also write a matplotlib script that plots the CSV outputs.')


def load_config(path: str | Path) -> Dict[str, Any]:
    """
    Read a flat ``key = value`` configuration file.

    Blank lines and lines starting with ``#`` are skipped. Keys may use dashes
    or underscores and are converted to argparse dests.

    :raises ValidationError: On a malformed line, an unknown key or a bad value.
    :return: The converted values keyed by dest.
    """
    values: Dict[str, Any] = {}
    with open(path) as config_file:
        for number, line in enumerate(config_file, start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            if '=' not in line:
                raise ValidationError(f"{path}:{number}: expected 'key = value', got {line!r}")
            key, raw = (part.strip() for part in line.split('=', 1))
            key = key.lstrip('-').replace('-', '_')
            key = ALIASES.get(key, key)
            if key not in CONVERTERS:
                raise ValidationError(f"{path}:{number}: unknown key {key!r}")
            try:
                values[key] = CONVERTERS[key](raw)
            except ValueError as e:
                raise ValidationError(f"{path}:{number}: bad value for {key}: {e}") from e
    return values


def resolve_args(args: argparse.Namespace, defaults: Dict[str, Any]) -> argparse.Namespace:
    """
    Fill unset arguments from the config file, then from the defaults.

    Explicit flags win over the config file, which wins over the defaults.
    """
    from_file = load_config(args.config) if getattr(args, 'config', None) else {}
    if 'eps' in from_file and 'eps_list' in defaults:
        from_file['eps_list'] = [from_file.pop('eps')]
    for key, value in {**COMMON_DEFAULTS, **defaults}.items():
        if getattr(args, key, None) is None:
            setattr(args, key, from_file.get(key, value))
    for key, value in from_file.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if args.order not in (2, 4):
        raise ValidationError(f"order must be 2 or 4, got {args.order}")
    return args


def model_params(args: argparse.Namespace, lam: float | None = None) -> ModelParams:
    """Validated model parameters from resolved arguments."""
    value = args.lam if lam is None else lam
    if value is None:
        raise ValidationError("--lambda is required for this command")
    params = ModelParams(float(value), float(args.eps), int(args.m), Order(args.order))
    return params.validate()


def grid_size(args: argparse.Namespace, eps: float | None = None) -> int:
    """The ``--n`` value, or the default size for the run's ε and order."""
    if args.n is not None:
        return int(args.n)
    return default_grid_size(args.eps if eps is None else eps, Order(args.order))


def output_dir(args: argparse.Namespace) -> Path:
    """Create and return the output directory."""
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _format(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Order):
        return str(int(value))
    if isinstance(value, (list, tuple)):
        return ",".join(_format(item) for item in value)
    return str(value)


def metadata(args: argparse.Namespace) -> Dict[str, Any]:
    """The full parameter set of a run, for the CSV comment row and JSON summary."""
    skip = {'func', 'config', 'out', 'emit_plots', 'command', 'debug'}
    return {key: value for key, value in sorted(vars(args).items()) if key not in skip}


def write_csv(
    path: Path,
    meta: Dict[str, Any],
    fieldnames: Sequence[str],
    rows: Iterable[Dict[str, Any]],
) -> Path:
    """
    Write rows under a ``# key=value`` metadata line and a header.

    Floats are written with ``repr`` so identical runs give identical files.
    """
    with open(path, 'w', newline='', encoding='utf-8') as csvfile:
        csvfile.write(
            '# ' + ' '.join(f"{key}={_format(value)}" for key, value in meta.items()) + '\n')
        writer = csv.DictWriter(csvfile, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _format(value) for key, value in row.items()})
    logger.info(f"Results saved to {path}")
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    if isinstance(value, Order):
        return int(value)
    if hasattr(value, 'item'):  # numpy scalars
        return value.item()
    return value


def write_summary(path: Path, results: Dict[str, Any]) -> Path:
    """Write scalar results as JSON with sorted keys."""
    with open(path, 'w', encoding='utf-8') as jsonfile:
        json.dump(_jsonable(results), jsonfile, sort_keys=True, indent=2)
        jsonfile.write('\n')
    logger.info(f"Summary saved to {path}")
    return path


def log_and_check(
    results: Dict[str, Any],
    key: str,
    value: float,
    name: str,
    lo: float,
    hi: float,
) -> None:
    """Log a value, record it and assert it lies in [lo, hi]."""
    logger.info(f"Computed {name}: {value:.6g}")
    results[key] = value
    assert lo <= value <= hi, (
        f"{name.capitalize()} of {value:.6g} is outside the expected range "
        f"[{lo:.6g}, {hi:.6g}].")


class Panel(NamedTuple):
    """
    One axes of a generated plot script.

    :param csv_name: The CSV file the panel reads, relative to the script.
    :param x: The column on the horizontal axis.
    :param ys: The columns drawn as lines.
    :param title: The axes title.
    :param logx: Logarithmic horizontal axis.
    :param logy: Logarithmic vertical axis.
    :param group: A column whose distinct values are drawn as separate lines.
    """

    csv_name: str
    x: str
    ys: Sequence[str]
    title: str
    logx: bool = False
    logy: bool = False
    group: str | None = None


PLOT_TEMPLATE = '''\
"""Plot the {command} outputs. Generated by mems_touchdown."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).parent
PANELS = {panels!r}


def read_rows(name):
    with open(HERE / name, newline="") as csvfile:
        lines = [line for line in csvfile if not line.startswith("#")]
    return list(csv.DictReader(lines))


def as_float(text):
    return float(text) if text not in ("", "None") else float("nan")


fig, axes = plt.subplots(1, len(PANELS), figsize=(5 * len(PANELS), 4), squeeze=False)
for ax, (csv_name, x, ys, title, logx, logy, group) in zip(axes[0], PANELS):
    rows = read_rows(csv_name)
    groups = sorted({{row[group] for row in rows}}, key=as_float) if group else [None]
    for key in groups:
        chosen = [row for row in rows if group is None or row[group] == key]
        for y in ys:
            label = y if key is None else f"{{group}}={{key}}"
            try:
                xs = [as_float(r[x]) for r in chosen]
            except ValueError:
                xs = list(range(len(chosen)))
                ax.set_xticks(xs, [r[x] for r in chosen])
            ax.plot(xs, [as_float(r[y]) for r in chosen], marker=".", label=label)
    ax.set_xlabel(x)
    ax.set_title(title)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    if len(ys) > 1 or (group and len(groups) <= 10):
        ax.legend()
fig.tight_layout()
fig.savefig(HERE / "{command}.png", dpi=150)
'''


def write_plot_script(out: Path, command: str, panels: Sequence[Panel]) -> Path:
    """Write ``plot_<command>.py``, a matplotlib script that renders the CSV outputs."""
    path = out / f"plot_{command}.py"
    path.write_text(
        PLOT_TEMPLATE.format(command=command, panels=[tuple(p) for p in panels]),
        encoding='utf-8')
    logger.info(f"Plot script saved to {path}")
    return path
