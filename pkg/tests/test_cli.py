import json
import logging
from pathlib import Path

import pytest

from mems_touchdown import cli, epscrit_run, phaseplane_run, sweep_run
from mems_touchdown.numerics import NoConvergence, Order, ValidationError
from mems_touchdown.run_helpers import load_config, resolve_args


def run(*argv: str) -> int:
    return cli.main(list(argv))


def test_version(capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as excinfo:
        run('--version')
    assert excinfo.value.code == 0
    assert capsys.readouterr().out.strip()


def test_every_subcommand_is_registered() -> None:
    parser = cli.build_argparser()
    for command in ('evolve', 'branch', 'folds', 'epscrit', 'phaseplane', 'inner',
                    'composite', 'sweep'):
        args = parser.parse_args([command])
        assert args.command == command


def test_missing_lambda_is_a_validation_error(tmp_path: Path) -> None:
    assert run('evolve', '--eps', '0.1', '--out', str(tmp_path)) == 2
    assert not (tmp_path / 'evolve.csv').exists()


def test_bad_order_in_config_is_a_validation_error(tmp_path: Path) -> None:
    config = tmp_path / 'run.cfg'
    config.write_text('order = 3\n')
    assert run('phaseplane', '--config', str(config), '--out', str(tmp_path)) == 2


def test_invalid_model_parameters(tmp_path: Path) -> None:
    assert run('inner', '--lambda', '-1', '--out', str(tmp_path)) == 2
    assert run('sweep', '--eps', '0.01,-0.02', '--out', str(tmp_path)) == 2


def test_numerical_failure_exit_code(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    def fail(*_args: object, **_kwargs: object) -> None:
        raise NoConvergence("quadrature did not converge")

    monkeypatch.setattr(phaseplane_run, 'length_curve', fail)
    assert run('phaseplane', '--eps', '0.1', '--out', str(tmp_path)) == 3


def test_config_file_parsing(tmp_path: Path) -> None:
    config = tmp_path / 'run.cfg'
    config.write_text(
        '# comment\n'
        '\n'
        'lambda = 2.5\n'
        '--t-end = 10\n'
        'emit_plots = yes\n'
        'eps_list = 0.01, 0.02\n')
    assert load_config(config) == {
        'lam': 2.5, 't_end': 10.0, 'emit_plots': True, 'eps_list': [0.01, 0.02]}


@pytest.mark.parametrize("line", ['order 2', 'colour = red', 'n = many'])
def test_config_file_errors(tmp_path: Path, line: str) -> None:
    config = tmp_path / 'run.cfg'
    config.write_text(line + '\n')
    with pytest.raises(ValidationError):
        load_config(config)


def test_flags_override_config_file(tmp_path: Path) -> None:
    config = tmp_path / 'run.cfg'
    config.write_text('eps = 0.2\nm = 5\n')
    parser = cli.build_argparser()
    args = parser.parse_args(['phaseplane', '--eps', '0.1', '--config', str(config)])
    resolve_args(args, {})
    assert args.eps == 0.1
    assert args.m == 5
    assert args.order == 2
    assert args.out == 'out'


def test_config_eps_feeds_sweep_list(tmp_path: Path) -> None:
    config = tmp_path / 'run.cfg'
    config.write_text('eps = 0.02\n')
    args = cli.build_argparser().parse_args(['sweep', '--config', str(config)])
    resolve_args(args, {'eps_list': None})
    assert args.eps_list == [0.02]


def test_phaseplane_outputs_are_deterministic(tmp_path: Path) -> None:
    first, second = tmp_path / 'first', tmp_path / 'second'
    for out in (first, second):
        assert run('phaseplane', '--eps', '0.05', '--out', str(out), '--emit-plots') == 0

    for name in ('phaseplane.csv', 'phaseplane.json'):
        assert (first / name).read_bytes() == (second / name).read_bytes()

    lines = (first / 'phaseplane.csv').read_text().splitlines()
    assert lines[0].startswith('# ')
    assert 'eps=0.05' in lines[0].split()
    assert lines[1] == 'alpha,l,l_squared,l0'

    summary = json.loads((first / 'phaseplane.json').read_text())
    assert summary['passed'] is True
    assert summary['lambda_c'] == pytest.approx(0.350004, abs=1e-5)

    script = first / 'plot_phaseplane.py'
    assert script.exists()
    compile(script.read_text(), str(script), 'exec')


def test_inner_command(tmp_path: Path) -> None:
    assert run('inner', '--lambda', '10', '--out', str(tmp_path)) == 0
    summary = json.loads((tmp_path / 'inner.json').read_text())
    assert summary['passed'] is True
    assert (tmp_path / 'inner.csv').read_text().splitlines()[1].startswith('xi,')


def test_repeated_runs_share_one_console_handler() -> None:
    root = logging.getLogger()
    for _ in range(3):
        cli.setup_logger()
    named = [h for h in root.handlers if h.get_name() == cli.HANDLER_NAME]
    assert len(named) == 1


def test_epscrit_verifies_the_flip(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    tried: list[float] = []

    def two_folds(eps: float, *_args: object) -> bool:
        tried.append(eps)
        return eps < 0.25

    monkeypatch.setattr(epscrit_run, 'find_eps_c', lambda *_args, **_kwargs: 0.25)
    monkeypatch.setattr(epscrit_run, 'has_two_folds', two_folds)
    assert run('epscrit', '--order', '4', '--out', str(tmp_path)) == 0
    assert tried == [pytest.approx(0.225), pytest.approx(0.275)]
    summary = json.loads((tmp_path / 'epscrit.json').read_text())
    assert summary['passed'] is True
    assert summary['two_folds_below'] is True
    assert summary['two_folds_above'] is False


@pytest.mark.parametrize("order", ['2', '4'])
def test_epscrit_fails_without_a_flip(
        tmp_path: Path, monkeypatch: pytest.MonkeyPatch, order: str) -> None:
    monkeypatch.setattr(epscrit_run, 'find_eps_c', lambda *_args, **_kwargs: 0.25)
    monkeypatch.setattr(epscrit_run, 'has_two_folds', lambda *_args: True)
    assert run('epscrit', '--order', order, '--out', str(tmp_path)) == 3
    summary = json.loads((tmp_path / 'epscrit.json').read_text())
    assert summary['passed'] is False
    assert summary['eps_c'] == 0.25


@pytest.mark.parametrize("scheme", [None, 'linearized'])
def test_evolve_scheme_selection(tmp_path: Path, scheme: str | None) -> None:
    argv = ['evolve', '--lambda', '0.3', '--eps', '0.1', '--n', '63', '--t-end', '2',
            '--out', str(tmp_path)]
    if scheme is not None:
        config = tmp_path / 'run.cfg'
        config.write_text(f'scheme = {scheme}\n')
        argv += ['--config', str(config)]
    assert run(*argv) == 0
    summary = json.loads((tmp_path / 'evolve.json').read_text())
    assert summary['scheme'] == (scheme or 'imex')
    assert summary['passed'] is True
    assert summary['comparison_margin'] >= 0.0


def test_unknown_scheme_is_a_validation_error(tmp_path: Path) -> None:
    config = tmp_path / 'run.cfg'
    config.write_text('lambda = 1\nscheme = rk4\n')
    assert run('evolve', '--config', str(config), '--out', str(tmp_path)) == 2


def test_sweep_worker_pool_matches_serial_run() -> None:
    tasks = [sweep_run.SweepTask(eps, 4, Order.SECOND, 63, 0.05) for eps in (0.3, 0.45)]
    assert sweep_run.sweep(tasks, 2) == sweep_run.sweep(tasks, 1)


def test_sweep_uses_one_worker_per_cpu(tmp_path: Path,
                                      monkeypatch: pytest.MonkeyPatch) -> None:
    used = []

    def record(tasks: list[sweep_run.SweepTask], workers: int) -> list[dict[str, object]]:
        used.append(workers)
        return [{'eps': task.eps, 'lambda_c1': 0.36, 'lambda_c2': 2.0 * task.eps}
                for task in tasks]

    monkeypatch.setattr(sweep_run, 'sweep', record)
    monkeypatch.setattr(sweep_run.os, 'cpu_count', lambda: 3)
    assert run('sweep', '--eps', '0.01,0.02,0.04,0.08', '--out', str(tmp_path)) == 0
    assert run('sweep', '--eps', '0.01,0.02', '--out', str(tmp_path)) == 0
    assert run('sweep', '--eps', '0.01,0.02', '--workers', '1', '--out', str(tmp_path)) == 0
    assert used == [3, 2, 1]
    summary = json.loads((tmp_path / 'sweep.json').read_text())
    assert summary['workers'] == 1
    assert summary['slope'] == pytest.approx(1.0)
