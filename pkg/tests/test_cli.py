"""
Test the echelon command line
"""
import json

import numpy as np
import pytest

from echelon.config.run_config import RunConfig
from echelon.main import main
from echelon.tools.report_writer import read_csv


def _config(tmp_path, **fields):
    return str(RunConfig(**fields).to_yaml(tmp_path / 'run.yaml'))


def _run(tmp_path, *argv):
    return main(['--out', str(tmp_path / 'out'), *argv])


def _body(path):
    return [line for line in path.read_text().splitlines() if not line.startswith('#')]


def test_check_thm1_fails_for_goose(tmp_path):
    assert _run(tmp_path, 'check', 'thm1') == 1
    report = json.loads((tmp_path / 'out' / 'check_thm1.json').read_text())
    assert list(report)[0] == 'parameters'
    assert report['parameters']['alpha_l'] == 3.5
    assert report['verdict'] == 'fails'
    assert report['delta2'] == pytest.approx(-0.0027410, abs=2e-6)
    assert report['delta1'] == pytest.approx(0.0027907, abs=2e-6)


def test_check_thm1_holds_in_front_of_peak(tmp_path):
    assert _run(tmp_path, '--config', _config(tmp_path, alpha_l=2.5), 'check', 'thm1') == 0
    report = json.loads((tmp_path / 'out' / 'check_thm1.json').read_text())
    assert report['verdict'] == 'holds'
    assert report['margin'] > 2e-3


def test_check_lemma1_reports_bound(tmp_path):
    assert _run(tmp_path, '--config', _config(tmp_path, alpha_l=14.0), 'check', 'lemma1') == 0
    report = json.loads((tmp_path / 'out' / 'check_lemma1.json').read_text())
    assert report['details']['alpha_l_bound_in_b'] == pytest.approx(14945, abs=1)


def test_check_thm2_peak_outside_P(tmp_path):
    code = _run(tmp_path, '--config', _config(tmp_path, alpha_s=3.0, alpha_l=5.0), 'check', 'thm2')
    assert code == 2
    report = json.loads((tmp_path / 'out' / 'check_thm2.json').read_text())
    assert report['reason'] == "Assumption 2(b) violated"


def test_lemma1_needs_wake_benefit(tmp_path):
    config = _config(tmp_path, benefit='separable_gaussian', alpha_l=14.0)
    assert _run(tmp_path, '--config', config, 'check', 'lemma1') == 3


def test_inconsistent_config_exits_3(tmp_path):
    path = tmp_path / 'bad.yaml'
    path.write_text("alpha_s: 5.0\nalpha_l: 1.0\n")
    assert _run(tmp_path, '--config', str(path), 'check', 'thm1') == 3
    assert not (tmp_path / 'out').exists()


def test_bad_flag_value_exits_3(tmp_path):
    assert _run(tmp_path, '--grid-step', '-1', 'check', 'thm1') == 3
    assert _run(tmp_path, '--config', str(tmp_path / 'missing.yaml'), 'check', 'thm1') == 3


def test_usage_errors_exit_3(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        _run(tmp_path, 'plot')
    assert excinfo.value.code == 3
    with pytest.raises(SystemExit) as excinfo:
        _run(tmp_path, 'check', 'thm9')
    assert excinfo.value.code == 3


def test_curve_f_peaks_at_wake_maximum(tmp_path):
    assert _run(tmp_path, 'curve', 'f') == 0
    header, columns, rows = read_csv(tmp_path / 'out' / 'curve_f_y1.csv')
    assert columns == ['x', 'value']
    assert header['quantity'] == 'f(x, y)'
    assert rows[np.nanargmax(rows[:, 1]), 0] == pytest.approx(-2.5877, abs=0.01)


def test_curve_fx_single_crossing_and_gap_row(tmp_path):
    assert _run(tmp_path, 'curve', 'fx') == 0
    _, _, rows = read_csv(tmp_path / 'out' / 'curve_fx_y1.csv')
    x, value = rows[:, 0], rows[:, 1]
    assert np.isnan(value[x == 0.0]).all() and (x == 0.0).sum() == 1

    b = RunConfig().wake_params().b
    behind = value[x <= -0.01 * b]
    assert np.count_nonzero(np.diff(np.sign(behind)) != 0) == 1


def test_curve_empty_range(tmp_path):
    assert _run(tmp_path, 'curve', 'f', '--x-min', '1', '--x-max', '-1') == 0
    header, columns, rows = read_csv(tmp_path / 'out' / 'curve_f_y1.csv')
    assert columns == ['x', 'value']
    assert rows.shape == (0, 2)
    assert header['x_min'] == '1.0'


def test_curve_svg_deterministic(tmp_path):
    config = _config(tmp_path, svg=True)
    argv = ['--config', config, 'curve', 'f', '--x-min', '-5', '--x-max', '-0.5', '--step', '0.05']
    assert _run(tmp_path, *argv) == 0
    svg = tmp_path / 'out' / 'curve_f_y1.svg'
    first = svg.read_bytes()
    assert _run(tmp_path, *argv) == 0
    assert svg.read_bytes() == first


def test_search_zero_restarts(tmp_path):
    assert _run(tmp_path, 'search', 'ne', '--restarts', '0') == 0
    summary = json.loads((tmp_path / 'out' / 'search_ne_n2.json').read_text())
    assert summary['restarts'] == 0
    assert summary['results'] == []


def test_search_ce_quadratic_drifts(tmp_path):
    config = _config(tmp_path, benefit='separable_quadratic', restarts=3)
    assert _run(tmp_path, '--config', config, 'search', 'ce', '--trajectories') == 0
    summary = json.loads((tmp_path / 'out' / 'search_ce_n2.json').read_text())
    assert summary['drift'] == 3
    assert summary['of_interest'] == 0
    assert all('trajectory' not in r for r in summary['results'])

    _, columns, rows = read_csv(tmp_path / 'out' / 'search_ce_n2_trajectories.csv')
    assert columns == ['restart', 'iteration', 'x_1', 'x_2']
    assert set(rows[:, 0]) == {0.0, 1.0, 2.0}


def test_scan_small_interval(tmp_path):
    config = _config(tmp_path, alpha_s=0.5, alpha_l=1.0, scan_step=1e-2)
    assert _run(tmp_path, '--config', config, 'scan', 'ne') == 0
    scan = json.loads((tmp_path / 'out' / 'scan_ne.json').read_text())
    assert scan['minimum'] > 0
    assert scan['interval'] == [-1.0, -0.5]


@pytest.mark.slow
def test_reproduce(tmp_path):
    first, second = tmp_path / 'first', tmp_path / 'second'
    assert main(['--out', str(first), 'reproduce']) == 0
    assert main(['--out', str(second), 'reproduce']) == 0

    manifest = json.loads((first / 'manifest.json').read_text())
    entries = manifest['entries']
    assert len(entries) == 17
    assert all(e['status'] == 'success' for e in entries)
    verdicts = {e['name']: e.get('verdict') for e in entries}
    assert verdicts['thm1_narrow'] == 'fails'
    assert verdicts['thm2_shifted'] == verdicts['thm3_wide'] == 'holds'

    thm2 = json.loads((first / 'thm2_shifted.json').read_text())
    header, columns, rows = read_csv(first / 'levels_thm2_shifted.csv')
    assert columns == ['x', 'fx_y1', 'fx_y2']
    assert float(header['epsilon_I']) == thm2['epsilon_I']
    assert rows[0, 0] == pytest.approx(thm2['epsilon_interval'][0])
    assert rows[-1, 0] == pytest.approx(7.0)

    for csv in sorted(first.glob('*.csv')):
        assert _body(csv) == _body(second / csv.name)
