"""
echelon command line

Verbs: curve, check, search, scan, reproduce.
Exit codes: 0 holds, 1 fails, 2 inconclusive, 3 config or usage error,
4 any other failure.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from echelon.agents.condition_agent import ConditionAgent
from echelon.agents.curve_agent import CurveAgent
from echelon.agents.equilibrium_agent import EquilibriumAgent
from echelon.agents.planning_agent import PlanningAgent
from echelon.agents.state_schema import ConditionReport
from echelon.agents.workflow_executor import WorkflowExecutor
from echelon.config.run_config import RunConfig, load_config
from echelon.config.settings import settings
from echelon.tools import report_writer
from echelon.tools.search_1d import GridMaximum

logger = logging.getLogger("echelon")

EXIT_CONFIG = 3
EXIT_FAILURE = 4

CHECKS = ('thm1', 'thm2', 'thm3', 'prop1', 'prop2', 'prop3', 'ce', 'lemma1')


class ConfigError(Exception):
    """Configuration or usage problem detected before any computation"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='echelon', description="Echelon formation equilibrium analysis")
    parser.add_argument('--config', help="YAML run configuration")
    parser.add_argument('--out', help="Output directory")
    parser.add_argument('--grid-step', type=float, help="Grid step for interval maxima (m)")
    parser.add_argument('--tol', type=float, help="Inconclusive band around zero margins")
    parser.add_argument('--seed', type=int, help="Restart seed")

    commands = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    curve = commands.add_parser('curve', help="Sample f or f_x along x")
    curve.add_argument('which', choices=('f', 'fx'))
    curve.add_argument('--y-multiple', type=int, choices=(1, 2), default=1)
    curve.add_argument('--x-min', type=float, help="Default -20 b")
    curve.add_argument('--x-max', type=float, help="Default 20 b")
    curve.add_argument('--step', type=float, help="Default 10 x grid step")

    check = commands.add_parser('check', help="Evaluate a nonexistence condition")
    check.add_argument('which', choices=CHECKS)

    search = commands.add_parser('search', help="Seeded equilibrium search restarts")
    search.add_argument('kind', choices=('ne', 'ce'))
    search.add_argument('--n', type=int, help="Number of followers")
    search.add_argument('--restarts', type=int)
    search.add_argument('--trajectories', action='store_true', help="Also write trajectory CSVs")

    scan = commands.add_parser('scan', help="Brute-force residual scan over P x P")
    scan.add_argument('kind', choices=('ne', 'ce'))
    scan.add_argument('--n', type=int, help="Agent whose CE gradient is scanned (ce only)")

    commands.add_parser('reproduce', help="All curves, reports and scans of the goose case")
    return parser


def _load(args) -> RunConfig:
    try:
        settings.validate()
        overrides: Dict[str, Any] = {
            'output_dir': args.out,
            'grid_step': args.grid_step,
            'tolerance': args.tol,
            'seed': args.seed,
        }
        if args.command == 'search':
            overrides.update(n=args.n, restarts=args.restarts)
        return load_config(args.config, **overrides)
    except (ValidationError, ValueError, OSError) as e:
        raise ConfigError(str(e)) from e


def _header(config: RunConfig, **extra) -> Dict[str, Any]:
    """Parameter echo for every output file"""
    return {**extra, **config.model_dump()}


def _run(agent, task: str, params: Dict[str, Any]) -> Dict[str, Any]:
    envelope = agent.run({'task': task, 'params': params})
    if envelope['status'] != 'success':
        raise RuntimeError(f"{agent.agent_id}/{task}: {envelope.get('error_type')}: {envelope.get('error')}")
    return envelope['result']


def _condition_params(config: RunConfig) -> Dict[str, Any]:
    return {
        'benefit': config.build_benefit(),
        'interval': config.interval(),
        'beta': config.resolved_beta,
        'step': config.resolved_grid_step,
        'tol': config.tolerance,
        'beta_lower': config.resolved_beta_lower,
        'y_max_factor': config.y_max_factor,
    }


# ==================== Verbs ====================

def cmd_curve(config: RunConfig, args) -> int:
    b = config.wake_params().b
    x_range = (
        args.x_min if args.x_min is not None else -20 * b,
        args.x_max if args.x_max is not None else 20 * b,
    )
    step = args.step or 10 * config.resolved_grid_step
    result = _run(CurveAgent(), 'curve', {
        'benefit': config.build_benefit(),
        'which': args.which,
        'y_multiple': args.y_multiple,
        'beta': config.resolved_beta,
        'x_range': x_range,
        'step': step,
    })
    name = f"curve_{args.which}_y{args.y_multiple}"
    path = report_writer.write_curve(
        Path(config.output_dir) / f"{name}.csv",
        result['x'],
        result['values'],
        _header(config, title=name, quantity=result['quantity'], y_multiple=args.y_multiple,
                x_min=x_range[0], x_max=x_range[1], step=step),
    )
    _maybe_svg(config, path)
    print(path)
    return 0


def cmd_check(config: RunConfig, args) -> int:
    if args.which == 'lemma1' and config.benefit != 'wake':
        raise ConfigError("lemma1 applies to the wake benefit only")
    report: ConditionReport = _run(ConditionAgent(), args.which, _condition_params(config))['report']
    path = report_writer.write_json(Path(config.output_dir) / f"check_{args.which}.json", report, _header(config))
    print(f"{args.which}: {report.verdict.value} (margin {report.margin}) -> {path}")
    return report.verdict.exit_code


def cmd_search(config: RunConfig, args) -> int:
    task = f"search_{args.kind}"
    summary = _run(EquilibriumAgent(), task, {
        'benefit': config.build_benefit(),
        'interval': config.interval(),
        'beta': config.resolved_beta,
        'n': config.n,
        'restarts': config.restarts,
        'seed': config.seed,
        'mode': config.mode,
        'max_iters': config.max_iters,
        'record_trajectory': args.trajectories,
    })['summary']

    out = Path(config.output_dir)
    stem = f"search_{args.kind}_n{config.n}"
    header = _header(config, kind=args.kind)
    if args.trajectories:
        report_writer.write_trajectories(out / f"{stem}_trajectories.csv", [r.trajectory for r in summary.results], header)
    body = summary.model_dump(mode='json', exclude={'results': {'__all__': {'trajectory'}}})
    path = report_writer.write_json(out / f"{stem}.json", body, header)
    print(
        f"{args.kind} n={config.n}: {summary.converged}/{summary.restarts} converged, "
        f"{summary.of_interest} in P, {summary.drift} drift -> {path}"
    )
    return 0


def cmd_scan(config: RunConfig, args) -> int:
    task = f"scan_{args.kind}"
    n = args.n or max(config.n, 2)
    scan = _run(EquilibriumAgent(), task, {
        'benefit': config.build_benefit(),
        'interval': config.interval(),
        'beta': config.resolved_beta,
        'scan_step': config.scan_step,
        'n': n,
    })['scan']
    path = report_writer.write_json(Path(config.output_dir) / f"{task}.json", scan, _header(config))
    print(f"{task}: minimum {scan.minimum:.6e} at {scan.location} -> {path}")
    return 0


def _write_step_output(out: Path, config: RunConfig, step: Dict[str, Any], result: Dict[str, Any]) -> Optional[str]:
    name = step['name']
    header = _header(config, step=step['step'], description=step['description'])
    if 'levels' in result:
        rows = np.column_stack([result['x'], result['values']])
        path = report_writer.write_csv(
            out / f"{name}.csv", result['columns'], rows,
            {**header, 'title': name, 'quantity': 'df/dx(x, y)', 'step': step['params']['step'], **result['levels']},
        )
        _maybe_svg(config, path)
        return path.name
    if 'x' in result:
        params = step['params']
        path = report_writer.write_curve(
            out / f"{name}.csv", result['x'], result['values'],
            {**header, 'title': name, 'quantity': result['quantity'], 'y_multiple': params['y_multiple'],
             'x_min': params['x_range'][0], 'x_max': params['x_range'][1], 'step': params['step']},
        )
        _maybe_svg(config, path)
        return path.name
    payload = next(iter(result.values()))
    if isinstance(payload, GridMaximum):
        payload = {'x': payload.x, 'value': payload.value, 'on_boundary': payload.on_boundary, 'step': payload.step}
    return report_writer.write_json(out / f"{name}.json", payload, header).name


def cmd_reproduce(config: RunConfig, args) -> int:
    out = Path(config.output_dir)
    planner = PlanningAgent()
    envelope = planner.run({'task': 'plan', 'config': config})
    if envelope['status'] != 'success':
        raise RuntimeError(envelope.get('error'))
    plan = envelope['result']['plan']

    executor = WorkflowExecutor({
        'condition': ConditionAgent(),
        'curve': CurveAgent(),
        'equilibrium': EquilibriumAgent(),
    })
    manifest: List[Dict[str, Any]] = []

    def record(step, result):
        entry = {
            'step': step['step'],
            'name': step['name'],
            'task': step['task'],
            'description': step['description'],
            'status': result['status'],
        }
        if result['status'] == 'success':
            try:
                entry['file'] = _write_step_output(out, config, step, result['result'])
            except OSError as e:
                entry.update(status='failed', error=str(e))
            report = result['result'].get('report')
            if report is not None:
                entry['verdict'] = report.verdict.value
        else:
            entry['error'] = result.get('error') or result.get('reason')
        manifest.append(entry)

    outcome = executor.execute(plan, on_step=record)
    manifest.sort(key=lambda e: e['step'])
    path = report_writer.write_json(out / 'manifest.json', {'entries': manifest}, _header(config))
    print(f"reproduce: {outcome['completed_steps']}/{outcome['total_steps']} steps -> {path}")
    return 0 if all(e['status'] == 'success' for e in manifest) else EXIT_FAILURE


def _maybe_svg(config: RunConfig, csv_path: Path):
    if config.svg:
        from echelon.tools.plotting import render_curve_svg
        render_curve_svg(csv_path)


COMMANDS = {
    'curve': cmd_curve,
    'check': cmd_check,
    'search': cmd_search,
    'scan': cmd_scan,
    'reproduce': cmd_reproduce,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )
    try:
        config = _load(args)
        return COMMANDS[args.command](config, args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
