"""
Command-line runner for scenario files.

  comrades run FILE [--seed N] [--sweep A..B] [--out PATH]
                    [--summary table|json-lines] [-v]
  comrades validate FILE

Exit status is 0 on success, 2 when the scenario does not parse or
validate, and 1 on anything else.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass

from comrades.metrics import dumps, format_table, summary_row
from comrades.scenario import InvalidScenario, dump_scenario, load_scenario
from comrades.sim import Simulation


__all__ = (
    'RunInvocation',
    'cmd_run',
    'cmd_validate',
    'main',
    'parse_sweep',
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2

SUMMARY_FORMATS = ('table', 'json-lines')


@dataclass(frozen=True)
class RunInvocation:
    scenario_path: str
    seed_override: int = None
    sweep: range = None
    output_path: str = None
    summary_format: str = 'table'

    def seeds(self, default):
        if self.sweep is not None:
            return list(self.sweep)
        if self.seed_override is not None:
            return [self.seed_override]
        return [default]

    def output_for(self, seed):
        path = self.output_path
        if path is None:
            path = os.path.splitext(self.scenario_path)[0] + '.jsonl'
        if self.sweep is None:
            return path
        root, ext = os.path.splitext(path)
        return '%s.seed%d%s' % (root, seed, ext)


def parse_sweep(value):
    """
    Parse an inclusive `A..B` seed range.
    """
    lo, sep, hi = value.partition('..')
    try:
        lo, hi = int(lo), int(hi)
    except ValueError:
        sep = ''
    if not sep or lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(
            "expected A..B with 0 <= A <= B, got %r" % value)
    return range(lo, hi + 1)


def _report_invalid(path, exc):
    for where, message in exc.errors:
        print('%s: %s: %s' % (path, where or '<scenario>', message),
              file=sys.stderr)


def cmd_run(invocation, out=None):
    out = out or sys.stdout
    try:
        scenario = load_scenario(invocation.scenario_path)
    except InvalidScenario as exc:
        _report_invalid(invocation.scenario_path, exc)
        return EXIT_INVALID

    rows = []
    try:
        for seed in invocation.seeds(scenario.seed):
            simulation = Simulation(scenario.with_seed(seed))
            report = simulation.run()
            path = invocation.output_for(seed)
            with open(path, 'w', encoding='utf-8') as fh:
                simulation.metrics.write(fh, report)
            log.info("seed %d: metrics written to %s", seed, path)
            rows.append(summary_row(report))
    except InvalidScenario as exc:
        _report_invalid(invocation.scenario_path, exc)
        return EXIT_INVALID
    except Exception:
        log.exception("simulation failed")
        return EXIT_FAILURE

    if invocation.summary_format == 'json-lines':
        for row in rows:
            print(dumps(row), file=out)
    else:
        print(format_table(rows), file=out)
    return EXIT_OK


def cmd_validate(scenario_path, out=None):
    out = out or sys.stdout
    try:
        scenario = load_scenario(scenario_path)
    except InvalidScenario as exc:
        _report_invalid(scenario_path, exc)
        return EXIT_INVALID
    out.write(dump_scenario(scenario))
    return EXIT_OK


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '-v', '--verbose', action='count', default=0,
        help='log more (repeat for debug output)')
    parser = argparse.ArgumentParser(
        prog='comrades',
        description='Run anti-spam campaign coordination scenarios.')
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True

    run = commands.add_parser(
        'run', parents=[common], help='run a scenario')
    run.add_argument('scenario', metavar='FILE')
    seeds = run.add_mutually_exclusive_group()
    seeds.add_argument('--seed', type=int, help='override the scenario seed')
    seeds.add_argument('--sweep', type=parse_sweep, metavar='A..B',
                       help='run once per seed in the inclusive range')
    run.add_argument('--out', metavar='PATH',
                     help='metrics stream (default: FILE with .jsonl)')
    run.add_argument('--summary', choices=SUMMARY_FORMATS, default='table')

    validate = commands.add_parser(
        'validate', parents=[common],
        help='check a scenario and print it normalized')
    validate.add_argument('scenario', metavar='FILE')
    return parser


def _configure_logging(verbosity):
    level = os.environ.get('COMRADES_LOG_LEVEL', 'WARNING').upper()
    if verbosity == 1:
        level = 'INFO'
    elif verbosity > 1:
        level = 'DEBUG'
    if not isinstance(logging.getLevelName(level), int):
        level = 'WARNING'
    logging.basicConfig(
        stream=sys.stderr, level=level,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def main(argv=None):
    args = _build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    if args.command == 'validate':
        return cmd_validate(args.scenario)
    if args.seed is not None and args.seed < 0:
        print('comrades: --seed must not be negative', file=sys.stderr)
        return EXIT_INVALID
    return cmd_run(RunInvocation(
        scenario_path=args.scenario,
        seed_override=args.seed,
        sweep=args.sweep,
        output_path=args.out,
        summary_format=args.summary))


if __name__ == '__main__':
    sys.exit(main())
