#!/usr/bin/env python
# coding=utf-8
#
"""Command line entry point: ``adaptive-exposure run|plot-data|validate-config|demo``."""
import os
import sys
import logging
import argparse
from dataclasses import replace

from .errors import ConfigError, DomainError, ExposureLibError, InvariantBreach, UsageError
from .experiment import ENV_OUTPUT_DIR, PLOT_KINDS, ExperimentConfig, emit_plot_data, run_experiment, write_report
from .scenario_file import BUILTIN_PREFIX, load_scenario
from .scenarios import CASE_SCENARIOS
from .strategies import STANDARD_STRATEGIES, build_strategy

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_INVARIANT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog='adaptive-exposure', description='Adaptive exposure rPPG experiment harness.')
    parser.add_argument('-v', '--verbose', action='store_true', help='log per-cycle detail')
    commands = parser.add_subparsers(dest='command', parser_class=_Parser)
    commands.required = True

    def common(sub, needs_config=True):
        if needs_config:
            sub.add_argument('--config', required=True, help='experiment JSON file')
        sub.add_argument('--out', help='output directory (default: ${} or the config)'.format(ENV_OUTPUT_DIR))
        sub.add_argument('--seed', type=int, help='run this seed only')
        sub.add_argument('--strategy', action='append', help='keep only this strategy (repeatable)')
        return sub

    common(commands.add_parser('run', help='run an experiment and write its report'))
    plot = common(commands.add_parser('plot-data', help='run an experiment and write plot-ready CSV'))
    plot.add_argument('--kind', required=True, help='cdf, timeseries or spectrogram')
    validate = commands.add_parser('validate-config', help='check an experiment config and its scenarios')
    validate.add_argument('--config', required=True, help='experiment JSON file')
    common(commands.add_parser('demo', help='run the built-in case scenarios with every strategy'),
           needs_config=False)
    return parser


def _demo_config():
    return ExperimentConfig(
        scenarios=tuple(BUILTIN_PREFIX + name for name in CASE_SCENARIOS),
        strategies=tuple(build_strategy(name) for name in STANDARD_STRATEGIES),
        output_dir=os.getenv(ENV_OUTPUT_DIR, 'demo-out'),
    )


def _narrow(config, args):
    if args.strategy:
        kept = tuple(s for s in config.strategies if s.name in args.strategy)
        if not kept:
            raise ConfigError('no strategy matches {}'.format(args.strategy))
        config = replace(config, strategies=kept)
    if args.seed is not None:
        config = replace(config, seeds=(args.seed,))
    if args.out:
        config = replace(config, output_dir=args.out)
    return config


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        sys.stderr.write('adaptive-exposure: {}\n'.format(e))
        return EXIT_CONFIG
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='[%(asctime)-15s][%(levelname)-5s][%(filename)s][%(funcName)s#%(lineno)d] %(message)s')
    try:
        if args.command == 'validate-config':
            config = ExperimentConfig.from_json(args.config)
            for reference in config.scenarios:
                load_scenario(reference)
            logger.info('{} is valid: {} cells'.format(args.config, len(config.cells())))
            return EXIT_OK
        if args.command == 'demo':
            config = _narrow(_demo_config(), args)
        else:
            config = _narrow(ExperimentConfig.from_json(args.config), args)
        if args.command == 'plot-data':
            if args.kind not in PLOT_KINDS:
                raise UsageError('unknown plot kind {}'.format(args.kind))
            report = run_experiment(config, write=False)
            for path in emit_plot_data(report, args.kind, config.output_dir):
                logger.info('wrote {}'.format(path))
        else:
            report = run_experiment(config, write=False)
            write_report(report, config.output_dir)
        return EXIT_OK
    except (ConfigError, UsageError) as e:
        logger.error('configuration error: {}'.format(e))
        return EXIT_CONFIG
    except InvariantBreach as e:
        logger.error('invariant breach: {}'.format(e))
        return EXIT_INVARIANT
    except (ExposureLibError, DomainError, IOError, OSError) as e:
        logger.error('run failed: {}'.format(e))
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
