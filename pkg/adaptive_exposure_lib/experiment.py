# coding=utf-8
#
"""Experiment harness: scenario x strategy x seed cells, metrics and report files."""
import os
import csv
import json
import math
import logging
import tempfile
from dataclasses import dataclass, field, replace

import numpy as np
import six

from .errors import ConfigError, DomainError, InvariantBreach, UsageError
from .exposure_controller import CYCLE_LOG_COLUMNS
from .metrics_eval import cdf_points, evaluate
from .rppg_core import HRSeries, PipelineConfig, run_pipeline, wave_spectrogram
from .scenario_file import load_scenario
from .scene_model import ground_truth_hr
from .sensor_model import SensorConfig
from .strategies import FRAME_LOG_COLUMNS, STREAM_RATE, build_strategy, run_strategy

logger = logging.getLogger(__name__)

ENV_OUTPUT_DIR = 'ADAPTIVE_EXPOSURE_OUT'
ENV_WORKERS = 'ADAPTIVE_EXPOSURE_WORKERS'
PLOT_KINDS = ('cdf', 'timeseries', 'spectrogram')
WINDOW_COLUMNS = ('t', 'hr_est', 'hr_ref', 'abs_err')


def _default_workers():
    try:
        return max(1, int(os.getenv(ENV_WORKERS, '1')))
    except ValueError:
        raise ConfigError('{} must be an integer'.format(ENV_WORKERS))


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    scenarios: tuple
    strategies: tuple
    sensor: SensorConfig = field(default_factory=SensorConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    seeds: tuple = (0,)
    output_dir: str = field(default_factory=lambda: os.getenv(ENV_OUTPUT_DIR, 'out'))
    workers: int = field(default_factory=_default_workers)
    tolerance: float = 5.0

    def __post_init__(self):
        if not self.scenarios:
            raise ConfigError('at least one scenario is required')
        if not self.strategies:
            raise ConfigError('at least one strategy is required')
        if not self.seeds:
            raise ConfigError('at least one seed is required')
        names = [s.name for s in self.strategies]
        if len(set(names)) != len(names):
            raise ConfigError('strategy names must be unique, got {}'.format(names))
        if self.workers < 1:
            raise ConfigError('workers must be >= 1')

    @classmethod
    def from_dict(cls, data, path=None, base_dir=None):
        """Config from a parsed JSON document; scenario paths are relative to ``base_dir``.

        Raises:
            ConfigError -- For missing keys or values out of range.
        """
        if not isinstance(data, dict):
            raise ConfigError('experiment config must be a JSON object', path)
        unknown = set(data) - {'scenarios', 'strategies', 'sensor', 'pipeline', 'seeds', 'output_dir',
                               'workers', 'tolerance'}
        if unknown:
            raise ConfigError('unknown keys {}'.format(sorted(unknown)), path)
        scenarios = []
        if not isinstance(data.get('scenarios', []), list):
            raise ConfigError('scenarios must be a list of paths', path)
        for reference in data.get('scenarios', []):
            if not isinstance(reference, six.string_types):
                raise ConfigError('scenario entries must be strings, got {!r}'.format(reference), path)
            if not reference.startswith('builtin:') and base_dir and not os.path.isabs(reference):
                reference = os.path.join(base_dir, reference)
            scenarios.append(reference)
        strategies = tuple(build_strategy(entry) for entry in data.get('strategies', []))
        settings = {}
        try:
            if 'sensor' in data:
                sensor = dict(data['sensor'])
                if 'channel_gains' in sensor:
                    sensor['channel_gains'] = tuple(sensor['channel_gains'])
                settings['sensor'] = SensorConfig(**sensor)
            if 'pipeline' in data:
                pipeline = dict(data['pipeline'])
                if 'band' in pipeline:
                    pipeline['band'] = tuple(pipeline['band'])
                settings['pipeline'] = PipelineConfig(**pipeline)
        except (TypeError, DomainError) as e:
            raise ConfigError(str(e), path)
        for key in ('output_dir', 'workers', 'tolerance'):
            if key in data:
                settings[key] = data[key]
        if 'seeds' in data:
            settings['seeds'] = tuple(int(seed) for seed in data['seeds'])
        return cls(tuple(scenarios), strategies, **settings)

    @classmethod
    def from_json(cls, path):
        try:
            with open(path, encoding='utf-8') as handle:
                data = json.load(handle)
        except (IOError, OSError) as e:
            raise ConfigError('cannot read config: {}'.format(e), path)
        except ValueError as e:
            raise ConfigError('invalid JSON: {}'.format(e), path, getattr(e, 'lineno', None))
        return cls.from_dict(data, path, os.path.dirname(os.path.abspath(path)))

    def cells(self):
        """(scenario reference, strategy, seed) for every cell, in report order."""
        return [(scenario, strategy, seed)
                for scenario in self.scenarios for strategy in self.strategies for seed in self.seeds]


@dataclass(frozen=True, eq=False)
class CellResult:
    scenario: str
    strategy: str
    seed: int
    duration: float
    run: object
    pipeline: object
    reference: HRSeries
    metrics: object

    @property
    def key(self):
        return '{}__{}__seed{}'.format(self.scenario, self.strategy, self.seed)

    def summary(self):
        row = dict(self.metrics.as_dict(), scenario=self.scenario, strategy=self.strategy, seed=self.seed,
                   duration=self.duration, frames=len(self.run.frames), emulated=self.run.emulated)
        return row


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    config: ExperimentConfig
    cells: list

    def summary(self):
        notes = []
        strategies = {}
        for strategy in self.config.strategies:
            strategies[strategy.name] = strategy.describe()
            if strategy.emulated:
                notes.append('{} is an emulation of full-frame auto-exposure, not the vendor algorithm'.format(
                    strategy.name))
        return {
            'cells': [cell.summary() for cell in self.cells],
            'strategies': strategies,
            'pipeline': {
                'window_len': self.config.pipeline.window_len,
                'hop': self.config.pipeline.hop,
                'band': list(self.config.pipeline.band),
                'top_k': self.config.pipeline.top_k,
            },
            'tolerance': self.config.tolerance,
            'notes': notes,
        }

    def by_strategy(self):
        grouped = {}
        for cell in self.cells:
            grouped.setdefault(cell.strategy, []).append(cell)
        return grouped


def reference_series(spec, rate=STREAM_RATE):
    """Ground-truth heart rate sampled on the stream clock, closed at the scenario end."""
    count = int(math.floor(spec.duration * rate + 1e-9))
    times = np.append(np.arange(count) / rate, spec.duration)
    return HRSeries(times, np.array([ground_truth_hr(spec, t) for t in times]))


def run_cell(scenario, strategy, sensor, pipeline, seed=0, tolerance=5.0):
    """Capture one scenario with one strategy and score its heart-rate estimates.

    Arguments:
        scenario {Scenario} -- Parsed scenario
        strategy {ExposureStrategy} -- Strategy to run
        sensor {SensorConfig} -- Camera
        pipeline {PipelineConfig} -- rPPG knobs

    Keyword Arguments:
        seed {int} -- Noise seed replacing the scenario's (default: {0})
        tolerance {float} -- Success-rate tolerance in bpm (default: {5.0})

    Raises:
        InvariantBreach -- If a metric comes out non-finite.

    Returns:
        CellResult -- Frames, pulse, HR and metrics of the cell
    """
    spec = replace(scenario.spec, noise_seed=seed)
    if scenario.read_noise_sigma is not None:
        sensor = replace(sensor, read_noise_sigma=scenario.read_noise_sigma)
    run = run_strategy(strategy, spec, sensor)
    result = run_pipeline(run.frames, spec.grid, spec.roi, pipeline)
    reference = reference_series(spec)
    metrics = evaluate(result.hr, reference, result.wave, tolerance, pipeline.window_len, pipeline.hop)
    for name in ('mae', 'success_rate', 'snr'):
        value = getattr(metrics, name)
        if not math.isfinite(value):
            raise InvariantBreach('{} of {} / {} / seed {} is {}'.format(name, spec.name, strategy.name, seed, value))
    logger.info('{} / {} / seed {}: MAE {:.2f} bpm, SR {:.1f}%, SNR {:.2f} dB'.format(
        spec.name, strategy.name, seed, metrics.mae, metrics.success_rate, metrics.snr))
    return CellResult(spec.name, strategy.name, seed, spec.duration, run, result, reference, metrics)


def _atomic(path, write):
    directory = os.path.dirname(path) or '.'
    os.makedirs(directory, exist_ok=True)
    handle = tempfile.NamedTemporaryFile('w', dir=directory, delete=False, newline='', encoding='utf-8',
                                         prefix='.tmp-', suffix=os.path.splitext(path)[1])
    try:
        with handle:
            write(handle)
        os.replace(handle.name, path)
    except BaseException:
        if os.path.exists(handle.name):
            os.remove(handle.name)
        raise
    logger.debug('wrote {}'.format(path))


def write_json(path, document):
    _atomic(path, lambda handle: handle.write(json.dumps(document, indent=2, sort_keys=True) + '\n'))


def write_csv(path, columns, rows):
    def _write(handle):
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] for c in columns] if isinstance(row, dict) else list(row))
    _atomic(path, _write)


def _distribution_rows(report, metric, direction):
    rows = []
    for strategy, cells in report.by_strategy().items():
        for x, p in cdf_points([getattr(cell.metrics, metric) for cell in cells], direction):
            rows.append((strategy, x, p))
    return rows


def write_report(report, out_dir=None):
    """Write summary.json and the per-cell CSV logs; returns the summary document."""
    out_dir = out_dir or report.config.output_dir
    summary = report.summary()
    for cell in report.cells:
        write_csv(os.path.join(out_dir, 'frames', cell.key + '.csv'), FRAME_LOG_COLUMNS, cell.run.frame_log)
        write_csv(os.path.join(out_dir, 'windows', cell.key + '.csv'), WINDOW_COLUMNS, cell.metrics.per_window)
        write_csv(os.path.join(out_dir, 'pulse', cell.key + '.csv'), ('t', 'value'), cell.pipeline.wave.rows())
        if cell.run.cycle_log:
            write_csv(os.path.join(out_dir, 'cycles', cell.key + '.csv'), CYCLE_LOG_COLUMNS, cell.run.cycle_log)
    emit_plot_data(report, 'cdf', out_dir)
    write_json(os.path.join(out_dir, 'summary.json'), summary)
    logger.info('report of {} cells written to {}'.format(len(report.cells), out_dir))
    return summary


def emit_plot_data(report, kind, out_dir=None):
    """Write plot-ready CSV files of one kind; returns the written paths.

    Raises:
        UsageError -- If kind is not one of cdf, timeseries, spectrogram.
    """
    if kind not in PLOT_KINDS:
        raise UsageError('unknown plot kind {}, expected one of {}'.format(kind, PLOT_KINDS))
    out_dir = out_dir or report.config.output_dir
    written = []
    if kind == 'cdf':
        for name, metric, direction in (('cdf_mae.csv', 'mae', 'cdf'), ('ccdf_sr.csv', 'success_rate', 'ccdf'),
                                        ('ccdf_snr.csv', 'snr', 'ccdf')):
            path = os.path.join(out_dir, name)
            write_csv(path, ('strategy', 'x', 'P'), _distribution_rows(report, metric, direction))
            written.append(path)
    elif kind == 'timeseries':
        for cell in report.cells:
            path = os.path.join(out_dir, 'timeseries', cell.key + '.csv')
            rows = [(row['t'], row['exposure_ms'], row['mu_roi'], float(np.interp(row['t'], cell.reference.times,
                                                                                 cell.reference.bpm)))
                    for row in cell.run.frame_log]
            write_csv(path, ('t', 'exposure_ms', 'mu_roi', 'hr_ref'), rows)
            written.append(path)
    else:
        pipeline = report.config.pipeline
        for cell in report.cells:
            path = os.path.join(out_dir, 'spectrogram', cell.key + '.csv')
            rows = wave_spectrogram(cell.pipeline.wave, pipeline.window_len, pipeline.hop, nfft=pipeline.nfft)
            write_csv(path, ('t', 'f', 'magnitude'), rows)
            written.append(path)
    return written


def run_experiment(config, write=True):
    """Run every cell on the worker pool and write the report.

    Returns:
        ExperimentReport -- Cells in config order
    """
    from .experiment_service import ExperimentService
    report = ExperimentService(config).run()
    if write:
        write_report(report)
    return report
