# coding=utf-8
#
"""Exposure strategies compared by the harness.

Every strategy turns a scenario into a 15 Hz frame stream plus a per-frame log:
fixed exposure, a full-frame mid-gray auto-exposure emulation, the triplet
adaptive controller and the triplet controller followed by region fusion.
"""
import abc
import math
import logging
from dataclasses import dataclass, field

import six

from .errors import ConfigError, DomainError
from .exposure_controller import ControllerConfig, ControllerState, run_cycle
from .region_fusion import FusionConfig, fuse
from .sensor_model import SINGLE_STREAM_T_MAX, capture, fullframe_mean, roi_mean, saturated_patches

logger = logging.getLogger(__name__)

STREAM_RATE = 15.0
FRAME_LOG_COLUMNS = ('t', 'strategy', 'exposure_ms', 'mu_roi', 'mu_fullframe', 'saturated_patch_count')


@dataclass(frozen=True, eq=False)
class StrategyRun:
    strategy: str
    frames: list
    frame_log: list
    cycle_log: list = field(default_factory=list)
    emulated: bool = False


def frame_count(spec, rate=STREAM_RATE):
    """floor(duration * rate) frames are emitted by every strategy."""
    return int(math.floor(spec.duration * rate + 1e-9))


def _log_row(name, frame, spec):
    return {
        't': frame.timestamp,
        'strategy': name,
        'exposure_ms': frame.exposure_time,
        'mu_roi': roi_mean(frame, spec.roi),
        'mu_fullframe': fullframe_mean(frame),
        'saturated_patch_count': saturated_patches(frame, spec.roi),
    }


@six.add_metaclass(abc.ABCMeta)
class ExposureStrategy():
    kind = None
    emulated = False

    def __init__(self, name):
        self.name = name

    @abc.abstractmethod
    def run(self, spec, sensor):
        """Capture the whole scenario.

        Arguments:
            spec {ScenarioSpec} -- The scenario
            sensor {SensorConfig} -- The camera

        Returns:
            StrategyRun -- Frames at 15 Hz with their log
        """
        raise NotImplementedError()

    def describe(self):
        return {'name': self.name, 'kind': self.kind}

    def __repr__(self):
        return '<{} {}>'.format(type(self).__name__, self.name)


class FixedExposure(ExposureStrategy):
    kind = 'fixed'

    def __init__(self, exposure, name=None):
        super(FixedExposure, self).__init__(name or 'fixed-{:g}ms'.format(exposure))
        if not 0 < exposure <= SINGLE_STREAM_T_MAX:
            raise DomainError('fixed exposure {} ms outside (0, {:.1f}]'.format(exposure, SINGLE_STREAM_T_MAX))
        self.exposure = float(exposure)

    def describe(self):
        return dict(super(FixedExposure, self).describe(), exposure_ms=self.exposure)

    def run(self, spec, sensor):
        sensor = sensor.with_ceiling(SINGLE_STREAM_T_MAX)
        frames, rows = [], []
        for k in range(frame_count(spec)):
            frame = capture(spec, sensor, k / STREAM_RATE, self.exposure, 'fixed')
            frames.append(frame)
            rows.append(_log_row(self.name, frame, spec))
        return StrategyRun(self.name, frames, rows)


def next_exposure_auto(prev_T, mean, target=128.0, step_gain=0.3, t_min=0.1, t_max=SINGLE_STREAM_T_MAX):
    """Proportional multiplicative step toward a full-frame mean of ``target``."""
    return min(max(prev_T * (1.0 + step_gain * (target - mean) / target), t_min), t_max)


class AutoFullFrameExposure(ExposureStrategy):
    """Emulation of a vendor auto-exposure metering the whole frame toward mid-gray."""
    kind = 'auto'
    emulated = True

    def __init__(self, target=128.0, step_gain=0.3, initial_exposure=10.0, name='auto'):
        super(AutoFullFrameExposure, self).__init__(name)
        if not 0 < target < 255:
            raise DomainError('auto target must lie in (0, 255), got {}'.format(target))
        if not 0 < step_gain <= 1:
            raise DomainError('step_gain must lie in (0, 1], got {}'.format(step_gain))
        self.target = float(target)
        self.step_gain = float(step_gain)
        self.initial_exposure = float(initial_exposure)

    def describe(self):
        return dict(super(AutoFullFrameExposure, self).describe(), target=self.target,
                    step_gain=self.step_gain, emulation='full-frame mid-gray metering, not the vendor algorithm')

    def run(self, spec, sensor):
        sensor = sensor.with_ceiling(SINGLE_STREAM_T_MAX)
        exposure = min(max(self.initial_exposure, sensor.t_min), sensor.t_max)
        frames, rows = [], []
        for k in range(frame_count(spec)):
            frame = capture(spec, sensor, k / STREAM_RATE, exposure, 'auto')
            frames.append(frame)
            rows.append(_log_row(self.name, frame, spec))
            exposure = next_exposure_auto(exposure, fullframe_mean(frame), self.target, self.step_gain,
                                          sensor.t_min, sensor.t_max)
        return StrategyRun(self.name, frames, rows, emulated=True)


class AdaptiveTriplet(ExposureStrategy):
    kind = 'adaptive'

    def __init__(self, controller=None, name='adaptive'):
        super(AdaptiveTriplet, self).__init__(name)
        self.controller = controller or ControllerConfig()

    def describe(self):
        return dict(super(AdaptiveTriplet, self).describe(), i_target=self.controller.i_target,
                    initial_bracket=list(self.controller.initial_bracket),
                    buffer_capacity=self.controller.buffer_capacity)

    def emit(self, cycle):
        return cycle.frame_opt

    def run(self, spec, sensor):
        if sensor.t_max > 1000.0 / spec.cycle_rate + 1e-9:
            raise DomainError('sensor t_max {} ms exceeds the {:.1f} ms triplet slot'.format(
                sensor.t_max, 1000.0 / spec.cycle_rate))
        state = ControllerState.initial(self.controller)
        frames, rows, cycles = [], [], []
        for k in range(frame_count(spec)):
            cycle, state = run_cycle(state, spec, sensor, k / STREAM_RATE, self.controller, index=k)
            frame = self.emit(cycle)
            frames.append(frame)
            rows.append(_log_row(self.name, frame, spec))
            cycles.append(cycle.log_record())
        flagged = sum(1 for row in cycles if row['flags'])
        if flagged:
            logger.info('{}: {} of {} cycles raised flags'.format(self.name, flagged, len(cycles)))
        return StrategyRun(self.name, frames, rows, cycles)


class AdaptiveTripletMerf(AdaptiveTriplet):
    kind = 'adaptive-merf'

    def __init__(self, controller=None, fusion=None, name='adaptive-merf'):
        super(AdaptiveTripletMerf, self).__init__(controller, name)
        self.fusion = fusion or FusionConfig()

    def describe(self):
        return dict(super(AdaptiveTripletMerf, self).describe(), fusion_mode=self.fusion.mode,
                    tau_low=self.fusion.tau_low, tau_high=self.fusion.tau_high)

    def emit(self, cycle):
        return fuse(cycle.frame_low, cycle.frame_high, cycle.frame_opt, self.fusion)


def run_strategy(strategy, spec, sensor):
    logger.debug('running {} on {}'.format(strategy.name, spec.name))
    return strategy.run(spec, sensor)


# names usable in experiment configs and on the command line
STANDARD_STRATEGIES = ('fixed-short', 'fixed-long', 'auto', 'adaptive', 'adaptive-merf')


def build_strategy(entry):
    """Strategy from a config entry: a standard name or a mapping with a ``kind``.

    Raises:
        ConfigError -- If the entry names no known strategy or carries bad settings.
    """
    if isinstance(entry, six.string_types):
        entry = {'kind': entry}
    if not isinstance(entry, dict) or 'kind' not in entry:
        raise ConfigError('strategy entry needs a kind: {!r}'.format(entry))
    settings = dict(entry)
    kind = settings.pop('kind')
    name = settings.pop('name', None)
    try:
        strategy = _build(kind, name, settings)
    except (TypeError, KeyError, DomainError) as e:
        raise ConfigError('bad settings for strategy {}: {}'.format(kind, e))
    if strategy is None:
        raise ConfigError('unknown strategy kind {}, expected one of {} or fixed'.format(kind, STANDARD_STRATEGIES))
    if settings:
        raise ConfigError('unknown settings for strategy {}: {}'.format(kind, sorted(settings)))
    return strategy


def _build(kind, name, settings):
    if kind == 'fixed-short':
        return FixedExposure(settings.pop('exposure', 8.0), name or 'fixed-short')
    if kind == 'fixed-long':
        return FixedExposure(settings.pop('exposure', 22.0), name or 'fixed-long')
    if kind == 'fixed':
        return FixedExposure(settings.pop('exposure'), name)
    if kind == 'auto':
        options = dict(settings)
        settings.clear()
        return AutoFullFrameExposure(name=name or 'auto', **options)
    if kind in ('adaptive', 'adaptive-merf'):
        weather = settings.pop('weather', 'overcast')
        controller = ControllerConfig.for_weather(weather, **_tuples(settings.pop('controller', {})))
        if kind == 'adaptive':
            return AdaptiveTriplet(controller, name or 'adaptive')
        fusion = FusionConfig(**settings.pop('fusion', {}))
        return AdaptiveTripletMerf(controller, fusion, name or 'adaptive-merf')
    return None


def _tuples(settings):
    return {key: tuple(value) if isinstance(value, list) else value for key, value in settings.items()}
