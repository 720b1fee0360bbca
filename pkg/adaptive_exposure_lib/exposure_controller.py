# coding=utf-8
#
"""Triplet-frame adaptive exposure control.

Each cycle samples the face at a short (T_l) and a long (T_h) exposure, fits
the linear exposure -> intensity model ``I = k*T + b`` over a rolling buffer
of samples, inverts it for the target intensity, and captures the frame that
is kept for rPPG at that optimal exposure. The bracket (T_l, T_h) then follows
the new operating point.
"""
import math
import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import ClippedResponse, DegenerateAbscissa, DomainError, FitError, FlatResponse
from .sensor_model import capture, roi_mean

logger = logging.getLogger(__name__)

UNDEREXPOSED_AT_LIMIT = 'UnderexposedAtLimit'
OVEREXPOSED_AT_LIMIT = 'OverexposedAtLimit'
FLAT_RESPONSE = 'FlatResponse'
DEGENERATE_ABSCISSA = 'DegenerateAbscissa'
SATURATED = 'Saturated'
OUTLIER_PURGE = 'OutlierPurge'
CLIPPED = 'Clipped'

CYCLE_LOG_COLUMNS = ('cycle_index', 't', 'T_l', 'I_l', 'T_h', 'I_h', 'k', 'b', 'T_opt', 'mu_opt', 'flags')

# operating brackets per weather
WEATHER_PRESETS = {
    'overcast': {'initial_bracket': (8.0, 22.0)},
    'sunny': {'initial_bracket': (5.0, 16.0), 'bracket_high_bounds': (15.0, 16.0)},
}


@dataclass(frozen=True)
class ExposureSample:
    exposure: float
    intensity: float
    timestamp: float = 0.0


@dataclass(frozen=True)
class LinearFit:
    k: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.k) and math.isfinite(self.b)):
            raise DomainError('fit parameters must be finite, got k={} b={}'.format(self.k, self.b))

    def predict(self, exposure):
        return self.k * exposure + self.b


def _clamp(value, lower, upper):
    return min(max(value, lower), upper)


@dataclass(frozen=True)
class ControllerConfig:
    i_target: float = 140.0
    buffer_capacity: int = 2
    t_min: float = 0.1
    t_max: float = 22.2
    bracket_low_factor: float = 0.5
    bracket_high_factor: float = 1.5
    bracket_low_bounds: tuple = (5.0, 10.0)
    bracket_high_bounds: tuple = (15.0, 22.0)
    initial_bracket: tuple = (8.0, 22.0)
    slope_epsilon: float = 0.05
    outlier_residual: float = 20.0
    i_max: float = 255.0
    dark_floor: float = 1.0

    def __post_init__(self):
        if not 0 < self.i_target < self.i_max:
            raise DomainError('i_target must lie in (0, {}), got {}'.format(self.i_max, self.i_target))
        if self.buffer_capacity < 2:
            raise DomainError('buffer_capacity must be >= 2, got {}'.format(self.buffer_capacity))
        if not 0 < self.t_min < self.t_max:
            raise DomainError('need 0 < t_min < t_max')
        if not self.bracket_low_factor < 1 < self.bracket_high_factor:
            raise DomainError('bracket factors must straddle 1')
        for name in ('bracket_low_bounds', 'bracket_high_bounds', 'initial_bracket'):
            lower, upper = getattr(self, name)
            if not lower <= upper:
                raise DomainError('{} must be ordered, got {}'.format(name, getattr(self, name)))
        if not self.initial_bracket[0] < self.initial_bracket[1]:
            raise DomainError('initial bracket must satisfy T_l < T_h')
        if self.slope_epsilon <= 0 or self.outlier_residual <= 0:
            raise DomainError('slope_epsilon and outlier_residual must be > 0')
        if not 0 <= self.dark_floor < self.i_target:
            raise DomainError('dark_floor must lie in [0, i_target), got {}'.format(self.dark_floor))

    @classmethod
    def for_weather(cls, weather, **overrides):
        """Controller tuned with the bracket preset for 'overcast' or 'sunny' light."""
        if weather not in WEATHER_PRESETS:
            raise DomainError('unknown weather preset {}, expected one of {}'.format(weather, sorted(WEATHER_PRESETS)))
        settings = dict(WEATHER_PRESETS[weather])
        settings.update(overrides)
        return cls(**settings)


@dataclass(frozen=True)
class ControllerState:
    buffer: tuple = ()
    current_bracket: tuple = (8.0, 22.0)
    last_fit: LinearFit = None
    last_t_opt: float = None

    @classmethod
    def initial(cls, config):
        return cls(current_bracket=tuple(config.initial_bracket))


@dataclass(frozen=True, eq=False)
class TripletCycle:
    index: int
    t: float
    frame_low: object
    frame_high: object
    frame_opt: object
    sample_low: ExposureSample
    sample_high: ExposureSample
    fit: LinearFit
    t_opt: float
    mu_opt: float
    flags: frozenset

    def log_record(self):
        return {
            'cycle_index': self.index,
            't': self.t,
            'T_l': self.sample_low.exposure,
            'I_l': self.sample_low.intensity,
            'T_h': self.sample_high.exposure,
            'I_h': self.sample_high.intensity,
            'k': '' if self.fit is None else self.fit.k,
            'b': '' if self.fit is None else self.fit.b,
            'T_opt': self.t_opt,
            'mu_opt': self.mu_opt,
            'flags': '|'.join(sorted(self.flags)),
        }


def fit_two_point(low, high, slope_epsilon=0.05):
    """Line through a low and a high exposure sample.

    Raises:
        DegenerateAbscissa -- If both samples share one exposure.
        FlatResponse -- If |k| < slope_epsilon.

    Returns:
        LinearFit -- k = (I_h - I_l) / (T_h - T_l), b = I_l - k * T_l
    """
    if low.exposure == high.exposure:
        raise DegenerateAbscissa('both samples were exposed for {} ms'.format(low.exposure))
    k = (high.intensity - low.intensity) / (high.exposure - low.exposure)
    b = low.intensity - k * low.exposure
    if abs(k) < slope_epsilon:
        raise FlatResponse('slope {} below {}'.format(k, slope_epsilon))
    return LinearFit(k, b)


def fit_least_squares(buffer, slope_epsilon=0.05):
    """Least-squares line over the buffered samples; two samples reduce to fit_two_point."""
    samples = list(buffer)
    if len(samples) < 2:
        raise DomainError('least-squares fit needs at least 2 samples, got {}'.format(len(samples)))
    if len(samples) == 2:
        return fit_two_point(samples[0], samples[1], slope_epsilon)
    exposures = np.array([s.exposure for s in samples])
    intensities = np.array([s.intensity for s in samples])
    centered = exposures - exposures.mean()
    spread = float(np.dot(centered, centered))
    if spread == 0:
        raise DegenerateAbscissa('all {} samples were exposed for {} ms'.format(len(samples), exposures[0]))
    k = float(np.dot(centered, intensities - intensities.mean()) / spread)
    b = float(intensities.mean() - k * exposures.mean())
    if abs(k) < slope_epsilon:
        raise FlatResponse('slope {} below {}'.format(k, slope_epsilon))
    return LinearFit(k, b)


def fit_through_origin(sample, slope_epsilon=0.05):
    """Line through the origin and one sample (the sensor has no dark offset)."""
    k = sample.intensity / sample.exposure
    if k < slope_epsilon:
        raise FlatResponse('slope {} below {}'.format(k, slope_epsilon))
    return LinearFit(k, 0.0)


def is_clipped(sample, config):
    return sample.intensity >= config.i_max - 1


def linear_samples(buffer, config):
    """Samples inside the linear range: below the clipping ceiling and at or above the dark floor."""
    return tuple(s for s in buffer if config.dark_floor <= s.intensity and not is_clipped(s, config))


def fit_linear_range(buffer, config):
    """Fit the exposure response over the unclipped samples of the buffer.

    Two or more usable samples at distinct exposures get fit_least_squares. A
    single usable exposure gets fit_through_origin on its newest sample.

    Arguments:
        buffer {iterable} -- ExposureSamples in capture order
        config {ControllerConfig} -- Supplies i_max, dark_floor and slope_epsilon

    Raises:
        ClippedResponse -- If no sample lies in the linear range.
        FlatResponse -- If the usable samples show no slope.

    Returns:
        LinearFit -- The fitted line
    """
    usable = linear_samples(buffer, config)
    if not usable:
        raise ClippedResponse('all {} samples clipped or dark'.format(len(tuple(buffer))))
    if len({s.exposure for s in usable}) == 1:
        return fit_through_origin(usable[-1], config.slope_epsilon)
    return fit_least_squares(usable, config.slope_epsilon)


def clipping_exposure(fit, config):
    """Exposure at which the fitted face reaches i_max - 1, or None for a non-rising fit."""
    if fit is None or fit.k <= 0:
        return None
    return (config.i_max - 1 - fit.b) / fit.k


def compute_t_opt(fit, config):
    """Invert the fit for i_target and clamp to [t_min, t_max]."""
    if fit.k < config.slope_epsilon:
        raise FlatResponse('slope {} below {}'.format(fit.k, config.slope_epsilon))
    return _clamp((config.i_target - fit.b) / fit.k, config.t_min, config.t_max)


def update_bracket(state, t_opt, config, ceiling=None):
    """Place the next (T_l, T_h) around t_opt by the bracket factors, within the bracket bounds.

    Arguments:
        state {ControllerState} -- State whose bracket is replaced
        t_opt {float} -- Operating point in ms
        config {ControllerConfig} -- Factors and bounds

    Keyword Arguments:
        ceiling {float} -- Exposure in ms at which the face clips (default: {None} -- unknown)

    Returns:
        tuple -- (T_l, T_h) with T_l < T_h
    """
    low = _clamp(config.bracket_low_factor * t_opt, *config.bracket_low_bounds)
    high = _clamp(config.bracket_high_factor * t_opt, *config.bracket_high_bounds)
    if ceiling is not None and ceiling > t_opt and high >= ceiling:
        # bounds give way to the plain factors; T_h stays halfway short of the ceiling
        low = config.bracket_low_factor * t_opt
        high = min(config.bracket_high_factor * t_opt, 0.5 * (t_opt + ceiling))
    low = _clamp(low, config.t_min, config.t_max)
    high = _clamp(high, config.t_min, config.t_max)
    if low >= high:
        middle = 0.5 * (low + high)
        low = max(config.t_min, middle - 1.0)
        high = min(config.t_max, middle + 1.0)
    if (low, high) != tuple(state.current_bracket):
        logger.debug('bracket {} -> {}'.format(state.current_bracket, (low, high)))
    return low, high


def purge_on_outlier(state, fit, latest, config):
    """Drop all but the two newest samples when ``latest`` disagrees with the fit by more than outlier_residual.

    The prediction is clipped to [0, i_max] first, so a clipped reading agrees with any fit that also clips.
    """
    predicted = _clamp(fit.predict(latest.exposure), 0.0, config.i_max)
    residual = abs(latest.intensity - predicted)
    if residual > config.outlier_residual:
        logger.debug('residual {:.1f} at T={} purges {} samples'.format(
            residual, latest.exposure, len(state.buffer) - 2))
        return replace(state, buffer=tuple(state.buffer[-2:]))
    return state


def clipped_exposure(sample_low, sample_high, config):
    """Next T_opt and clipping ceiling when neither new sample is usable.

    Returns:
        tuple -- (T_opt, ceiling): scaled down from a clipped T_l, up from a dark T_h,
        or the geometric mean of a dark T_l and a clipped T_h
    """
    if is_clipped(sample_low, config):
        t_opt, ceiling = config.bracket_low_factor * sample_low.exposure, sample_low.exposure
    elif is_clipped(sample_high, config):
        t_opt, ceiling = math.sqrt(sample_low.exposure * sample_high.exposure), sample_high.exposure
    else:
        t_opt, ceiling = config.bracket_high_factor * sample_high.exposure, None
    return _clamp(t_opt, config.t_min, config.t_max), ceiling


def _effective_config(config, sensor):
    if config is None:
        config = ControllerConfig(t_max=sensor.t_max, i_max=sensor.i_max)
    if config.t_min < sensor.t_min or config.t_max > sensor.t_max:
        config = replace(config, t_min=max(config.t_min, sensor.t_min), t_max=min(config.t_max, sensor.t_max))
    return config


def run_cycle(state, spec, sensor, t, config=None, index=0):
    """Run one low / high / optimal triplet starting at t.

    Arguments:
        state {ControllerState} -- State before the cycle
        spec {ScenarioSpec} -- The scenario (its ROI is metered)
        sensor {SensorConfig} -- The camera
        t {float} -- Cycle start in seconds

    Keyword Arguments:
        config {ControllerConfig} -- Controller tuning (default: {None} -- defaults bounded by the sensor)
        index {int} -- Cycle number written to the log (default: {0})

    Returns:
        (TripletCycle, ControllerState) -- The three frames with their fit, and the state for the next cycle
    """
    config = _effective_config(config, sensor)
    slot = 1.0 / spec.cycle_rate
    t_low, t_high = state.current_bracket
    frame_low = capture(spec, sensor, t, t_low, 'low')
    frame_high = capture(spec, sensor, t + slot, t_high, 'high')
    sample_low = ExposureSample(t_low, roi_mean(frame_low, spec.roi), t)
    sample_high = ExposureSample(t_high, roi_mean(frame_high, spec.roi), t + slot)

    flags = set()
    if is_clipped(sample_high, config):
        flags.add(SATURATED)
    working = replace(state, buffer=(tuple(state.buffer) + (sample_low, sample_high))[-config.buffer_capacity:])

    fit = None
    ceiling = None
    try:
        fit = fit_linear_range(working.buffer, config)
        if len(working.buffer) > 2:
            purged = working
            for sample in (sample_low, sample_high):
                purged = purge_on_outlier(purged, fit, sample, config)
            if len(purged.buffer) < len(working.buffer):
                flags.add(OUTLIER_PURGE)
                working = purged
                fit = None
                fit = fit_linear_range(working.buffer, config)
        t_opt = compute_t_opt(fit, config)
        ceiling = clipping_exposure(fit, config)
    except ClippedResponse as e:
        fit = None
        flags.add(CLIPPED)
        t_opt, ceiling = clipped_exposure(sample_low, sample_high, config)
        logger.warning('cycle {} at t={:.3f}: {}, stepping T_opt to {:.3f}'.format(index, t, e, t_opt))
    except FitError as e:
        fit = None
        flags.add(DEGENERATE_ABSCISSA if isinstance(e, DegenerateAbscissa) else FLAT_RESPONSE)
        if state.last_t_opt is not None:
            t_opt = state.last_t_opt
        else:
            t_opt = _clamp(0.5 * (t_low + t_high), config.t_min, config.t_max)
        logger.warning('cycle {} at t={:.3f}: {}, holding T_opt={}'.format(index, t, e, t_opt))

    frame_opt = capture(spec, sensor, t + 2 * slot, t_opt, 'opt')
    mu_opt = roi_mean(frame_opt, spec.roi)
    if t_opt >= config.t_max and mu_opt < config.i_target:
        flags.add(UNDEREXPOSED_AT_LIMIT)
    if t_opt <= config.t_min and mu_opt > config.i_target:
        flags.add(OVEREXPOSED_AT_LIMIT)

    bracket = update_bracket(working, t_opt, config, ceiling)
    new_state = replace(working, current_bracket=bracket,
                        last_fit=fit if fit is not None else state.last_fit, last_t_opt=t_opt)
    cycle = TripletCycle(index, t, frame_low, frame_high, frame_opt, sample_low, sample_high,
                         fit, t_opt, mu_opt, frozenset(flags))
    return cycle, new_state
