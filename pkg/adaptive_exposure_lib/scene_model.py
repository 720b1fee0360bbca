# coding=utf-8
#
"""Synthetic in-cabin scene: incident light over time and space, skin reflectance and the pulse it carries.

Radiance of a patch is ``L(x, y, t) * R(x, y, t)`` with

    L(x, y, t) = base_level * event_factor(t) * g(x, y, t)
    R(x, y, t) = R0(x, y) * (1 + a_c * s(phase(t)))      on skin (ROI) patches
    R(x, y, t) = R0(x, y)                                 on background patches

where ``phase(t) = 2 * pi * integral of f_hr`` and ``a_c`` is the relative pulse
amplitude of channel c (R, G, B).
"""
import math
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

logger = logging.getLogger(__name__)

EVENT_KINDS = ('step', 'ramp', 'sinusoid', 'shadow-flicker')
WAVEFORMS = ('sinusoid', 'dicrotic')
CHANNELS = ('R', 'G', 'B')
TIME_TOLERANCE = 1e-9

# green carries the strongest pulse
CHANNEL_PULSATILITY = (0.3, 1.0, 0.6)
DEFAULT_PULSE_AMPLITUDE = tuple(0.02 * weight for weight in CHANNEL_PULSATILITY)
MAX_RELATIVE_PULSE = 0.1


def _dicrotic_raw(phase):
    return np.sin(phase) + 0.35 * np.sin(2.0 * phase + 0.8)


_DICROTIC_PEAK = float(np.max(_dicrotic_raw(np.linspace(0.0, 2.0 * np.pi, 8192, endpoint=False))))


def pulse_waveform(phase, kind='sinusoid'):
    """Unit-peak, zero-mean pulse shape evaluated at ``phase`` (radians)."""
    phase = np.asarray(phase, dtype=float)
    if kind == 'sinusoid':
        return np.sin(phase)
    if kind == 'dicrotic':
        return _dicrotic_raw(phase) / _DICROTIC_PEAK
    raise DomainError('unknown waveform {}'.format(kind))


@dataclass(frozen=True)
class IlluminationEvent:
    """One multiplicative change of the incident light.

    A ``duration`` of zero or less makes step, sinusoid and shadow-flicker events
    permanent; a ramp with no duration degenerates to a step.
    """
    start: float
    kind: str
    magnitude: float
    duration: float = 0.0
    period: float = 0.5
    duty: float = 0.5

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise DomainError('unknown event kind {}, expected one of {}'.format(self.kind, EVENT_KINDS))
        if self.start < 0:
            raise DomainError('event start must be >= 0, got {}'.format(self.start))
        if self.magnitude < 0:
            raise DomainError('event magnitude must be >= 0, got {}'.format(self.magnitude))
        if self.kind == 'sinusoid' and self.magnitude > 1:
            raise DomainError('sinusoid depth {} would drive the light negative'.format(self.magnitude))
        if self.period <= 0:
            raise DomainError('event period must be > 0, got {}'.format(self.period))
        if not 0 < self.duty < 1:
            raise DomainError('event duty must be in (0, 1), got {}'.format(self.duty))

    @property
    def end(self):
        return self.start + self.duration if self.duration > 0 else math.inf

    def factor(self, t):
        t = np.asarray(t, dtype=float)
        active = (t >= self.start) & (t < self.end)
        if self.kind == 'step':
            return np.where(active, self.magnitude, 1.0)
        if self.kind == 'ramp':
            if self.duration <= 0:
                return np.where(t >= self.start, self.magnitude, 1.0)
            progress = np.clip((t - self.start) / self.duration, 0.0, 1.0)
            return 1.0 + (self.magnitude - 1.0) * progress
        if self.kind == 'sinusoid':
            return np.where(active, 1.0 + self.magnitude * np.sin(2.0 * np.pi * (t - self.start) / self.period), 1.0)
        # shadow-flicker: the shadow opens each period
        phase = np.mod(t - self.start, self.period)
        return np.where(active & (phase < self.duty * self.period), self.magnitude, 1.0)

    def breakpoints(self, t0, t1):
        """Points in (t0, t1) where the factor is discontinuous or kinked."""
        points = [self.start, self.end]
        if self.kind == 'shadow-flicker':
            first, last = max(t0, self.start), min(t1, self.end)
            if first < last:
                k0 = int(math.floor((first - self.start) / self.period))
                k1 = int(math.ceil((last - self.start) / self.period))
                for k in range(k0, k1 + 1):
                    edge = self.start + k * self.period
                    points.extend((edge, edge + self.duty * self.period))
        return [p for p in points if t0 < p < t1]

    def varies_within(self, t0, t1):
        if self.kind not in ('ramp', 'sinusoid') or (self.kind == 'ramp' and self.duration <= 0):
            return False
        return t0 < self.end and t1 > self.start


@dataclass(frozen=True, eq=False)
class SpatialGainMap:
    """Per-patch multiplicative gain g(x, y), active on [start, end) (visor shadow, side glare)."""
    gain: np.ndarray
    start: float = 0.0
    end: float = math.inf

    def __post_init__(self):
        gain = np.array(self.gain, dtype=float)
        if gain.ndim != 2:
            raise DomainError('spatial gain must be a 2-D grid, got shape {}'.format(gain.shape))
        if np.any(gain < 0) or not np.all(np.isfinite(gain)):
            raise DomainError('spatial gain must be finite and >= 0')
        if self.end <= self.start:
            raise DomainError('spatial gain schedule is empty: [{}, {})'.format(self.start, self.end))
        gain.setflags(write=False)
        object.__setattr__(self, 'gain', gain)

    def at(self, t):
        if self.start <= t < self.end:
            return self.gain
        return np.ones_like(self.gain)

    def breakpoints(self, t0, t1):
        return [p for p in (self.start, self.end) if t0 < p < t1]


@dataclass(frozen=True, eq=False)
class IlluminationField:
    base_level: float
    events: tuple = ()
    spatial_map: SpatialGainMap = None

    def __post_init__(self):
        if not self.base_level > 0:
            raise DomainError('base_level must be > 0, got {}'.format(self.base_level))
        object.__setattr__(self, 'events', tuple(sorted(self.events, key=lambda e: e.start)))

    def event_factor(self, t):
        factor = np.ones_like(np.asarray(t, dtype=float))
        for event in self.events:
            factor = factor * event.factor(t)
        return factor

    def gain_map(self, t, grid):
        if self.spatial_map is None:
            return np.ones(grid)
        return self.spatial_map.at(t)

    def breakpoints(self, t0, t1):
        points = []
        for event in self.events:
            points.extend(event.breakpoints(t0, t1))
        if self.spatial_map is not None:
            points.extend(self.spatial_map.breakpoints(t0, t1))
        return points

    def varies_within(self, t0, t1):
        return any(event.varies_within(t0, t1) for event in self.events)


@dataclass(frozen=True)
class HeartRateProfile:
    """Piecewise-linear heart rate in Hz given as ``((t, hz), ...)`` knots, held constant outside them."""
    knots: tuple

    def __post_init__(self):
        knots = tuple((float(t), float(hz)) for t, hz in self.knots)
        if not knots:
            raise DomainError('heart-rate profile needs at least one knot')
        times = [t for t, _ in knots]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError('heart-rate knot times must be strictly increasing')
        if any(hz <= 0 for _, hz in knots):
            raise DomainError('heart rate must be > 0 Hz')
        object.__setattr__(self, 'knots', knots)

    @classmethod
    def constant(cls, hz):
        return cls(((0.0, hz),))

    @classmethod
    def ramp(cls, t0, hz0, t1, hz1):
        return cls(((t0, hz0), (t1, hz1)))

    @property
    def _times(self):
        return np.array([t for t, _ in self.knots])

    @property
    def _rates(self):
        return np.array([hz for _, hz in self.knots])

    def frequency(self, t):
        return np.interp(t, self._times, self._rates)

    def phase(self, t):
        """2*pi times the integral of f_hr from 0 to t (t >= 0)."""
        t = np.asarray(t, dtype=float)
        times = self._times
        nodes = np.unique(np.concatenate(([0.0], times[times > 0])))
        rates = self.frequency(nodes)
        cumulative = np.concatenate(([0.0], np.cumsum(np.diff(nodes) * (rates[1:] + rates[:-1]) / 2.0)))
        idx = np.clip(np.searchsorted(nodes, t, side='right') - 1, 0, len(nodes) - 1)
        area = cumulative[idx] + (t - nodes[idx]) * (rates[idx] + self.frequency(t)) / 2.0
        return 2.0 * np.pi * area

    def breakpoints(self, t0, t1):
        return [t for t, _ in self.knots if t0 < t < t1]

    def is_constant_within(self, t0, t1):
        return not self.breakpoints(t0, t1) and self.frequency(t0) == self.frequency(t1)


@dataclass(frozen=True, eq=False)
class SkinReflectanceField:
    """Static reflectance R0 per patch plus the relative pulse amplitude of each channel."""
    r0_map: np.ndarray
    pulse_amplitude: tuple = DEFAULT_PULSE_AMPLITUDE
    hr_profile: HeartRateProfile = field(default_factory=lambda: HeartRateProfile.constant(1.2))
    waveform: str = 'sinusoid'

    def __post_init__(self):
        r0 = np.array(self.r0_map, dtype=float)
        if r0.ndim != 2:
            raise DomainError('r0_map must be a 2-D grid, got shape {}'.format(r0.shape))
        if np.any(r0 <= 0) or np.any(r0 > 1):
            raise DomainError('static reflectance must lie in (0, 1]')
        r0.setflags(write=False)
        object.__setattr__(self, 'r0_map', r0)
        amplitude = tuple(float(a) for a in self.pulse_amplitude)
        if len(amplitude) != len(CHANNELS):
            raise DomainError('pulse_amplitude needs one value per channel {}'.format(CHANNELS))
        if any(a < 0 or a > MAX_RELATIVE_PULSE for a in amplitude):
            raise DomainError('relative pulse amplitude must lie in [0, {}]'.format(MAX_RELATIVE_PULSE))
        object.__setattr__(self, 'pulse_amplitude', amplitude)
        if self.waveform not in WAVEFORMS:
            raise DomainError('unknown waveform {}'.format(self.waveform))

    def pulse(self, t):
        return pulse_waveform(self.hr_profile.phase(t), self.waveform)


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    duration: float
    grid: tuple
    illumination: IlluminationField
    skin: SkinReflectanceField
    roi: tuple
    cycle_rate: float = 45.0
    noise_seed: int = 0
    name: str = 'scenario'

    def __post_init__(self):
        if not self.duration > 0:
            raise DomainError('duration must be > 0, got {}'.format(self.duration))
        if not self.cycle_rate > 0:
            raise DomainError('cycle_rate must be > 0, got {}'.format(self.cycle_rate))
        grid = tuple(int(n) for n in self.grid)
        if len(grid) != 2 or min(grid) < 1:
            raise DomainError('grid must be (rows, cols) with both >= 1, got {}'.format(self.grid))
        object.__setattr__(self, 'grid', grid)
        if self.skin.r0_map.shape != grid:
            raise DomainError('r0_map shape {} does not match grid {}'.format(self.skin.r0_map.shape, grid))
        sm = self.illumination.spatial_map
        if sm is not None and sm.gain.shape != grid:
            raise DomainError('spatial gain shape {} does not match grid {}'.format(sm.gain.shape, grid))
        roi = []
        for patch in self.roi:
            row, col = (int(v) for v in patch)
            if not (0 <= row < grid[0] and 0 <= col < grid[1]):
                raise DomainError('roi patch {} lies outside grid {}'.format(patch, grid))
            if (row, col) not in roi:
                roi.append((row, col))
        if not roi:
            raise DomainError('roi must not be empty')
        object.__setattr__(self, 'roi', tuple(roi))
        mask = np.zeros(grid, dtype=bool)
        for row, col in roi:
            mask[row, col] = True
        mask.setflags(write=False)
        object.__setattr__(self, 'skin_mask', mask)

    def check_time(self, t):
        if not (0.0 <= t <= self.duration + TIME_TOLERANCE):
            raise DomainError('time {} outside scenario [0, {}]'.format(t, self.duration))

    def check_patch(self, x, y):
        if not (0 <= x < self.grid[0] and 0 <= y < self.grid[1]):
            raise DomainError('patch ({}, {}) outside grid {}'.format(x, y, self.grid))

    def breakpoints(self, t0, t1):
        """Sorted points inside (t0, t1) where light or heart rate changes abruptly."""
        points = self.illumination.breakpoints(t0, t1) + self.skin.hr_profile.breakpoints(t0, t1)
        return sorted(set(points))


def scene_radiance(spec, x, y, t, channel=1):
    """Radiance L*R of one patch at time t.

    Arguments:
        spec {ScenarioSpec} -- The scenario
        x {int} -- Patch row
        y {int} -- Patch column
        t {float} -- Time in seconds

    Keyword Arguments:
        channel {int} -- 0, 1, 2 for R, G, B (default: {1})

    Raises:
        DomainError -- If the patch or the time lies outside the scenario, or channel is not 0-2.

    Returns:
        float -- Illuminance times reflectance
    """
    spec.check_patch(x, y)
    spec.check_time(t)
    if channel not in (0, 1, 2):
        raise DomainError('channel must be 0, 1 or 2, got {}'.format(channel))
    illuminance = spec.illumination.base_level * float(spec.illumination.event_factor(t)) \
        * float(spec.illumination.gain_map(t, spec.grid)[x, y])
    reflectance = spec.skin.r0_map[x, y]
    if spec.skin_mask[x, y]:
        reflectance = reflectance * (1.0 + spec.skin.pulse_amplitude[channel] * float(spec.skin.pulse(t)))
    return illuminance * reflectance


def ground_truth_hr(spec, t):
    """Reference heart rate in bpm at time t (closed interval [0, duration])."""
    spec.check_time(t)
    return 60.0 * float(spec.skin.hr_profile.frequency(t))
