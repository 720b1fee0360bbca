# coding=utf-8
#
"""Camera simulation: integrate scene radiance over the exposure, then add read noise, quantize and clip."""
import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, PreconditionError

logger = logging.getLogger(__name__)

STREAM_TAGS = ('low', 'high', 'opt', 'fused', 'auto', 'fixed')
# 1000/45 ms slot at the triplet cadence, rounded down
TRIPLET_T_MAX = 22.2
# single-stream 15 fps ceiling
SINGLE_STREAM_T_MAX = 1000.0 / 15.0

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True)
class SensorConfig:
    responsivity: float = 1.0
    bit_depth: int = 8
    t_min: float = 0.1
    t_max: float = TRIPLET_T_MAX
    read_noise_sigma: float = 0.0
    quantize: bool = True
    channel_gains: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if not self.responsivity > 0:
            raise DomainError('responsivity must be > 0, got {}'.format(self.responsivity))
        if not 1 <= self.bit_depth <= 16:
            raise DomainError('bit_depth must lie in [1, 16], got {}'.format(self.bit_depth))
        if not 0 < self.t_min < self.t_max:
            raise DomainError('need 0 < t_min < t_max, got {} / {}'.format(self.t_min, self.t_max))
        if self.read_noise_sigma < 0:
            raise DomainError('read_noise_sigma must be >= 0')
        gains = tuple(float(g) for g in self.channel_gains)
        if len(gains) != 3 or any(g <= 0 for g in gains):
            raise DomainError('channel_gains needs three positive values')
        object.__setattr__(self, 'channel_gains', gains)

    @property
    def i_max(self):
        return float(2 ** self.bit_depth - 1)

    def with_ceiling(self, t_max):
        """Same sensor driven at another frame cadence, i.e. another exposure ceiling."""
        return replace(self, t_max=t_max)


@dataclass(frozen=True, eq=False)
class Frame:
    """Per-patch codes of one exposure, shaped (rows, cols, 3)."""
    intensities: np.ndarray
    exposure_time: float
    timestamp: float
    stream_tag: str
    i_max: float = 255.0

    def __post_init__(self):
        codes = np.array(self.intensities, dtype=float)
        if codes.ndim != 3 or codes.shape[2] != 3:
            raise DomainError('frame intensities must be shaped (rows, cols, 3), got {}'.format(codes.shape))
        if np.any(codes < 0) or np.any(codes > self.i_max) or not np.all(np.isfinite(codes)):
            raise DomainError('frame intensities must lie in [0, {}]'.format(self.i_max))
        if self.stream_tag not in STREAM_TAGS:
            raise DomainError('unknown stream tag {}'.format(self.stream_tag))
        if not self.exposure_time > 0:
            raise DomainError('exposure_time must be > 0')
        codes.setflags(write=False)
        object.__setattr__(self, 'intensities', codes)

    @property
    def grid(self):
        return self.intensities.shape[:2]

    def patch_means(self):
        """Channel-averaged code of every patch."""
        return self.intensities.mean(axis=2)

    def retag(self, stream_tag):
        return replace(self, stream_tag=stream_tag)


def round_half_away(values):
    values = np.asarray(values, dtype=float)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def _pieces(spec, t0, t1):
    """Split [t0, t1] at light/heart-rate breakpoints and integrate each piece.

    Yields (gain_map, e0, e1) where e0 is the integral of the event factor and e1
    the integral of event factor times pulse shape, both in seconds.
    """
    light = spec.illumination
    skin = spec.skin
    hr = skin.hr_profile
    edges = [t0] + spec.breakpoints(t0, t1) + [t1]
    for a, b in zip(edges, edges[1:]):
        if b <= a:
            continue
        mid = 0.5 * (a + b)
        width = b - a
        gain = light.gain_map(mid, spec.grid)
        smooth_light = light.varies_within(a, b)
        if not smooth_light and skin.waveform == 'sinusoid' and hr.is_constant_within(a, b):
            # closed form: the pulse integral is a sinc-attenuated sample at the piece center
            level = float(light.event_factor(mid))
            freq = float(hr.frequency(mid))
            e0 = level * width
            e1 = level * width * np.sinc(freq * width) * np.sin(float(hr.phase(mid)))
        else:
            tau = mid + 0.5 * width * _GAUSS_NODES
            weights = 0.5 * width * _GAUSS_WEIGHTS
            level = light.event_factor(tau)
            e0 = float(np.sum(weights * level))
            e1 = float(np.sum(weights * level * skin.pulse(tau)))
        yield gain, e0, e1


def exposure_energy(spec, sensor, t, T):
    """Noise-free, unclipped sensor response K * integral of L*R over [t, t + T].

    Arguments:
        spec {ScenarioSpec} -- The scenario
        sensor {SensorConfig} -- The camera
        t {float} -- Exposure start in seconds
        T {float} -- Exposure time in ms

    Returns:
        numpy.ndarray -- Response shaped (rows, cols, 3)
    """
    r0 = spec.skin.r0_map
    pulse = np.asarray(spec.skin.pulse_amplitude)[None, None, :] * spec.skin_mask[:, :, None]
    energy = np.zeros(spec.grid + (3,))
    for gain, e0, e1 in _pieces(spec, t, t + T / 1000.0):
        energy += (gain * r0)[:, :, None] * (e0 + pulse * e1)
    scale = sensor.responsivity * spec.illumination.base_level * 1000.0
    return energy * scale * np.asarray(sensor.channel_gains)[None, None, :]


def _noise_rng(spec, t, T):
    key = [spec.noise_seed & 0xFFFFFFFF, int(round(t * 1e6)), int(round(T * 1e4))]
    return np.random.default_rng(np.random.SeedSequence(key))


def capture(spec, sensor, t, T, stream_tag='opt'):
    """Expose the sensor for T ms starting at t and read out a frame.

    Arguments:
        spec {ScenarioSpec} -- The scenario
        sensor {SensorConfig} -- The camera
        t {float} -- Exposure start (frame timestamp) in seconds
        T {float} -- Exposure time in ms

    Keyword Arguments:
        stream_tag {str} -- Tag of the produced frame (default: {'opt'})

    Raises:
        PreconditionError -- If T is outside [t_min, t_max].
        DomainError -- If the exposure interval leaves the scenario.

    Returns:
        Frame -- The captured frame
    """
    if not sensor.t_min - 1e-12 <= T <= sensor.t_max + 1e-12:
        raise PreconditionError('exposure {} ms outside sensor bounds [{}, {}]'.format(T, sensor.t_min, sensor.t_max))
    spec.check_time(t)
    spec.check_time(t + T / 1000.0)
    raw = exposure_energy(spec, sensor, t, T)
    if sensor.read_noise_sigma > 0:
        raw = raw + _noise_rng(spec, t, T).normal(0.0, sensor.read_noise_sigma, raw.shape)
    if sensor.quantize:
        raw = round_half_away(raw)
    codes = np.clip(raw, 0.0, sensor.i_max)
    return Frame(codes, float(T), float(t), stream_tag, sensor.i_max)


def _roi_index(frame, roi):
    roi = list(roi)
    if not roi:
        raise DomainError('roi must not be empty')
    rows, cols = frame.grid
    for row, col in roi:
        if not (0 <= row < rows and 0 <= col < cols):
            raise DomainError('roi patch ({}, {}) outside grid {}'.format(row, col, frame.grid))
    return tuple(np.array(axis) for axis in zip(*roi))


def roi_mean(frame, roi):
    """Mean code of the ROI patches (all channels), i.e. mu_ROI."""
    return float(frame.intensities[_roi_index(frame, roi)].mean())


def fullframe_mean(frame):
    return float(frame.intensities.mean())


def saturated_patches(frame, roi):
    """Number of ROI patches with at least one clipped channel."""
    patches = frame.intensities[_roi_index(frame, roi)]
    return int(np.count_nonzero(np.any(patches >= frame.i_max, axis=1)))


def response_curve(spec, sensor, t, exposures, roi=None):
    """Sweep exposure at a fixed instant: list of (T, mu_ROI)."""
    exposures = [float(T) for T in exposures]
    if any(b <= a for a, b in zip(exposures, exposures[1:])):
        raise DomainError('exposures must be strictly increasing')
    roi = spec.roi if roi is None else roi
    curve = []
    for T in exposures:
        curve.append((T, roi_mean(capture(spec, sensor, t, T), roi)))
    logger.debug('response curve at t={}: {}'.format(t, curve))
    return curve
