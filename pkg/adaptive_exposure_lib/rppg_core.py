# coding=utf-8
#
"""rPPG pipeline: patch traces -> windowed POS pulse -> top-K patch fusion -> overlap-add -> heart rate."""
import math
import logging
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import DomainError

logger = logging.getLogger(__name__)

OPT_STREAM_RATE = 15.0
# projection axes of plane-orthogonal-to-skin
POS_AXES = np.array([[0.0, 1.0, -1.0], [-2.0, 1.0, 1.0]])
SAMPLING_TOLERANCE = 1e-6


@dataclass(frozen=True)
class PipelineConfig:
    window_len: float = 10.0
    hop: float = 5.0
    band: tuple = (0.6, 3.0)
    top_k: int = None
    nfft: int = 4096
    filter_order: int = 2
    peak_halfwidth: float = 0.1

    def __post_init__(self):
        if self.window_len < 4.0:
            raise DomainError('window_len must be >= 4 s, got {}'.format(self.window_len))
        if not 0 < self.hop <= self.window_len:
            raise DomainError('hop must lie in (0, window_len], got {}'.format(self.hop))
        low, high = self.band
        if not 0 < low < high:
            raise DomainError('band must satisfy 0 < low < high, got {}'.format(self.band))
        if self.top_k is not None and self.top_k < 1:
            raise DomainError('top_k must be >= 1')
        if self.nfft < 16 or self.filter_order < 1:
            raise DomainError('nfft must be >= 16 and filter_order >= 1')

    def k_for(self, patch_count):
        """Number of patches averaged: top_k, or a quarter of the ROI rounded up."""
        if self.top_k is not None:
            return min(self.top_k, patch_count)
        return max(1, int(math.ceil(0.25 * patch_count)))


@dataclass(frozen=True, eq=False)
class PatchTrace:
    patch_index: tuple
    samples: np.ndarray
    timestamps: np.ndarray
    rate: float

    def __len__(self):
        return len(self.timestamps)


@dataclass(frozen=True, eq=False)
class PulseWave:
    samples: np.ndarray
    rate: float
    timestamps: np.ndarray

    @property
    def duration(self):
        return len(self.samples) / self.rate

    def rows(self):
        return [(float(t), float(v)) for t, v in zip(self.timestamps, self.samples)]


@dataclass(frozen=True, eq=False)
class HRSeries:
    times: np.ndarray
    bpm: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        bpm = np.asarray(self.bpm, dtype=float)
        if times.shape != bpm.shape or times.ndim != 1:
            raise DomainError('times and bpm must be 1-D of equal length')
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'bpm', bpm)

    def __len__(self):
        return len(self.times)

    def rows(self):
        return [(float(t), float(hr)) for t, hr in zip(self.times, self.bpm)]


@dataclass(frozen=True, eq=False)
class PipelineResult:
    traces: list
    wave: PulseWave
    hr: HRSeries


def _samples(seconds, rate):
    return int(round(seconds * rate))


def _window_starts(length, width, step):
    if width > length:
        raise DomainError('window of {} samples longer than the {} available'.format(width, length))
    return list(range(0, length - width + 1, step))


def _stream_rate(timestamps):
    if len(timestamps) < 2:
        return OPT_STREAM_RATE
    steps = np.diff(timestamps)
    step = float(np.median(steps))
    if step <= 0 or np.max(np.abs(steps - step)) > SAMPLING_TOLERANCE:
        raise DomainError('frame stream is not uniformly sampled')
    return 1.0 / step


def extract_patch_traces(frames, grid, roi):
    """Concatenate the per-channel means of every ROI patch over the frame stream.

    Arguments:
        frames {list} -- Frames of one stream (opt or fused), in time order
        grid {tuple} -- (rows, cols) of the frames
        roi {iterable} -- (row, col) patches to trace

    Raises:
        DomainError -- If the stream is empty, not uniform, or the ROI leaves the grid.

    Returns:
        list -- One PatchTrace per ROI patch
    """
    frames = list(frames)
    if not frames:
        raise DomainError('cannot extract traces from an empty frame stream')
    grid = tuple(grid)
    roi = list(dict.fromkeys((int(r), int(c)) for r, c in roi))
    if not roi:
        raise DomainError('roi must not be empty')
    for row, col in roi:
        if not (0 <= row < grid[0] and 0 <= col < grid[1]):
            raise DomainError('roi patch ({}, {}) outside grid {}'.format(row, col, grid))
    for frame in frames:
        if frame.grid != grid:
            raise DomainError('frame grid {} does not match {}'.format(frame.grid, grid))
    timestamps = np.array([f.timestamp for f in frames])
    rate = _stream_rate(timestamps)
    stack = np.stack([f.intensities for f in frames])
    return [PatchTrace((row, col), stack[:, row, col, :], timestamps, rate) for row, col in roi]


def _bandpass(rate, band, order):
    low, high = band
    if not 0 < low < high < rate / 2.0:
        raise DomainError('band {} must lie within (0, {})'.format(band, rate / 2.0))
    return signal.butter(order, [low, high], btype='bandpass', fs=rate, output='sos')


def window_normalize_filter(trace, window_len, band=(0.6, 3.0), hop=None, order=2):
    """Cut a trace into windows, normalize each channel by its window mean and band-pass it.

    Returns:
        list -- (start_sample, array shaped (window_samples, 3)) per window
    """
    if window_len < 4.0:
        raise DomainError('window_len must be >= 4 s, got {}'.format(window_len))
    hop = window_len / 2.0 if hop is None else hop
    width = _samples(window_len, trace.rate)
    step = max(1, _samples(hop, trace.rate))
    sos = _bandpass(trace.rate, band, order)
    padlen = min(width - 1, int(3 * trace.rate))
    windows = []
    for start in _window_starts(len(trace), width, step):
        chunk = trace.samples[start:start + width].astype(float)
        means = chunk.mean(axis=0)
        normalized = np.zeros_like(chunk)
        lit = means > 0
        normalized[:, lit] = chunk[:, lit] / means[lit] - 1.0
        filtered = signal.sosfiltfilt(sos, normalized, axis=0, padtype='odd', padlen=padlen)
        windows.append((start, filtered))
    return windows


def pos_project(window):
    """Project a normalized (n, 3) RGB window onto the pulse direction; mean-centered output."""
    window = np.asarray(window, dtype=float)
    s1, s2 = POS_AXES @ window.T
    sigma2 = np.std(s2)
    if sigma2 > 0:
        pulse = s1 + (np.std(s1) / sigma2) * s2
    else:
        pulse = s1
    return pulse - pulse.mean()


def _spectrum(segment, rate, nfft):
    return signal.periodogram(segment, fs=rate, window='hann', nfft=max(nfft, len(segment)), detrend=False)


def peak_snr(segment, rate, band=(0.6, 3.0), nfft=4096, halfwidth=0.1):
    """Self-referenced SNR in dB: power near the dominant in-band peak over the rest of the band."""
    freqs, power = _spectrum(segment, rate, nfft)
    in_band = (freqs >= band[0]) & (freqs <= band[1])
    if not np.any(power[in_band] > 0):
        return -math.inf
    peak = freqs[in_band][np.argmax(power[in_band])]
    near = in_band & (np.abs(freqs - peak) <= halfwidth)
    wanted = float(power[near].sum())
    rest = float(power[in_band & ~near].sum())
    if rest <= 0:
        return math.inf
    return 10.0 * math.log10(wanted / rest)


def select_top_k(segments, k, rate=OPT_STREAM_RATE, band=(0.6, 3.0), nfft=4096):
    """Average the k highest-SNR segments after sign-aligning them to the best one.

    No reference heart rate is used; ranking is self-referenced.
    """
    segments = [np.asarray(s, dtype=float) for s in segments]
    if not segments:
        raise DomainError('select_top_k needs at least one segment')
    if k < 1:
        raise DomainError('k must be >= 1, got {}'.format(k))
    scores = np.array([peak_snr(s, rate, band, nfft) for s in segments])
    order = np.argsort(-scores, kind='stable')[:min(k, len(segments))]
    best = segments[order[0]]
    combined = np.zeros_like(best)
    for index in order:
        segment = segments[index]
        combined += -segment if np.dot(segment, best) < 0 else segment
    return combined / len(order)


def splice_overlap_add(segments, hop, rate=OPT_STREAM_RATE, start_time=0.0):
    """Hann-weighted overlap-add of successive windows spaced ``hop`` seconds apart.

    Raises:
        DomainError -- If segments differ in length or hop is not half the window.

    Returns:
        PulseWave -- The spliced waveform at ``rate``
    """
    segments = [np.asarray(s, dtype=float) for s in segments]
    if not segments:
        raise DomainError('nothing to splice')
    width = len(segments[0])
    if any(len(s) != width for s in segments):
        raise DomainError('inconsistent segment lengths {}'.format(sorted({len(s) for s in segments})))
    step = _samples(hop, rate)
    if len(segments) > 1 and 2 * step != width:
        raise DomainError('overlap-add needs hop = window/2, got {} of {} samples'.format(step, width))
    taper = signal.get_window('hann', width, fftbins=True)
    out = np.zeros(step * (len(segments) - 1) + width)
    for i, segment in enumerate(segments):
        out[i * step:i * step + width] += taper * segment
    timestamps = start_time + np.arange(len(out)) / rate
    return PulseWave(out, rate, timestamps)


def estimate_hr(wave, window_len=10.0, hop=5.0, band=(0.6, 3.0), nfft=4096):
    """Windowed spectral-peak heart rate.

    Arguments:
        wave {PulseWave} -- The spliced pulse

    Keyword Arguments:
        window_len {float} -- Analysis window in s (default: {10.0})
        hop {float} -- Window step in s (default: {5.0})
        band {tuple} -- Search band in Hz (default: {(0.6, 3.0)})
        nfft {int} -- Zero-padded FFT length (default: {4096})

    Raises:
        DomainError -- If the window is longer than the wave.

    Returns:
        HRSeries -- bpm per window, stamped at the window center
    """
    width = _samples(window_len, wave.rate)
    step = max(1, _samples(hop, wave.rate))
    times, rates = [], []
    for start in _window_starts(len(wave.samples), width, step):
        segment = wave.samples[start:start + width]
        freqs, power = _spectrum(segment - segment.mean(), wave.rate, nfft)
        in_band = (freqs >= band[0]) & (freqs <= band[1])
        if np.any(power[in_band] > 0):
            peak = float(freqs[in_band][np.argmax(power[in_band])])
        else:
            peak = float(band[0])
        times.append(float(wave.timestamps[start]) + 0.5 * width / wave.rate)
        rates.append(60.0 * peak)
    return HRSeries(np.array(times), np.array(rates))


def wave_spectrogram(wave, window_len=10.0, hop=5.0, f_max=4.0, nfft=4096):
    """(t, f, magnitude) triples of the windowed pulse spectrum up to f_max."""
    width = _samples(window_len, wave.rate)
    step = max(1, _samples(hop, wave.rate))
    taper = signal.get_window('hann', width)
    n = max(nfft, width)
    freqs = np.fft.rfftfreq(n, 1.0 / wave.rate)
    keep = freqs <= f_max
    triples = []
    for start in _window_starts(len(wave.samples), width, step):
        segment = wave.samples[start:start + width]
        magnitude = np.abs(np.fft.rfft(taper * (segment - segment.mean()), n=n))
        center = float(wave.timestamps[start]) + 0.5 * width / wave.rate
        triples.extend((center, float(f), float(m)) for f, m in zip(freqs[keep], magnitude[keep]))
    return triples


def extract_pulse(frames, grid, roi, config=None):
    """Run the extraction half of the pipeline and return (traces, PulseWave)."""
    config = config or PipelineConfig()
    traces = extract_patch_traces(frames, grid, roi)
    rate = traces[0].rate
    per_patch = [window_normalize_filter(trace, config.window_len, config.band,
                                         config.hop, config.filter_order) for trace in traces]
    k = config.k_for(len(traces))
    combined = []
    for windows in zip(*per_patch):
        projected = [pos_project(segment) for _, segment in windows]
        combined.append(select_top_k(projected, k, rate, config.band, config.nfft))
    wave = splice_overlap_add(combined, config.hop, rate, float(traces[0].timestamps[0]))
    logger.debug('pulse of {} windows from {} patches (top {})'.format(len(combined), len(traces), k))
    return traces, wave


def run_pipeline(frames, grid, roi, config=None):
    """Frames of one stream -> PipelineResult with the pulse wave and HR series."""
    config = config or PipelineConfig()
    traces, wave = extract_pulse(frames, grid, roi, config)
    hr = estimate_hr(wave, config.window_len, config.hop, config.band, config.nfft)
    return PipelineResult(traces, wave, hr)
