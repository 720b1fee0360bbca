# coding=utf-8
#
"""Heart-rate accuracy metrics: MAE, success rate, spectral SNR and empirical (C)CDFs."""
import math
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import DomainError

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 5.0
SNR_BAND = (0.7, 4.0)
SNR_HALFWIDTH = 0.1
FREQ_TOLERANCE = 1e-9
_POWER_FLOOR = 1e-30


@dataclass(frozen=True, eq=False)
class MetricsReport:
    mae: float
    success_rate: float
    snr: float
    per_window: list = field(default_factory=list)
    cdf_points: list = field(default_factory=list)
    skipped_snr_windows: int = 0

    def as_dict(self):
        return {
            'mae': self.mae,
            'success_rate': self.success_rate,
            'snr': self.snr,
            'windows': len(self.per_window),
            'skipped_snr_windows': self.skipped_snr_windows,
        }


def align(est, ref):
    """Reference bpm linearly interpolated onto the estimate timestamps."""
    if len(est) == 0 or len(ref) == 0:
        raise DomainError('cannot compare empty heart-rate series')
    return np.interp(est.times, ref.times, ref.bpm)


def abs_errors(est, ref):
    return np.abs(est.bpm - align(est, ref))


def mae(est, ref):
    """Mean absolute heart-rate error in bpm."""
    return float(np.mean(abs_errors(est, ref)))


def success_rate(est, ref, tol=DEFAULT_TOLERANCE):
    """Percent of estimates within ``tol`` bpm of the reference, boundary included."""
    errors = abs_errors(est, ref)
    return 100.0 * float(np.count_nonzero(errors <= tol)) / len(errors)


def per_window(est, ref):
    reference = align(est, ref)
    return [(float(t), float(e), float(r), abs(float(e) - float(r)))
            for t, e, r in zip(est.times, est.bpm, reference)]


def _window_snr(segment, rate, f_ref, band, halfwidth):
    freqs, power = signal.periodogram(segment, fs=rate, window='boxcar', nfft=len(segment), detrend='constant')
    in_band = (freqs >= band[0] - FREQ_TOLERANCE) & (freqs <= band[1] + FREQ_TOLERANCE)
    near = (np.abs(freqs - f_ref) <= halfwidth + FREQ_TOLERANCE) | \
        (np.abs(freqs - 2.0 * f_ref) <= halfwidth + FREQ_TOLERANCE)
    wanted = float(power[in_band & near].sum())
    rest = float(power[in_band & ~near].sum())
    return 10.0 * math.log10((wanted + _POWER_FLOOR) / (rest + _POWER_FLOOR))


def snr_db(wave, ref_hr, window_len=10.0, hop=5.0, band=SNR_BAND, halfwidth=SNR_HALFWIDTH):
    """Mean per-window SNR of the pulse wave around the reference rate and its first harmonic.

    Arguments:
        wave {PulseWave} -- The spliced pulse
        ref_hr {HRSeries} -- Reference heart rate in bpm

    Keyword Arguments:
        window_len {float} -- Window in s (default: {10.0})
        hop {float} -- Window step in s (default: {5.0})
        band {tuple} -- Evaluated band in Hz (default: {(0.7, 4.0)})
        halfwidth {float} -- Half width of each signal band in Hz (default: {0.1})

    Raises:
        DomainError -- If the wave is shorter than one window or every window is skipped.

    Returns:
        (float, int) -- Mean SNR in dB and the number of skipped windows
    """
    if len(ref_hr) == 0:
        raise DomainError('reference heart rate is empty')
    width = int(round(window_len * wave.rate))
    step = max(1, int(round(hop * wave.rate)))
    if width > len(wave.samples):
        raise DomainError('wave of {} samples is shorter than one {} s window'.format(len(wave.samples), window_len))
    values, skipped = [], 0
    for start in range(0, len(wave.samples) - width + 1, step):
        center = float(wave.timestamps[start]) + 0.5 * width / wave.rate
        f_ref = float(np.interp(center, ref_hr.times, ref_hr.bpm)) / 60.0
        if not band[0] / 2.0 <= f_ref <= band[1]:
            skipped += 1
            logger.warning('reference {:.3f} Hz at t={:.1f} outside the SNR band, window skipped'.format(f_ref, center))
            continue
        values.append(_window_snr(wave.samples[start:start + width], wave.rate, f_ref, band, halfwidth))
    if not values:
        raise DomainError('every SNR window was skipped')
    return float(np.mean(values)), skipped


def cdf_points(values, direction='cdf'):
    """Empirical CDF P(X <= x) or CCDF P(X >= x) at the sorted distinct sample values."""
    data = np.sort(np.asarray(list(values), dtype=float))
    if data.size == 0:
        raise DomainError('cannot build a distribution of no values')
    if not np.all(np.isfinite(data)):
        raise DomainError('distribution values must be finite')
    xs = np.unique(data)
    if direction == 'cdf':
        probability = np.searchsorted(data, xs, side='right') / data.size
    elif direction == 'ccdf':
        probability = (data.size - np.searchsorted(data, xs, side='left')) / data.size
    else:
        raise DomainError('direction must be cdf or ccdf, got {}'.format(direction))
    return [(float(x), float(p)) for x, p in zip(xs, probability)]


def evaluate(est, ref, wave, tol=DEFAULT_TOLERANCE, window_len=10.0, hop=5.0):
    """MetricsReport of one run."""
    rows = per_window(est, ref)
    snr, skipped = snr_db(wave, ref, window_len, hop)
    errors = [row[3] for row in rows]
    return MetricsReport(
        mae=float(np.mean(errors)),
        success_rate=success_rate(est, ref, tol),
        snr=snr,
        per_window=rows,
        cdf_points=cdf_points(errors, 'cdf'),
        skipped_snr_windows=skipped,
    )
