# coding=utf-8
#
import logging
import unittest

import numpy as np
import pytest

from adaptive_exposure_lib.errors import DomainError
from adaptive_exposure_lib.metrics_eval import align, cdf_points, evaluate, mae, per_window, snr_db, success_rate
from adaptive_exposure_lib.rppg_core import HRSeries, PulseWave
from tests.scenes import tone

# ========== Initial Logger ==========
logging.basicConfig(
    level=logging.DEBUG,
    format='[%(asctime)-15s][%(levelname)-5s][%(filename)s][%(funcName)s#%(lineno)d] %(message)s')
logger = logging.getLogger(__name__)
# ====================================


def _series(bpm, times=None):
    bpm = np.asarray(bpm, dtype=float)
    times = np.arange(len(bpm)) * 5.0 + 5.0 if times is None else times
    return HRSeries(times, bpm)


def _wave(samples, rate=15.0):
    return PulseWave(np.asarray(samples, dtype=float), rate, np.arange(len(samples)) / rate)


class ErrorTests(unittest.TestCase):
    def setUp(self):
        self.ref = _series([72.0, 72.0, 72.0])

    def test_mae(self):
        assert mae(_series([74.0, 76.0, 82.0]), self.ref) == pytest.approx(16.0 / 3.0)
        assert mae(self.ref, self.ref) == 0.0
        assert mae(_series([67.0, 77.0, 77.0]), self.ref) == 5.0

    def test_success_rate(self):
        assert success_rate(_series([74.0, 76.0, 82.0]), self.ref) == pytest.approx(200.0 / 3.0)
        assert success_rate(_series([74.0, 76.0, 82.0]), self.ref, tol=float('inf')) == 100.0

    def test_tolerance_is_inclusive(self):
        assert success_rate(_series([77.0]), _series([72.0])) == 100.0
        assert success_rate(_series([77.5]), _series([72.0])) == 0.0

    def test_reference_interpolated(self):
        ref = HRSeries([0.0, 10.0], [60.0, 80.0])
        est = HRSeries([5.0], [70.0])
        assert list(align(est, ref)) == [70.0]
        assert per_window(est, ref) == [(5.0, 70.0, 70.0, 0.0)]

    def test_empty(self):
        with pytest.raises(DomainError):
            mae(HRSeries([], []), self.ref)


class SnrTests(unittest.TestCase):
    def setUp(self):
        self.ref = HRSeries([0.0, 200.0], [72.0, 72.0])

    def test_pure_tone(self):
        _, x = tone(1.2, 30.0)
        value, skipped = snr_db(_wave(x), self.ref)
        assert value >= 30.0
        assert skipped == 0

    def test_equal_out_of_band_tone(self):
        _, pulse = tone(1.2, 30.0)
        _, other = tone(2.0, 30.0)
        value, _ = snr_db(_wave(pulse + other), self.ref)
        assert value == pytest.approx(0.0, abs=0.1)

    def test_white_noise(self):
        noise = np.random.default_rng(9).normal(0, 1, 1800)
        value, _ = snr_db(_wave(noise), self.ref)
        assert value <= -5.0

    def test_windows_outside_band_are_skipped(self):
        _, x = tone(1.2, 30.0)
        ref = HRSeries([0.0, 14.999, 15.0, 30.0], [20.0, 20.0, 72.0, 72.0])
        value, skipped = snr_db(_wave(x), ref)
        assert skipped == 2
        assert value >= 30.0
        with pytest.raises(DomainError):
            snr_db(_wave(x), HRSeries([0.0, 30.0], [20.0, 20.0]))

    def test_short_wave(self):
        with pytest.raises(DomainError):
            snr_db(_wave(np.zeros(100)), self.ref)


class DistributionTests(unittest.TestCase):
    def test_cdf(self):
        assert cdf_points([3.0, 1.0, 2.0, 2.0]) == [(1.0, 0.25), (2.0, 0.75), (3.0, 1.0)]

    def test_ccdf(self):
        assert cdf_points([3.0, 1.0, 2.0, 2.0], 'ccdf') == [(1.0, 1.0), (2.0, 0.75), (3.0, 0.25)]

    def test_monotone(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            size = int(rng.integers(1, 60))
            # rounding leaves ties in most arrays
            values = np.round(rng.exponential(4.0, size), int(rng.integers(0, 3)))
            cdf = cdf_points(values)
            ccdf = cdf_points(values, 'ccdf')
            xs = [x for x, _ in cdf]
            assert xs == [x for x, _ in ccdf]
            assert all(b > a for a, b in zip(xs, xs[1:]))
            assert all(b[1] > a[1] for a, b in zip(cdf, cdf[1:]))
            assert all(b[1] < a[1] for a, b in zip(ccdf, ccdf[1:]))
            assert cdf[-1][1] == 1.0 and ccdf[0][1] == 1.0
            assert 0.0 < cdf[0][1] and 0.0 < ccdf[-1][1]

    def test_single_and_constant(self):
        assert cdf_points([4.5]) == [(4.5, 1.0)]
        assert cdf_points([4.5], 'ccdf') == [(4.5, 1.0)]
        assert cdf_points([2.0] * 7) == [(2.0, 1.0)]
        assert cdf_points([2.0] * 7, 'ccdf') == [(2.0, 1.0)]
        with pytest.raises(DomainError):
            cdf_points(np.array([]))

    def test_bad_input(self):
        with pytest.raises(DomainError):
            cdf_points([])
        with pytest.raises(DomainError):
            cdf_points([1.0, float('nan')])
        with pytest.raises(DomainError):
            cdf_points([1.0], 'pdf')


class EvaluateTests(unittest.TestCase):
    def test_report(self):
        _, x = tone(1.2, 30.0)
        ref = HRSeries([0.0, 30.0], [72.0, 72.0])
        est = _series([72.0, 73.0, 80.0, 72.0, 72.0])
        report = evaluate(est, ref, _wave(x))
        assert report.mae == pytest.approx(9.0 / 5.0)
        assert report.success_rate == 80.0
        assert report.snr >= 30.0
        assert len(report.per_window) == 5
        assert report.cdf_points[-1] == (8.0, 1.0)
        assert sorted(report.as_dict()) == ['mae', 'skipped_snr_windows', 'snr', 'success_rate', 'windows']
