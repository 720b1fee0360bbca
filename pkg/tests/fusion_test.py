# coding=utf-8
#
import logging
import unittest

import numpy as np
import pytest

from adaptive_exposure_lib.errors import DomainError
from adaptive_exposure_lib.region_fusion import FusionConfig, WeightTriple, fuse, fusion_weights
from adaptive_exposure_lib.sensor_model import Frame

# ========== Initial Logger ==========
logging.basicConfig(
    level=logging.DEBUG,
    format='[%(asctime)-15s][%(levelname)-5s][%(filename)s][%(funcName)s#%(lineno)d] %(message)s')
logger = logging.getLogger(__name__)
# ====================================


def _frame(codes, exposure, tag):
    codes = np.asarray(codes, dtype=float)
    if codes.ndim == 2:
        codes = np.repeat(codes[:, :, None], 3, axis=2)
    return Frame(codes, exposure, 1.0, tag)


class WeightTests(unittest.TestCase):
    def test_hard_examples(self):
        assert fusion_weights(10) == WeightTriple(0.0, 1.0, 0.0)
        assert fusion_weights(250) == WeightTriple(1.0, 0.0, 0.0)
        assert fusion_weights(100) == WeightTriple(0.0, 0.0, 1.0)

    def test_thresholds_are_kept(self):
        assert fusion_weights(30) == WeightTriple(0.0, 0.0, 1.0)
        assert fusion_weights(220) == WeightTriple(0.0, 0.0, 1.0)

    def test_smooth_weights_sum_to_one(self):
        config = FusionConfig(mode='smooth')
        for i_opt in np.linspace(0.0, 255.0, 511):
            weights = fusion_weights(float(i_opt), config)
            assert min(weights.w_l, weights.w_h, weights.w_opt) >= 0.0
            assert weights.w_l + weights.w_h + weights.w_opt == pytest.approx(1.0)
        assert fusion_weights(30.0, config).w_h == pytest.approx(0.5)
        assert fusion_weights(220.0, config).w_l == pytest.approx(0.5)
        assert fusion_weights(100.0, config) == WeightTriple(0.0, 0.0, 1.0)

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            fusion_weights(-1.0)
        with pytest.raises(DomainError):
            fusion_weights(256.0)

    def test_config_validation(self):
        with pytest.raises(DomainError):
            FusionConfig(tau_low=230.0)
        with pytest.raises(DomainError):
            FusionConfig(mode='laplacian')
        with pytest.raises(DomainError):
            WeightTriple(0.5, 0.5, 0.5)


class FuseTests(unittest.TestCase):
    def test_well_exposed_frame_is_kept(self):
        opt = _frame(np.full((4, 4), 140.0), 12.0, 'opt')
        low = _frame(np.full((4, 4), 70.0), 6.0, 'low')
        high = _frame(np.full((4, 4), 210.0), 18.0, 'high')
        fused = fuse(low, high, opt)
        assert np.array_equal(fused.intensities, opt.intensities)
        assert fused.stream_tag == 'fused'
        assert fused.exposure_time == 12.0
        assert fused.timestamp == 1.0

    def test_dark_frame_takes_long_exposure(self):
        opt = _frame(np.full((4, 4), 10.0), 12.0, 'opt')
        low = _frame(np.full((4, 4), 5.0), 6.0, 'low')
        high = _frame(np.full((4, 4), 15.0), 18.0, 'high')
        assert np.array_equal(fuse(low, high, opt).intensities, high.intensities)

    def test_gradient_lands_inside_thresholds(self):
        levels = np.arange(10.0, 256.0).reshape(6, 41)
        opt = _frame(levels, 10.0, 'opt')
        low = _frame(np.floor(0.5 * levels + 0.5), 5.0, 'low')
        high = _frame(np.minimum(3.0 * levels, 255.0), 22.0, 'high')
        fused = fuse(low, high, opt).patch_means()
        assert fused.min() >= 30.0
        assert fused.max() <= 220.0
        kept = (levels >= 30.0) & (levels <= 220.0)
        assert np.array_equal(fused[kept], levels[kept])

    def test_channels_follow_patch_mean(self):
        codes = np.full((2, 2, 3), 140.0)
        codes[0, 0] = (200.0, 255.0, 230.0)
        opt = Frame(codes, 10.0, 1.0, 'opt')
        low = _frame(np.full((2, 2), 90.0), 5.0, 'low')
        high = _frame(np.full((2, 2), 200.0), 20.0, 'high')
        fused = fuse(low, high, opt).intensities
        assert tuple(fused[0, 0]) == (90.0, 90.0, 90.0)
        assert tuple(fused[1, 1]) == (140.0, 140.0, 140.0)

    def test_rescaled_substitution(self):
        opt = _frame(np.full((2, 2), 255.0), 10.0, 'opt')
        low = _frame(np.full((2, 2), 100.0), 5.0, 'low')
        high = _frame(np.full((2, 2), 255.0), 20.0, 'high')
        fused = fuse(low, high, opt, FusionConfig(rescale_exposure=True))
        assert np.all(fused.intensities == 200.0)

    def test_dimension_mismatch(self):
        opt = _frame(np.full((4, 4), 140.0), 12.0, 'opt')
        low = _frame(np.full((4, 3), 70.0), 6.0, 'low')
        with pytest.raises(DomainError):
            fuse(low, opt, opt)
