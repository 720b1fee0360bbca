# coding=utf-8
#
"""Multi-exposure region fusion of one triplet cycle.

Patches of the optimal frame that are clipped (above tau_high) take their value
from the short frame, patches that are too dark (below tau_low) from the long
frame. Weights are decided per patch on the channel-mean code of the optimal
frame, so the three channels of a patch always come from the same source.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .sensor_model import Frame, round_half_away

logger = logging.getLogger(__name__)

FUSION_MODES = ('hard', 'smooth')


@dataclass(frozen=True)
class FusionConfig:
    tau_low: float = 30.0
    tau_high: float = 220.0
    mode: str = 'hard'
    smooth_width: float = 10.0
    rescale_exposure: bool = False
    i_max: float = 255.0

    def __post_init__(self):
        if not 0 < self.tau_low < self.tau_high < self.i_max:
            raise DomainError('need 0 < tau_low < tau_high < {}, got {} / {}'.format(
                self.i_max, self.tau_low, self.tau_high))
        if self.mode not in FUSION_MODES:
            raise DomainError('unknown fusion mode {}, expected one of {}'.format(self.mode, FUSION_MODES))
        if self.smooth_width <= 0:
            raise DomainError('smooth_width must be > 0')


@dataclass(frozen=True)
class WeightTriple:
    w_l: float
    w_h: float
    w_opt: float

    def __post_init__(self):
        if abs(self.w_l + self.w_h + self.w_opt - 1.0) > 1e-12:
            raise DomainError('weights must sum to 1, got {}'.format((self.w_l, self.w_h, self.w_opt)))


def _weight_maps(i_opt, config):
    i_opt = np.asarray(i_opt, dtype=float)
    if config.mode == 'hard':
        w_h = (i_opt < config.tau_low).astype(float)
        w_l = (i_opt > config.tau_high).astype(float)
    else:
        half = config.smooth_width / 2.0
        w_h = np.clip((config.tau_low + half - i_opt) / config.smooth_width, 0.0, 1.0)
        w_l = np.clip((i_opt - (config.tau_high - half)) / config.smooth_width, 0.0, 1.0)
    return w_l, w_h, 1.0 - w_l - w_h


def fusion_weights(i_opt, config=None):
    """Weights (w_l, w_h, w_opt) applied to a patch whose optimal-frame code is ``i_opt``.

    Arguments:
        i_opt {float} -- Code of the patch in the optimal frame

    Keyword Arguments:
        config {FusionConfig} -- Thresholds and mode (default: {None} -- hard 30/220)

    Returns:
        WeightTriple -- One-hot in hard mode, a linear blend around each threshold in smooth mode
    """
    config = config or FusionConfig()
    if not 0 <= i_opt <= config.i_max:
        raise DomainError('i_opt {} outside [0, {}]'.format(i_opt, config.i_max))
    w_l, w_h, w_opt = (float(w) for w in _weight_maps(i_opt, config))
    return WeightTriple(w_l, w_h, w_opt)


def fuse(frame_l, frame_h, frame_opt, config=None):
    """Synthesize the fused frame of one cycle from its short, long and optimal frames.

    Raises:
        DomainError -- If the three frames differ in grid dimensions.

    Returns:
        Frame -- Tagged 'fused', carrying the exposure time and timestamp of frame_opt
    """
    config = config or FusionConfig(i_max=frame_opt.i_max)
    shape = frame_opt.intensities.shape
    if frame_l.intensities.shape != shape or frame_h.intensities.shape != shape:
        raise DomainError('frames differ in dimensions: {} / {} / {}'.format(
            frame_l.intensities.shape, frame_h.intensities.shape, shape))

    w_l, w_h, w_opt = (w[:, :, None] for w in _weight_maps(frame_opt.patch_means(), config))
    short = frame_l.intensities
    long_ = frame_h.intensities
    if config.rescale_exposure:
        short = short * (frame_opt.exposure_time / frame_l.exposure_time)
        long_ = long_ * (frame_opt.exposure_time / frame_h.exposure_time)
    fused = w_l * short + w_h * long_ + w_opt * frame_opt.intensities
    codes = np.clip(round_half_away(fused), 0.0, frame_opt.i_max)

    substituted = int(np.count_nonzero(w_opt[:, :, 0] < 1.0))
    if substituted:
        logger.debug('fused frame at t={:.3f}: {} patches substituted'.format(frame_opt.timestamp, substituted))
    return Frame(codes, frame_opt.exposure_time, frame_opt.timestamp, 'fused', frame_opt.i_max)
