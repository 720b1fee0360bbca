#!/usr/bin/env python
# coding=utf-8
#
import os
import sys
import logging

from adaptive_exposure_lib import experiment, scenarios, sensor_model, strategies
from adaptive_exposure_lib.rppg_core import PipelineConfig

# ========== Initial Logger ==========
logging.basicConfig(
    level=logging.INFO,
    format='[%(asctime)-15s][%(levelname)-5s][%(filename)s][%(funcName)s#%(lineno)d] %(message)s')
logger = logging.getLogger(__name__)
# ====================================


if __name__ == '__main__':
    name = sys.argv[1] if len(sys.argv) > 1 else 'shadow-flicker'
    seed = int(os.getenv('ADAPTIVE_EXPOSURE_SEED', '0'))
    scenario = scenarios.builtin_scenario(name)

    for kind in strategies.STANDARD_STRATEGIES:
        strategy = strategies.build_strategy(kind)
        cell = experiment.run_cell(scenario, strategy, sensor_model.SensorConfig(), PipelineConfig(), seed=seed)
        logger.info('{:<14} MAE {:6.2f} bpm  SR {:5.1f}%  SNR {:6.2f} dB'.format(
            kind, cell.metrics.mae, cell.metrics.success_rate, cell.metrics.snr))
