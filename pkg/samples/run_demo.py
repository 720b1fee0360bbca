#!/usr/bin/env python
# coding=utf-8
#
import os
import logging

from adaptive_exposure_lib import experiment

# ========== Initial Logger ==========
logging.basicConfig(
    level=logging.DEBUG,
    format='[%(asctime)-15s][%(levelname)-5s][%(filename)s][%(funcName)s#%(lineno)d] %(message)s')
logger = logging.getLogger(__name__)
# ====================================


if __name__ == '__main__':
    here = os.path.dirname(os.path.abspath(__file__))
    path = os.getenv('ADAPTIVE_EXPOSURE_CONFIG', os.path.join(here, 'experiment.json'))
    logger.info('config: {}'.format(path))

    config = experiment.ExperimentConfig.from_json(path)
    report = experiment.run_experiment(config)

    for strategy, row in sorted(report.summary()['strategies'].items()):
        logger.info('{}: {}'.format(strategy, row))
    logger.info('report written to {}'.format(config.output_dir))
