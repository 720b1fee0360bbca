# coding=utf-8
#
import signal
import logging
import threading
from concurrent.futures import CancelledError, ThreadPoolExecutor

from .errors import ExposureLibError
from .experiment import ExperimentReport, run_cell
from .scenario_file import load_scenario

logger = logging.getLogger(__name__)


class ExperimentInterrupted(ExposureLibError):
    pass


class ExperimentService():
    """Runs the cells of one experiment on a thread pool until done or interrupted."""

    def __init__(self, config):
        logger.info('init instance of ExperimentService')
        self.config = config
        self.futures = []
        # create service stop event
        self.stop = threading.Event()
        self.stop.clear()    # default false

    def __exit(self, signalnum, frame):
        logger.info('got signal {} {}: exit.'.format(signalnum, frame))
        self.shutdown()

    def _register_signals(self):
        # NOTED: signal only works in main thread.
        if isinstance(threading.current_thread(), threading._MainThread) is True:
            previous = {}
            for signame in ('SIGINT', 'SIGTERM'):
                logger.info('register signal handler for {}'.format(signame))
                signum = getattr(signal, signame)
                previous[signum] = signal.signal(signum, lambda signalnum, frame: self.__exit(signalnum, frame))
            return previous
        logger.warning('skip signal handler registration, due to this is not in main thread.')
        return {}

    def run(self):
        """Run every cell and merge the results in config order.

        Raises:
            ConfigError -- If a scenario cannot be loaded (before any cell starts).
            ExperimentInterrupted -- If shutdown() was called before all cells finished.

        Returns:
            ExperimentReport -- One CellResult per (scenario, strategy, seed)
        """
        logger.info('start running ExperimentService')
        scenarios = {reference: load_scenario(reference) for reference in self.config.scenarios}
        cells = self.config.cells()
        previous = self._register_signals()
        try:
            with ThreadPoolExecutor(max_workers=self.config.workers) as executor:
                self.futures = [executor.submit(self._run_cell, scenarios[reference], strategy, seed)
                                for reference, strategy, seed in cells]
                logger.info('{} cells submitted to {} workers'.format(len(cells), self.config.workers))
                results = []
                for future in self.futures:
                    if self.stop.is_set():
                        break
                    try:
                        result = future.result()
                    except CancelledError:
                        break
                    if result is not None:
                        results.append(result)
        finally:
            for signum, handler in previous.items():
                signal.signal(signum, handler)
        if self.stop.is_set() and len(results) < len(cells):
            raise ExperimentInterrupted('interrupted after {} of {} cells'.format(len(results), len(cells)))
        logger.info('all {} cells finished'.format(len(results)))
        return ExperimentReport(self.config, results)

    def _run_cell(self, scenario, strategy, seed):
        if self.stop.is_set():
            return None
        try:
            return run_cell(scenario, strategy, self.config.sensor, self.config.pipeline, seed,
                            self.config.tolerance)
        except Exception:
            logger.exception('cell {} / {} / seed {} failed'.format(scenario.spec.name, strategy.name, seed))
            raise

    def shutdown(self):
        logger.info('stop running ExperimentService')
        self.stop.set()
        # cancel cells that have not started yet
        cancelled = sum(1 for future in self.futures if future.cancel())
        logger.info('{} pending cells cancelled.'.format(cancelled))
