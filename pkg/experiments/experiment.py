import abc
import sys
import threading

from tqdm import tqdm

import utils
from settings.hparam import hparam as hp

experiment_logger = utils.get_logger('experiment')


class FalsificationError(RuntimeError):
    """
    A certified upper bound fell below a proven lower bound; witness holds the offending instance
    """
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class Experiment:
    """
    Super class of verification experiments. An experiment runs independent trials (each with its
    own random stream) and assembles rows in trial order.
    """

    def __init__(self, config, seed=0, threads=None, progress=None, soundness_tol=None):
        self.config = config
        self.seed = seed
        self.threads = threads
        self.progress = hp.get('progress', True) if progress is None else progress
        self.soundness_tol = hp.verify.soundness_tol if soundness_tol is None else soundness_tol
        self.rows = []
        self.falsifications = []
        self._lock = threading.Lock()

    def run(self, trials=1):
        """
        Template Method to describe an experiment
        :param trials: the number of trials
        :return: list of rows in trial order
        """
        bar = tqdm(total=trials, disable=not self.progress, file=sys.stderr, desc=type(self).__name__)

        def run_trial(index):
            row = self.trial(index)
            with self._lock:
                bar.update(1)
            return row

        try:
            rows = utils.parallel_map(run_trial, range(trials), self.threads)
            for i, row in enumerate(rows):
                self.rows.append(row)
                self.do_end_of_trial(i, row)
        except KeyboardInterrupt:
            experiment_logger.info('Experiment is canceled !!')
            raise
        finally:
            bar.close()
            self.finalize()
        return self.rows

    @property
    def min_gap(self):
        return min((row.gap for row in self.rows), default=float('inf'))

    @abc.abstractmethod
    def trial(self, index):
        raise NotImplementedError()

    def do_end_of_trial(self, index, row):
        experiment_logger.debug('trial %d: n=%d m=%d lower %.17g upper %.17g gap %.3e'
                                % (index, row.n, row.m, row.lower_bound, row.upper_estimate, row.gap))

    def record_falsification(self, row, witness):
        with self._lock:
            self.falsifications.append((row, witness))
        experiment_logger.error('FALSIFICATION: n=%d m=%d upper %.17g below lower %.17g (gap %.3e)'
                                % (row.n, row.m, row.upper_estimate, row.lower_bound, row.gap))

    def finalize(self):
        experiment_logger.info('%s finished %d trials, min gap %.3e, %d falsifications'
                               % (type(self).__name__, len(self.rows), self.min_gap, len(self.falsifications)))
