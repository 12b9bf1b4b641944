import abc
from typing import NamedTuple

import numpy as np

import utils

search_logger = utils.get_logger('search')


class SearchResult(NamedTuple):
    value: float
    basis: np.ndarray
    index: int
    label: str


class Searcher:
    """
    Super class of restart searches. A searcher refines independent starting points and keeps
    the best; subclasses say where the starts come from and how one start is refined.
    """

    def __init__(self, matrix, config, threads=None):
        self.matrix = matrix
        self.config = config
        self.threads = threads
        self.results = []

    def run(self):
        """
        Template Method to describe a search
        :return: best SearchResult (lowest value, lowest start index on ties)
        """
        starts = list(enumerate(self.initial_starts()))
        try:
            self.results = utils.parallel_map(lambda item: self.refine(item[0], *item[1]), starts, self.threads)
            self.results = self.polish(self.results)
        except KeyboardInterrupt:
            search_logger.info('Search is canceled !!')
            raise
        best = self.select(self.results)
        self.finalize(best)
        return best

    @staticmethod
    def select(results):
        best = None
        for result in results:
            if best is None or result.value < best.value:
                best = result
        return best

    @abc.abstractmethod
    def initial_starts(self):
        """
        :return: list of (label, unitary basis)
        """
        raise NotImplementedError()

    @abc.abstractmethod
    def refine(self, index, label, basis):
        raise NotImplementedError()

    def polish(self, results):
        """
        Second stage over the refined results (default: none)
        :return: results, same length and order
        """
        return results

    def finalize(self, best):
        search_logger.debug('best of %d starts: %s #%d with value %.17g'
                            % (len(self.results), best.label, best.index, best.value))
