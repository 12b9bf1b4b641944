import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from settings.hparam import hparam as hp


def get_logger(name):
    # setup logger
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, str(hp.get('log_level', 'INFO')).upper(), logging.INFO))
    if not logger.handlers:
        ch = logging.StreamHandler(sys.stderr)
        ch.setLevel(logging.DEBUG)
        formatter = logging.Formatter('[%(asctime)s] [%(name)s] [%(levelname)s] %(message)s')
        ch.setFormatter(formatter)
        logger.addHandler(ch)
        logger.propagate = False
    return logger


def get_threads(threads=None):
    """
    Resolve the worker count; NILDIST_THREADS (read into hparam) caps it
    :param threads: requested workers, None for the configured value
    :return: positive integer
    """
    cap = max(1, int(hp.get('threads', 1)))
    if threads is None:
        return cap
    return max(1, min(int(threads), cap))


def parallel_map(fn, items, threads=None):
    """
    Map fn over items, returning results in input order regardless of completion order
    :param fn: pure function of one item
    :param items: iterable of inputs
    :param threads: worker cap (see get_threads)
    :return: list of results
    """
    items = list(items)
    workers = min(get_threads(threads), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


class Stopwatch:
    """
    Wall clock in milliseconds
    """
    def __init__(self):
        self.start_time = time.perf_counter()

    @property
    def elapsed_ms(self):
        return (time.perf_counter() - self.start_time) * 1000.0
