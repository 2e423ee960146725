from concurrent.futures import ThreadPoolExecutor
import logging


logger = logging.getLogger(__name__)


THREADS_ENV = 'WAVEGUIDE_THREADS'


class WorkerPool(object):
    # Runs independent scan points. Results always come back in input order.

    def __init__(self, size=1):
        if size < 1:
            raise ValueError("Pool size must be at least 1.")
        self.size = size
        self.executor = None
        self.tasks = 0

    def __repr__(self):
        return '<%s size=%d>' % (self.__class__.__name__, self.size)

    def getexecutor(self):
        if self.executor is None:
            logger.debug("Starting %d worker threads.", self.size)
            self.executor = ThreadPoolExecutor(max_workers=self.size)
        return self.executor

    def map(self, func, iterable):
        items = list(iterable)
        self.tasks += len(items)
        if 1 == self.size or len(items) < 2:
            return [func(item) for item in items]
        return list(self.getexecutor().map(func, items))

    def close(self):
        if self.executor is not None:
            logger.debug("Stopping worker threads.")
            self.executor.shutdown(wait=True)
            self.executor = None

    def __enter__(self):
        return self

    def __exit__(self, *a):
        self.close()
