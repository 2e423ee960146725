# Deterministic emission of tables, reports and run manifests.
#
# Data files never carry timestamps or timings. Those live in the run section
# of the manifest only.

from collections import OrderedDict
from contextlib import contextmanager
import json
import logging
import sys
import threading

import numpy as np
import pandas as pd

from .utils import Timer, format_float


logger = logging.getLogger(__name__)


STDOUT = '-'
MANIFEST_SUFFIX = '.manifest.json'
# 17 significant digits round-trips any double.
CSV_FLOAT_FORMAT = '%.17g'


def sidecar(path, suffix):
    # foo.csv -> foo.csv.manifest.json
    if path is None or STDOUT == path:
        return None
    return path + suffix


@contextmanager
def open_output(path):
    if STDOUT == path:
        yield sys.stdout
        sys.stdout.flush()
        return
    with open(path, 'w', encoding='utf-8', newline='\n') as fo:
        yield fo


def frame(header, rows):
    rows = [list(row) for row in rows]
    width = len(header)
    for row in rows:
        if len(row) != width:
            raise ValueError("Row has %d cells, header has %d." % (
                len(row), width))
    # None cells turn numeric columns into floats with NaN, written empty.
    return pd.DataFrame(rows, columns=header).infer_objects()


def write_csv(fo, header, rows):
    frame(header, rows).to_csv(
        fo, index=False, float_format=CSV_FLOAT_FORMAT, na_rep='',
        lineterminator='\n')


def jsonable(obj):
    if hasattr(obj, '_asdict'):
        return OrderedDict(
            (k, jsonable(v)) for k, v in obj._asdict().items())
    if isinstance(obj, dict):
        return OrderedDict((str(k), jsonable(v)) for k, v in obj.items())
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        # JSON has no inf or nan.
        return format_float(obj)
    return obj


def dumps(payload):
    return json.dumps(
        jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False,
        allow_nan=False) + '\n'


def write_json(fo, payload):
    fo.write(dumps(payload))


class Manifest(object):
    """Reproducibility record written next to every data file.

    data holds everything that affected results and is deterministic. run
    holds wall-clock figures and the exit status.
    """

    def __init__(self, config, version):
        self.data = OrderedDict([
            ('config', config),
            ('version', version),
            ('grid', None),
            ('tolerances', OrderedDict()),
            ('oracle', None),
            ('flags', []),
            ('files', []),
        ])
        self.timers = OrderedDict()
        # Scan workers flag from pool threads.
        self.lock = threading.Lock()
        self.status = 'running'
        self.error = None

    def __repr__(self):
        return '<%s %s>' % (self.__class__.__name__, self.status)

    def timer(self, name):
        return self.timers.setdefault(name, Timer())

    def flag(self, message):
        with self.lock:
            if message not in self.data['flags']:
                self.data['flags'].append(message)

    def tolerance(self, name, value):
        self.data['tolerances'][name] = value

    def record_file(self, path):
        if path and STDOUT != path:
            self.data['files'].append(path)

    def as_dict(self):
        data = OrderedDict(self.data)
        # Scan workers may warn in any order.
        with self.lock:
            data['flags'] = sorted(data['flags'])
        return OrderedDict([
            ('data', data),
            ('run', OrderedDict([
                ('status', self.status),
                ('error', self.error),
                ('seconds', OrderedDict(
                    (k, t.delta.total_seconds())
                    for k, t in self.timers.items())),
            ])),
        ])

    def write(self, path):
        if path is None:
            logger.debug("No manifest for stdout output.")
            return
        with open_output(path) as fo:
            write_json(fo, self.as_dict())
        logger.info("Wrote manifest %s.", path)


def write_table(path, fmt, header, rows):
    rows = [list(row) for row in rows]
    with open_output(path) as fo:
        if 'json' == fmt:
            write_json(fo, OrderedDict([('columns', header), ('rows', rows)]))
        else:
            write_csv(fo, header, rows)
    logger.info("Wrote %d rows to %s.", len(rows), path)


def write_report(path, payload):
    with open_output(path) as fo:
        write_json(fo, payload)
    logger.info("Wrote %s.", path)


class FlagCollector(logging.Handler):
    # Copies warnings into the manifest flag list.

    def __init__(self, manifest, level=logging.WARNING):
        super(FlagCollector, self).__init__(level)
        self.manifest = manifest

    def emit(self, record):
        self.manifest.flag(record.getMessage())
