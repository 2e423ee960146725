from datetime import datetime, timedelta
import textwrap

import numpy as np


def dedent(s):
    return textwrap.dedent(s).strip()


class UserError(Exception):
    def __init__(self, message, exit_code=1):
        super(UserError, self).__init__(message)
        self.exit_code = exit_code


class NumericalError(UserError):
    # A solver gave up. index is the failing state when there is one.
    def __init__(self, message, index=None):
        super(NumericalError, self).__init__(message, exit_code=1)
        self.index = index


def format_float(value):
    # 17 significant digits round-trips any double.
    return '%.17g' % (value,)


def sign_changes(values, floor=0.):
    # Count sign changes, ignoring entries whose magnitude is below floor.
    values = np.asarray(values, dtype=float)
    signs = np.sign(values[np.abs(values) > floor])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


class Timer(object):
    def __init__(self):
        self.delta = timedelta()

    def __repr__(self):
        return '<%s %s>' % (self.__class__.__name__, self.delta)

    def __enter__(self):
        self.start = datetime.utcnow()
        return self

    def __exit__(self, *_):
        self.last_delta = datetime.utcnow() - self.start
        self.delta += self.last_delta
        self.start = None
