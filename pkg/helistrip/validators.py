import logging
import math

from .spectrum import BOUNDARY_CONDITIONS
from .shooting import SCHEMES


logger = logging.getLogger(__name__)


SUBCOMMANDS = [
    'potential',
    'solve',
    'dispersion',
    'heun-check',
    'stability',
    'surface',
]

FORMATS = ['csv', 'json']
UNIT_MODES = ['natural', 'dimensional']

TRUE_STRINGS = ('1', 'y', 'yes', 'true', 'on')
FALSE_STRINGS = ('', '0', 'n', 'no', 'false', 'off')


def raw(v):
    return v


def _number(v, name):
    if isinstance(v, bool):
        raise ValueError("%s must be a number, got %r." % (name, v))
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise ValueError("%s must be a number, got %r." % (name, v))
    if not math.isfinite(v):
        raise ValueError("%s must be finite." % (name,))
    return v


def number(v):
    if v is None:
        return v
    return _number(v, 'value')


def positive(v):
    if v is None:
        return v
    v = _number(v, 'value')
    if v <= 0:
        raise ValueError("%.17g is not positive." % v)
    return v


def nonnegative(v):
    if v is None:
        return v
    v = _number(v, 'value')
    if v < 0:
        raise ValueError("%.17g is negative." % v)
    return v


def count(v):
    if v is None:
        return v
    f = _number(v, 'count')
    if f < 0 or f != int(f):
        raise ValueError("%r is not a nonnegative integer." % (v,))
    return int(f)


def points(v):
    v = count(v)
    if v is not None and v < 3:
        raise ValueError("Grid needs at least 3 points, got %d." % v)
    return v


def boundary(v):
    v = str(v).lower()
    if v not in BOUNDARY_CONDITIONS:
        raise ValueError("Unknown boundary condition %r." % (v,))
    return v


def scheme(v):
    v = str(v).lower().replace('-', '_')
    if v not in SCHEMES:
        raise ValueError("Unknown shooting scheme %r." % (v,))
    return v


def subcommand(v):
    if v is None:
        return v
    if v not in SUBCOMMANDS:
        raise ValueError("Unknown subcommand %r." % (v,))
    return v


def output_format(v):
    v = str(v).lower()
    if v not in FORMATS:
        raise ValueError("Unknown output format %r." % (v,))
    return v


def units(v):
    if isinstance(v, bool):
        return UNIT_MODES[int(v)]
    v = str(v).lower()
    if v not in UNIT_MODES:
        raise ValueError("Unknown unit system %r." % (v,))
    return v


def boolean(v):
    if isinstance(v, bool):
        return v
    if v is None:
        return False
    s = str(v).strip().lower()
    if s in TRUE_STRINGS:
        return True
    if s in FALSE_STRINGS:
        return False
    raise ValueError("%r is not a boolean." % (v,))


def float_list(v):
    # Accepts a YAML list or a comma separated string.
    if v is None:
        return v
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v]
    elif isinstance(v, str):
        v = [item for item in v.split(',') if item.strip()]
    if not isinstance(v, list):
        raise ValueError("%r is not a list of numbers." % (v,))
    return [_number(item, 'list item') for item in v]


def threads(v):
    v = count(v)
    if v is not None and v < 1:
        raise ValueError("Thread count must be at least 1.")
    return v


VERBOSITIES = [
    'CRITICAL',
    'ERROR',
    'WARNING',
    'INFO',
    'DEBUG',
]


def verbosity(v):
    if isinstance(v, list):
        v = sum(v)
        v = max(0, v)
        v = min(v, len(VERBOSITIES) - 1)
        v = VERBOSITIES[v]

    if v not in VERBOSITIES:
        raise ValueError("Unknown verbosity '%s'" % (v,))

    return v
