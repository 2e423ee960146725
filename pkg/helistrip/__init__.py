from .config import __version__, __dist__
from .utils import NumericalError, UserError
from .script import run

__all__ = [
    'NumericalError',
    'UserError',
    '__dist__',
    '__version__',
    'run',
]
