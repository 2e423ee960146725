from argparse import ArgumentParser, SUPPRESS as SUPPRESS_ARG
from argparse import _VersionAction
import errno
import logging
from logging.config import dictConfig
import math
import os.path
import re
from os import stat
import sys

import numpy as np
import scipy
import yaml
from pkg_resources import DistributionNotFound, get_distribution

from .geometry import (
    DIMENSIONAL,
    StripGeometry,
    TransverseMode,
    UnitSystem,
)
from .pool import THREADS_ENV
from .spectrum import TransverseGrid
from .stability import StabilityScenario
from .utils import UserError, dedent
from . import validators as V


try:
    __dist__ = get_distribution('helistrip')
    __version__ = __dist__.version
except DistributionNotFound:  # pragma: nocover
    __dist__ = None
    __version__ = '0+unknown'

logger = logging.getLogger(__name__)

# Relative tolerance on kx against C*omega when both are given.
MODE_CONSISTENCY = 1e-12
# Flat key=value configuration line.
KEY_VALUE_RE = re.compile(r'^([A-Za-z_][A-Za-z0-9_]*)\s*=(.*)$')


class MultilineFormatter(logging.Formatter):
    def format(self, record):
        s = logging.Formatter.format(self, record)
        if '\n' not in s:
            return s

        lines = s.splitlines()
        d = record.__dict__.copy()
        for i, line in enumerate(lines[1:]):
            record.message = line
            lines[1+i] = self._fmt % record.__dict__
        record.__dict__ = d

        return '\n'.join(lines)


class ColoredStreamHandler(logging.StreamHandler):

    _color_map = {
        logging.DEBUG: '37',
        logging.INFO: '1;39',
        logging.WARN: '96',
        logging.ERROR: '91',
        logging.CRITICAL: '1;91',
    }

    def format(self, record):
        lines = logging.StreamHandler.format(self, record)
        color = self._color_map.get(record.levelno, '39')
        lines = ''.join([
            '\033[0;%sm%s\033[0m' % (color, line)
            for line in lines.splitlines(True)
        ])
        return lines


class VersionAction(_VersionAction):
    def __call__(self, parser, *a):
        version = (
            "%(package)s %(version)s\n"
            "numpy %(numpy)s scipy %(scipy)s\n"
            "pyyaml %(yaml)s\n"
            "Python %(pyversion)s\n"
        ) % dict(
            package=__package__,
            version=__version__,
            numpy=np.__version__,
            scipy=scipy.__version__,
            yaml=yaml.__version__,
            pyversion=sys.version,
        )
        print(version.strip())
        parser.exit()


def define_arguments(parser):
    parser.add_argument(
        'subcommand', metavar='SUBCOMMAND', choices=V.SUBCOMMANDS,
        help='one of %s' % ', '.join(V.SUBCOMMANDS),
    )
    parser.add_argument(
        '-c', '--config',
        action='store', dest='config', metavar='PATH',
        help=(
            'path to YAML configuration file (env: HELISTRIP_CONFIG). '
            'Use - for stdin.'
        )
    )

    geometry = parser.add_argument_group('geometry')
    geometry.add_argument(
        '--L', '--length', dest='length', metavar='LENGTH',
        help='strip length L')
    geometry.add_argument(
        '--n', '--twists', dest='twists', metavar='COUNT',
        help='number of 2pi turns over L')
    geometry.add_argument(
        '--D', '--width', dest='width', metavar='WIDTH',
        help='strip width D, the transverse cut-off')
    geometry.add_argument(
        '--k_x', '--kx', dest='kx', metavar='KX',
        help='longitudinal wave number')
    geometry.add_argument(
        '--C', '--ratio', dest='ratio', metavar='C',
        help='kx/omega, exclusive with --k_x')

    grid = parser.add_argument_group('grid')
    grid.add_argument(
        '--points', dest='points', metavar='N',
        help='transverse grid points, endpoints included')
    grid.add_argument(
        '--bc-left', dest='bc_left', metavar='BC',
        help='dirichlet or neumann at xi=0')
    grid.add_argument(
        '--bc-right', dest='bc_right', metavar='BC',
        help='dirichlet or neumann at xi=D')
    grid.add_argument(
        '--states', dest='states', metavar='K',
        help='number of lowest states to compute')
    grid.add_argument(
        '--scheme', dest='scheme', metavar='SCHEME',
        help='shooting oracle scheme: numerov or three_point')
    grid.add_argument(
        '--no-oracle', action='store_false', dest='oracle',
        help='skip the shooting cross-check')
    grid.add_argument(
        '--refine', action='store_true', dest='refine',
        help='refine the grid until the ground energy converges')
    grid.add_argument(
        '--kx-values', dest='kx_values', metavar='LIST',
        help='comma separated kx values for dispersion')
    grid.add_argument(
        '--heun-floor', dest='heun_floor', metavar='OMEGA_XI',
        help='smallest omega*xi used in Heun residuals')
    grid.add_argument(
        '--nx', dest='nx', metavar='N', help='surface mesh points along x')
    grid.add_argument(
        '--nxi', dest='nxi', metavar='N', help='surface mesh points along xi')

    scenario = parser.add_argument_group('stability')
    scenario.add_argument(
        '--Cstar', dest='torsional_constant', metavar='CSTAR',
        help='torsional constant')
    scenario.add_argument(
        '--N', '--electrons', dest='electrons', metavar='N',
        help='electron count')
    scenario.add_argument(
        '--spin', dest='spin', metavar='G', help='spin degeneracy')
    scenario.add_argument(
        '--T', '--temperature', dest='temperature', metavar='KELVIN',
        help='temperature, dimensional units only')
    scenario.add_argument(
        '--omega-values', dest='omega_values', metavar='LIST',
        help='comma separated twist rates to scan, 0 included')

    units = parser.add_argument_group('units')
    units.add_argument(
        '--dimensional', action='store_const', const=DIMENSIONAL,
        dest='units', help='SI units: lengths in m, energies in J')
    units.add_argument(
        '--hbar', dest='hbar', metavar='J.S', help='reduced Planck constant')
    units.add_argument(
        '--mass', dest='mass', metavar='KG', help='particle mass')

    out = parser.add_argument_group('output')
    out.add_argument(
        '-o', '--output', dest='output', metavar='PATH',
        help='data file, - for stdout. Defaults to SUBCOMMAND.FORMAT')
    out.add_argument(
        '-f', '--format', dest='format', metavar='FORMAT',
        help='csv or json')
    out.add_argument(
        '--wavefunctions', action='store_true', dest='wavefunctions',
        help='also write wavefunctions for solve')
    out.add_argument(
        '--zeta-csv', action='store_true', dest='zeta_csv',
        help='also write (zeta, M, Q) samples for heun-check')
    out.add_argument(
        '-j', '--threads', dest='threads', metavar='N',
        help='worker threads for scans (env: WAVEGUIDE_THREADS)')

    parser.add_argument(
        '-q', '--quiet',
        action='append_const', dest='verbosity', const=-1,
        default=[V.VERBOSITIES.index(Configuration.DEFAULTS['verbosity'])],
        help="decrease log verbosity (env: VERBOSITY)",
    )
    parser.add_argument(
        '-v', '--verbose',
        action='append_const', dest='verbosity', const=+1,
        help="increase log verbosity (env: VERBOSITY)"
    )
    parser.add_argument(
        '--color',
        action='store_true', dest='color',
        help="force color output (env: COLOR=1)"
    )
    parser.add_argument(
        '--no-color',
        action='store_false', dest='color',
        help="force plain text output (env: COLOR='')"
    )
    parser.add_argument(
        '-?', '--help',
        action='help',
        help='show this help message and exit')

    parser.add_argument(
        '-V', '--version',
        action=VersionAction,
        help='show version and exit',
    )


class Mapping(object):
    """Fetch value from argv, env var or file."""

    _auto_env = object()

    def __init__(self, path, env=_auto_env, processor=V.raw):
        self.path = path
        self.arg = path

        env = env or []
        if env == self._auto_env:
            env = ['HELISTRIP_' + self.path.upper()]
        self.env = env
        if isinstance(self.env, str):
            self.env = [self.env]

        self.processor = processor

    def __repr__(self):
        return '<%s %s>' % (self.__class__.__name__, self.path)

    def process_env(self, environ):
        for env in self.env:
            try:
                value = environ[env]
                logger.debug("Read %s from %s.", self.path, env)
                break
            except KeyError:
                continue
        else:
            raise KeyError()

        return value

    def process_file(self, file_config):
        value = file_config[self.path]
        logger.debug("Read %s from YAML.", self.path)
        return value

    def process_arg(self, args):
        value = getattr(args, self.arg)
        logger.debug("Read %s from argv.", self.path)
        return value

    def process(self, default, file_config={}, environ={}, args=object()):
        # This is the sources of configuration, ordered by priority desc. If a
        # process_* function raises KeyError or AttributeError, it is ignored.
        sources = [
            (self.process_arg, args),
            (self.process_env, environ),
            (self.process_file, file_config),
        ]

        for source in sources:
            callable_, args = source[0], source[1:]
            try:
                value = callable_(*args)
                break
            except (AttributeError, KeyError):
                continue
        else:
            value = default

        try:
            return self.processor(value)
        except ValueError as e:
            raise ValueError("%s: %s" % (self.path, e))


class ConfigurationError(UserError):
    def __init__(self, message):
        super(ConfigurationError, self).__init__(message, exit_code=2)


class Configuration(dict):
    DEFAULTS = {
        'subcommand': None,
        'verbosity': 'INFO',
        'color': False,
        'length': None,
        'twists': None,
        'width': None,
        'kx': None,
        'ratio': None,
        'points': 4001,
        'bc_left': 'dirichlet',
        'bc_right': 'dirichlet',
        'states': 3,
        'scheme': 'numerov',
        'oracle': True,
        'refine': False,
        'kx_values': None,
        'heun_floor': 2.,
        'nx': 65,
        'nxi': 17,
        'torsional_constant': 0.,
        'electrons': 0,
        'spin': 2,
        'temperature': 0.,
        'omega_values': None,
        'units': 'natural',
        'hbar': None,
        'mass': None,
        'output': None,
        'format': 'csv',
        'wavefunctions': False,
        'zeta_csv': False,
        'threads': 1,
    }

    MAPPINGS = [
        Mapping('subcommand', env=None, processor=V.subcommand),
        Mapping('color', env='COLOR', processor=V.boolean),
        Mapping('verbosity', env='VERBOSITY', processor=V.verbosity),
        Mapping('length', processor=V.positive),
        Mapping('twists', processor=V.nonnegative),
        Mapping('width', processor=V.positive),
        Mapping('kx', processor=V.number),
        Mapping('ratio', processor=V.number),
        Mapping('points', processor=V.points),
        Mapping('bc_left', processor=V.boundary),
        Mapping('bc_right', processor=V.boundary),
        Mapping('states', processor=V.count),
        Mapping('scheme', processor=V.scheme),
        Mapping('oracle', processor=V.boolean),
        Mapping('refine', processor=V.boolean),
        Mapping('kx_values', processor=V.float_list),
        Mapping('heun_floor', processor=V.positive),
        Mapping('nx', processor=V.points),
        Mapping('nxi', processor=V.points),
        Mapping('torsional_constant', processor=V.nonnegative),
        Mapping('electrons', processor=V.count),
        Mapping('spin', processor=V.count),
        Mapping('temperature', processor=V.nonnegative),
        Mapping('omega_values', processor=V.float_list),
        Mapping('units', processor=V.units),
        Mapping('hbar', processor=V.positive),
        Mapping('mass', processor=V.positive),
        Mapping('output'),
        Mapping('format', processor=V.output_format),
        Mapping('wavefunctions', processor=V.boolean),
        Mapping('zeta_csv', processor=V.boolean),
        Mapping('threads', env=THREADS_ENV, processor=V.threads),
    ]

    # Keys not meant for the manifest echo.
    PRIVATE = ('color', 'verbosity', 'debug', 'threads')

    def __init__(self):
        super(Configuration, self).__init__(self.DEFAULTS)

    _file_candidates = [
        './helistrip.yml',
        './helistrip.yaml',
        '~/.config/helistrip.yml',
        '~/.config/helistrip.yaml',
    ]

    def find_filename(self, environ=os.environ, args=None):
        custom = getattr(
            args, 'config',
            environ.get('HELISTRIP_CONFIG', ''),
        )

        if '-' == custom:
            return custom
        elif custom:
            candidates = [custom]
        else:
            candidates = self._file_candidates

        for candidate in candidates:
            candidate = os.path.expanduser(candidate)
            try:
                logger.debug("Trying %s.", candidate)
                stat(candidate)
                return os.path.realpath(candidate)
            except OSError as e:
                if e.errno == errno.EACCES:
                    logger.warning(
                        "Can't read %s: permission denied.", candidate)

        if custom:
            message = "Can't access configuration file %s." % (custom,)
            raise ConfigurationError(message)
        # Configuration file is optional.
        return None

    EPILOG = dedent("""\

    Values come from flags, then HELISTRIP_* environment variables, then the
    configuration file. Energies are in natural units hbar**2/2m = 1 unless
    --dimensional is given.
    """)

    def bootstrap(self, environ=os.environ):
        debug = environ.get('DEBUG', '').lower() in ('1', 'y')
        verbose = debug or environ.get('VERBOSE', '').lower() in ('1', 'y')
        verbosity = environ.get('VERBOSITY', 'DEBUG' if verbose else 'INFO')

        self['debug'] = debug
        try:
            self['verbosity'] = V.verbosity(verbosity)
        except ValueError as e:
            raise UserError('Failed to boostrap: %s.' % (e,))
        self['color'] = sys.stderr.isatty()

        dictConfig(self.logging_dict())
        return debug

    def load(self, argv=None, environ=os.environ, stdin=None):
        logger.debug("Processing CLI arguments.")
        args = self.read_argv(argv)

        # Setup logging before parsing options. Reset verbosity with env var,
        # and compute verbosity from cumulated args.
        args.verbosity[0] = V.VERBOSITIES.index(self['verbosity'])
        self['verbosity'] = V.verbosity(args.verbosity)
        if hasattr(args, 'color'):
            self['color'] = args.color
        dictConfig(self.logging_dict())

        logger.debug("Starting helistrip %s.", __version__)

        filename = self.find_filename(environ, args)
        if filename is None:
            logger.debug("No configuration file.")
            file_config = {}
        elif filename == '-':
            logger.info("Reading configuration from stdin.")
            file_config = self.read(stdin or sys.stdin, 'stdin')
        else:
            logger.info("Using %s.", filename)
            try:
                with open(filename, encoding='utf-8') as fo:
                    file_config = self.read(fo, filename)
            except OSError as e:
                msg = "Failed to read configuration: %s" % (e,)
                raise ConfigurationError(msg)

        self.merge(file_config=file_config, environ=environ, args=args)
        logger.debug("Configuration loaded.")

    def read_argv(self, argv=None):
        parser = ArgumentParser(
            prog='helistrip',
            add_help=False,
            # Only store value from argv. Defaults are managed by
            # Configuration.
            argument_default=SUPPRESS_ARG,
            description="Quantum states on a twisted strip.",
            epilog=self.EPILOG,
        )
        define_arguments(parser)
        return parser.parse_args(sys.argv[1:] if argv is None else argv)

    def merge(self, file_config, environ=os.environ, args=object()):
        self.check_unknown_config(file_config)

        try:
            for mapping in self.MAPPINGS:
                value = mapping.process(
                    default=self.get(mapping.path),
                    file_config=file_config,
                    environ=environ,
                    args=args,
                )
                self[mapping.path] = value
            self.check()
        except ValueError as e:
            raise ConfigurationError("Invalid configuration: %s." % (e,))

    def read(self, fo, name):
        text = fo.read()
        if self.is_key_values(text):
            return self.validate_raw_yaml(
                self.parse_key_values(text, name), name)

        try:
            payload = yaml.safe_load(text)
        except yaml.error.YAMLError as e:
            msg = "YAML error with %s: %s" % (name, e)
            raise ConfigurationError(msg)

        return self.validate_raw_yaml(payload, name)

    @staticmethod
    def significant_lines(text):
        for line in text.splitlines():
            line = line.strip()
            if line and not line.startswith('#'):
                yield line

    def is_key_values(self, text):
        lines = list(self.significant_lines(text))
        return bool(lines) and all(
            KEY_VALUE_RE.match(line) for line in lines)

    def parse_key_values(self, text, name):
        # length=100 lines. Values are YAML scalars, so 100 is an int and
        # 0,.5 stays a string for the list processors.
        payload = {}
        for line in self.significant_lines(text):
            key, value = KEY_VALUE_RE.match(line).groups()
            if key in payload:
                raise ConfigurationError(
                    "Duplicate entry %s in %s." % (key, name))
            value = value.strip()
            try:
                payload[key] = yaml.safe_load(value) if value else None
            except yaml.error.YAMLError:
                payload[key] = value
        logger.debug("Read %d key=value entries from %s.", len(payload), name)
        return payload

    def validate_raw_yaml(self, payload, name):
        if payload is None:
            logger.debug("%s is empty.", name)
            return {}
        if not isinstance(payload, dict):
            raise ConfigurationError(
                "Configuration %s must be a mapping." % (name,))
        for key, value in payload.items():
            if isinstance(value, dict):
                raise ConfigurationError(
                    "Configuration entry %s must not be nested." % (key,))
        return payload

    def check_unknown_config(self, config):
        known_keys = set(m.path for m in self.MAPPINGS) - set(['subcommand'])
        unknown = sorted(str(k) for k in config if k not in known_keys)
        if unknown:
            raise ConfigurationError(
                "Unknown configuration entries: %s." % ', '.join(unknown))

    REQUIRED = {
        'potential': ('length', 'twists', 'width'),
        'solve': ('length', 'twists', 'width'),
        'dispersion': ('length', 'twists', 'width', 'kx_values'),
        'heun-check': ('length', 'twists', 'width'),
        'stability': ('length', 'width', 'omega_values'),
        'surface': ('length', 'twists', 'width'),
    }

    def check(self):
        subcommand = self['subcommand']
        missing = [
            k for k in self.REQUIRED.get(subcommand, ()) if self[k] is None]
        if missing:
            raise ValueError("%s requires %s" % (
                subcommand, ', '.join(missing)))

        if self['units'] != DIMENSIONAL:
            for key in 'hbar', 'mass':
                if self[key] is not None:
                    raise ValueError("%s requires --dimensional" % key)
            if self['temperature']:
                raise ValueError("temperature requires --dimensional")

        if subcommand in ('potential', 'solve', 'heun-check'):
            self.check_mode()

        if subcommand in self.REQUIRED:
            # Domain objects reject bad values as usage errors, before run.
            geometry = self.geometry()
            self.units()
            self.grid(geometry)
            if 'stability' == subcommand:
                self.scenario()

    def check_mode(self):
        omega = self.geometry().omega
        kx, ratio = self['kx'], self['ratio']
        if omega == 0:
            if ratio is not None:
                raise ValueError("C is undefined on a flat strip, use k_x")
            return
        if kx is None and ratio is None:
            raise ValueError("one of k_x or C is required")
        if kx is not None and ratio is not None:
            if not math.isclose(
                    kx, ratio * omega, rel_tol=MODE_CONSISTENCY,
                    abs_tol=MODE_CONSISTENCY):
                raise ValueError(
                    "k_x=%.17g and C=%.17g disagree at omega=%.17g"
                    % (kx, ratio, omega))

    def geometry(self, twists=None):
        twists = self['twists'] if twists is None else twists
        return StripGeometry(self['length'], twists or 0., self['width'])

    def mode(self, geometry):
        if self['kx'] is not None:
            return TransverseMode(self['kx'])
        if self['ratio'] is not None:
            return TransverseMode.from_ratio(self['ratio'], geometry)
        return TransverseMode(0.)

    def grid(self, geometry, points=None):
        return TransverseGrid.for_geometry(
            geometry, points or self['points'],
            bc_left=self['bc_left'], bc_right=self['bc_right'])

    def units(self):
        if DIMENSIONAL == self['units']:
            return UnitSystem(DIMENSIONAL, self['hbar'], self['mass'])
        return UnitSystem()

    def scenario(self):
        return StabilityScenario(
            self.geometry(), self['torsional_constant'], self['electrons'],
            spin_degeneracy=self['spin'], temperature=self['temperature'],
            units=self.units(),
        )

    def output_path(self):
        if self['output']:
            return self['output']
        # The Heun residual report is JSON only.
        fmt = 'json' if 'heun-check' == self['subcommand'] else self['format']
        return '%s.%s' % (self['subcommand'], fmt)

    def echo(self):
        # Resolved configuration, as recorded in the manifest.
        out = dict(
            (k, v) for k, v in self.items() if k not in self.PRIVATE)
        if self['length'] and self['width']:
            out['omega'] = self.geometry().omega
        return out

    def logging_dict(self):
        formatter = 'verbose' if self['verbosity'] == 'DEBUG' else 'info'
        return {
            'version': 1,
            'formatters': {
                'info': {
                    '()': __name__ + '.MultilineFormatter',
                    'format':
                        '%(asctime)s %(levelname)s:  %(message)s',
                },
                'verbose': {
                    '()': __name__ + '.MultilineFormatter',
                    'format':
                        '%(asctime)s %(levelname)s:  %(name)s: %(message)s',
                },
            },
            'handlers': {
                'raw': {
                    '()': 'logging.StreamHandler',
                    'formatter': formatter,
                },
                'colored': {
                    '()': __name__ + '.ColoredStreamHandler',
                    'formatter': formatter,
                },
            },
            'root': {
                'level': 'WARNING',
                'handlers': ['colored' if self['color'] else 'raw'],
            },
            'loggers': {
                __package__: {
                    'level': self['verbosity'],
                },
            },
        }
