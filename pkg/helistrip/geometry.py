# Helicoidal strip geometry, unit conventions and the closed-form potentials.
#
# Everything here is computed in natural units, hbar**2/2m == 1, where
# energies carry the dimension of an inverse squared length and the twist rate
# omega is the only scale. UnitSystem converts at the boundary.

from collections import namedtuple
import logging
import math

import numpy as np
from scipy.optimize import minimize_scalar


logger = logging.getLogger(__name__)


NATURAL = 'natural'
DIMENSIONAL = 'dimensional'

HBAR = 1.054571817e-34  # J.s
ELECTRON_MASS = 9.1093837e-31  # kg
BOLTZMANN = 1.380649e-23  # J/K

# h2 is identically 1 on the helicoid.
LAME_H2 = 1.

# Largest reliable step*omega for the metric oracle.
METRIC_STEP_LIMIT = 1e-3
# Reported whenever U is evaluated on a flat strip.
FLAT_FALLBACK = 'flat strip: C undefined, U = V_eff + kx**2/h1**2'


class UnitSystem(namedtuple('UnitSystem', ['mode', 'hbar', 'mass'])):
    __slots__ = ()

    def __new__(cls, mode=NATURAL, hbar=None, mass=None):
        if mode not in (NATURAL, DIMENSIONAL):
            raise ValueError("Unknown unit mode %r." % (mode,))
        if DIMENSIONAL == mode:
            hbar = HBAR if hbar is None else hbar
            mass = ELECTRON_MASS if mass is None else mass
            if hbar <= 0 or mass <= 0:
                raise ValueError("hbar and mass must be positive.")
        return super(UnitSystem, cls).__new__(cls, mode, hbar, mass)

    @classmethod
    def dimensional(cls, hbar=HBAR, mass=ELECTRON_MASS):
        return cls(DIMENSIONAL, hbar, mass)

    @property
    def is_dimensional(self):
        return DIMENSIONAL == self.mode

    @property
    def energy_scale(self):
        # hbar**2/2m, in J.m**2 in dimensional mode.
        if self.is_dimensional:
            return self.hbar ** 2 / (2 * self.mass)
        return 1.

    def to_dimensional(self, energy):
        return energy * self.energy_scale

    def to_natural(self, energy):
        return energy / self.energy_scale


NATURAL_UNITS = UnitSystem()
_StripGeometry = namedtuple('StripGeometry', ['length', 'twists', 'width'])


class StripGeometry(_StripGeometry):
    """Helicoid swept by a segment of width D over total length L.

    twists is the number of 2pi turns, possibly zero for the flat strip.
    """

    __slots__ = ()

    def __new__(cls, length, twists, width):
        if length <= 0:
            raise ValueError("Strip length must be positive.")
        if width <= 0:
            raise ValueError("Strip width must be positive.")
        if twists < 0:
            raise ValueError("Twist count must be nonnegative.")
        return super(StripGeometry, cls).__new__(
            cls, float(length), float(twists), float(width))

    @classmethod
    def from_omega(cls, omega, width, length=None):
        if length is None:
            length = 2 * math.pi / omega if omega > 0 else 1.
        return cls(length, omega * length / (2 * math.pi), width)

    @property
    def omega(self):
        return 2 * math.pi * self.twists / self.length

    @property
    def flat(self):
        return 0 == self.twists

    def with_omega(self, omega):
        # Same length and width, twist count adjusted.
        return self._replace(twists=omega * self.length / (2 * math.pi))


class TransverseMode(namedtuple('TransverseMode', ['kx'])):
    """Longitudinal plane wave exp(i kx x) accompanying a transverse state."""

    __slots__ = ()

    @classmethod
    def from_ratio(cls, ratio, geometry):
        if geometry.flat:
            raise ValueError("C=kx/omega is undefined on a flat strip.")
        return cls(ratio * geometry.omega)

    @property
    def kinetic_energy(self):
        # E0, natural units.
        return self.kx ** 2

    def ratio(self, geometry):
        if geometry.flat:
            return None
        return self.kx / geometry.omega


def lame_h1(xi, geometry):
    # Accepts complex xi, the metric oracle relies on it.
    omega = geometry.omega
    return np.sqrt(1 + (omega * xi) ** 2)


def v_eff(xi, geometry, units=NATURAL_UNITS):
    omega = geometry.omega
    u = (omega * np.asarray(xi, dtype=float)) ** 2
    value = omega ** 2 / 2. * (1 - u / 2.) / (1 + u) ** 2
    return units.to_dimensional(value)


def v_eff_partial_fractions(xi, geometry):
    omega = geometry.omega
    u = (omega * np.asarray(xi, dtype=float)) ** 2
    return omega ** 2 / 4. * (-1. / (1 + u) + 3. / (1 + u) ** 2)


def default_metric_step(xi, geometry):
    omega = geometry.omega
    base = 1e-6 / omega if omega > 0 else 1e-6
    return np.maximum(base, 1e-9 * (1 + np.abs(xi)))


def v_eff_from_metric(xi, geometry, step=None):
    """Effective potential from numerical derivatives of h1 alone.

    h1' comes from a complex step, h1'' from a central difference of that
    complex-step derivative. Neither involves the closed form of V_eff.
    """
    xi = np.asarray(xi, dtype=float)
    if step is None:
        step = default_metric_step(xi, geometry)
    step = np.asarray(step, dtype=float)
    if np.any(step <= 0):
        raise ValueError("Metric step must be positive.")
    if np.any(step * geometry.omega > METRIC_STEP_LIMIT):
        logger.warning(
            "Metric step %g is large against 1/omega. Result is unreliable.",
            np.max(step))

    def dh1(at):
        return np.imag(lame_h1(at + 1j * step, geometry)) / step

    h1 = np.real(lame_h1(xi, geometry))
    d1 = dh1(xi)
    d2 = (dh1(xi + step) - dh1(xi - step)) / (2 * step)
    return -(-d2 / (2 * h1) + d1 ** 2 / (4 * h1 ** 2))


def net_potential(xi, geometry, mode):
    xi = np.asarray(xi, dtype=float)
    if geometry.flat:
        logger.debug("%s.", FLAT_FALLBACK)
        return v_eff(xi, geometry) + mode.kx ** 2 / lame_h1(xi, geometry) ** 2

    omega = geometry.omega
    ratio = mode.ratio(geometry)
    u = (omega * xi) ** 2
    return omega ** 2 / 4. * (
        (4 * ratio ** 2 - 1) / (1 + u) + 3. / (1 + u) ** 2)


def negativity_threshold(ratio):
    # omega*xi beyond which U < 0, None when U > 0 everywhere.
    if 4 * ratio ** 2 >= 1:
        return None
    return math.sqrt((2 + 4 * ratio ** 2) / (1 - 4 * ratio ** 2))


def closed_form_u_min(geometry, mode):
    # (hbar**2/6m)(kx**2 - omega**2/16), natural units.
    return (mode.kx ** 2 - geometry.omega ** 2 / 16.) / 3.


LandmarkReport = namedtuple('LandmarkReport', [
    'v0', 'xi_zero', 'xi_min', 'u_min', 'xi_min_numeric', 'closed_form_u_min',
    'flags',
])


def landmarks(geometry, mode):
    if geometry.flat:
        raise ValueError("Landmarks require a twisted strip.")

    omega = geometry.omega
    ratio = mode.ratio(geometry)
    v0 = float(net_potential(0., geometry, mode))
    closed = closed_form_u_min(geometry, mode)
    attraction = 1 - 4 * ratio ** 2

    if attraction <= 0:
        logger.debug("C**2 >= 1/4. U > 0 everywhere.")
        return LandmarkReport(
            v0=v0, xi_zero=None, xi_min=None, u_min=None,
            xi_min_numeric=None, closed_form_u_min=closed,
            flags=['no attractive region'],
        )

    flags = []
    xi_zero = negativity_threshold(ratio) / omega
    # 1 + (omega xi_min)**2 = 6 / (1 - 4C**2).
    xi_min = math.sqrt(6. / attraction - 1) / omega
    u_min = -omega ** 2 * attraction ** 2 / 48.

    found = minimize_scalar(
        lambda xi: float(net_potential(xi, geometry, mode)),
        bounds=(0., 10 * xi_min), method='bounded',
        options=dict(xatol=1e-9 * xi_min),
    )
    if abs(found.x - xi_min) > 1e-5 * xi_min:
        logger.warning(
            "Numerical minimum at %.10g disagrees with analytic %.10g.",
            found.x, xi_min)
        flags.append('minimum location disagreement')

    if abs(closed - u_min) > 1e-12 * abs(u_min):
        logger.warning(
            "Closed-form U_min gives %.10g, exact minimum is %.10g.",
            closed, u_min)
        flags.append('closed-form U_min differs from exact minimum')

    return LandmarkReport(
        v0=v0, xi_zero=xi_zero, xi_min=xi_min, u_min=u_min,
        xi_min_numeric=float(found.x), closed_form_u_min=closed, flags=flags,
    )


def thermal_twist_scale(temperature, units):
    # omega such that hbar**2 omega**2/2m ~ kB T.
    if not units.is_dimensional:
        raise ValueError("Thermal twist scale requires dimensional units.")
    if temperature <= 0:
        raise ValueError("Temperature must be positive.")
    return math.sqrt(2 * units.mass * BOLTZMANN * temperature) / units.hbar


def clark_strip_potential(curvature, torsion, twist_rate, units=NATURAL_UNITS):
    # Narrow strip potential along a space curve. Only its k=0, tau=0 form is
    # used, as a check of V_eff(0).
    value = -curvature ** 2 / 4. + (torsion - twist_rate) ** 2 / 2.
    return units.to_dimensional(value)


def tube_binding_potential(curvature, units=NATURAL_UNITS):
    return units.to_dimensional(-curvature ** 2 / 4.)


def sample_surface(geometry, nx, nxi):
    """Points (x, xi cos wx, xi sin wx), row-major over x then xi."""
    if nx < 2 or nxi < 2:
        raise ValueError("Surface mesh needs at least 2x2 points.")
    x = np.linspace(0., geometry.length, nx)
    xi = np.linspace(0., geometry.width, nxi)
    xx, xixi = np.meshgrid(x, xi, indexing='ij')
    angle = geometry.omega * xx
    return np.column_stack([
        xx.ravel(),
        (xixi * np.cos(angle)).ravel(),
        (xixi * np.sin(angle)).ravel(),
    ])


PotentialTable = namedtuple('PotentialTable', [
    'xi', 'v_eff', 'u', 'geometry', 'mode', 'units', 'flags',
])


def potential_table(geometry, mode, xi, units=NATURAL_UNITS):
    xi = np.asarray(xi, dtype=float)
    return PotentialTable(
        xi=xi,
        v_eff=v_eff(xi, geometry, units),
        u=units.to_dimensional(net_potential(xi, geometry, mode)),
        geometry=geometry, mode=mode, units=units,
        flags=[FLAT_FALLBACK] if geometry.flat else [],
    )
