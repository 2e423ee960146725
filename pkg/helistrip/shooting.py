# Shooting oracle for the transverse eigenproblem.
#
# Both schemes march w_i = c_i y_i with the recurrence
#
#   w[i+1] - 2 w[i] + w[i-1] = -h**2 g[i] y[i],   g = E - U,
#
# kept in difference form so h**2 g is never added to a number of order 2.
# Numerov uses c = 1 + h**2 g / 12 and is fourth order. three_point uses c = 1
# and reproduces the matrix of spectrum.discretize exactly, so its roots are
# the matrix eigenvalues.

from collections import namedtuple
import logging
import math

import numpy as np
from scipy.optimize import brentq

from .geometry import net_potential
from .spectrum import DIRICHLET, NEUMANN
from .utils import NumericalError, sign_changes


logger = logging.getLogger(__name__)


NUMEROV = 'numerov'
THREE_POINT = 'three_point'
SCHEMES = (NUMEROV, THREE_POINT)

RESCALE_LIMIT = 1e150
MAX_BISECTIONS = 200


ShootResult = namedtuple('ShootResult', [
    'energy', 'node_count', 'below', 'mismatch', 'matching_index',
])


def matching_index(potential):
    # Match at the potential minimum, or mid-grid on a flat potential.
    points = len(potential)
    if np.ptp(potential) == 0:
        return points // 2
    # Keep clear of the ends when the grid allows it.
    low, high = (2, points - 3) if points >= 6 else (1, points - 1)
    return int(np.argmin(potential[low:high])) + low


def _march(q, w0, w1, stop):
    # Returns w[0..stop], rescaling by positive factors on overflow.
    w = [w0, w1]
    wi = w1
    d = w1 - w0
    for i in range(1, stop):
        d -= q[i] * wi
        wi += d
        w.append(wi)
        if abs(wi) > RESCALE_LIMIT:
            w = [v / RESCALE_LIMIT for v in w]
            wi = w[-1]
            d /= RESCALE_LIMIT
            if not all(math.isfinite(v) for v in w[-2:]):
                raise NumericalError("Rescaling failed during integration.")
    if not math.isfinite(wi):
        raise NumericalError("Integration overflowed.")
    return np.array(w)


def _start(bc, g0, c0, c1, h):
    # First two values of w from one boundary.
    if DIRICHLET == bc:
        return 0., c1 * h
    # Ghost node mirrors node 1: w1 - w0 = -h**2 g0 / 2 with y0 = 1.
    return c0, c0 - h ** 2 * g0 / 2.


def _coefficients(g, h, scheme):
    if THREE_POINT == scheme:
        c = np.ones_like(g)
    elif NUMEROV == scheme:
        c = 1 + h ** 2 * g / 12.
    else:
        raise ValueError("Unknown shooting scheme %r." % (scheme,))
    return c, (h ** 2 * g / c)


class Shooter(object):
    def __init__(self, geometry, mode, grid, scheme=NUMEROV):
        if scheme not in SCHEMES:
            raise ValueError("Unknown shooting scheme %r." % (scheme,))
        self.grid = grid
        self.scheme = scheme
        self.h = grid.spacing
        self.potential = net_potential(grid.nodes, geometry, mode)
        self.matching = matching_index(self.potential)
        self.evaluations = 0

    def __repr__(self):
        return '<%s %s %d points>' % (
            self.__class__.__name__, self.scheme, self.grid.points)

    def integrate(self, energy):
        h = self.h
        g = energy - self.potential
        c, q = _coefficients(g, h, self.scheme)
        points = len(g)
        m = self.matching

        # Left solution runs past the right end onto a ghost node.
        w0, w1 = _start(self.grid.bc_left, g[0], c[0], c[1], h)
        q_ghost = np.append(q, q[-2])
        c_ghost = np.append(c, c[-2])
        left = _march(q_ghost, w0, w1, points) / c_ghost

        w0, w1 = _start(self.grid.bc_right, g[-1], c[-1], c[-2], h)
        right = _march(q[::-1], w0, w1, points - 1 - m)[::-1] / c[m:]
        self.evaluations += 1
        return left, right

    def sturm_sequence(self, left):
        # Leading minors of h**2 (A - E), up to positive factors.
        # A Dirichlet left end pins y[0], so minors start at y[1]. A Neumann
        # right end adds the ghost-row minor y[N] - y[N-2].
        points = self.grid.points
        start = 0 if NEUMANN == self.grid.bc_left else 1
        sequence = list(left[start:points])
        if NEUMANN == self.grid.bc_right:
            sequence.append(left[points] - left[points - 2])
        return sequence

    def shoot(self, energy):
        left, right = self.integrate(energy)
        m = self.matching
        points = self.grid.points

        yl0, yl1 = left[m], left[m + 1]
        yr0, yr1 = right[0], right[1]
        scale = math.hypot(yl0, yl1) * math.hypot(yr0, yr1)
        mismatch = (yl1 * yr0 - yl0 * yr1) / (self.h * scale)

        below = sign_changes(self.sturm_sequence(left))
        return ShootResult(
            energy=energy,
            node_count=sign_changes(left[1:points - 1]),
            below=below,
            mismatch=mismatch,
            matching_index=m,
        )


def shoot(geometry, mode, grid, trial_energy, scheme=NUMEROV):
    return Shooter(geometry, mode, grid, scheme).shoot(trial_energy)


def shooting_roots(geometry, mode, grid, count, scheme=NUMEROV):
    """Lowest count eigenvalues as zeros of the shooting mismatch.

    Each root is first isolated by bisection on the Sturm count, then refined
    with Brent's method on the mismatch.
    """
    shooter = Shooter(geometry, mode, grid, scheme)
    floor = float(np.min(shooter.potential))
    width = grid.xi_max - grid.xi_min

    counts = {}

    def below(energy):
        if energy not in counts:
            counts[energy] = shooter.shoot(energy).below
        return counts[energy]

    lower = floor - 1.
    if below(lower):
        raise NumericalError("States found below the potential floor.")
    gap = ((count + 1) * math.pi / width) ** 2 + 1.
    upper = floor + gap
    while below(upper) < count:
        gap *= 4
        upper = floor + gap
        if not math.isfinite(upper):
            raise NumericalError("Failed to bracket %d states." % count)

    roots = []
    for index in range(count):
        a = max(e for e, n in counts.items() if n <= index)
        b = min(e for e, n in counts.items() if n >= index + 1)
        for _ in range(MAX_BISECTIONS):
            if below(a) == index and below(b) == index + 1:
                break
            middle = (a + b) / 2.
            if below(middle) <= index:
                a = middle
            else:
                b = middle
        else:
            raise NumericalError(
                "Failed to isolate state %d." % index, index=index)

        root = brentq(
            lambda e: shooter.shoot(e).mismatch, a, b,
            xtol=1e-14 * max(1., abs(a), abs(b)), rtol=1e-14,
        )
        logger.debug("Shooting root %d at %.15g.", index, root)
        roots.append(root)

    logger.debug(
        "Shooting took %d integrations for %d roots.",
        shooter.evaluations, count)
    return np.array(roots)
