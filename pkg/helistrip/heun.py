# Change of variables from the transverse equation to the normal form of a
# confluent Heun equation, with residual checks of every stage.
#
#   f(xi) = H(z),        z = omega**2 xi**2
#   H(z) = z**(1/4) L(z)                      (printed substitution)
#   L(z) = M(zeta),      zeta = 1 + z
#   M'' + Q(zeta) M = 0
#
# Stages are evaluated as printed and as re-derived. Re-derivation gives
#
#   -z H'' - H'/2 + W H = -e H,    W = ((4C**2-1)/(1+z) + 3/(1+z)**2) / 16
#
# with e = -E/(4 omega**2), and the normal form needs H = z**(-1/4) L:
#
#   -z L'' - 3/(16 z) L + W L = -e L
#   Q(zeta) = 3/(16 (zeta-1)**2) - (e + (4C**2+2)/16)/(zeta-1)
#             + (4C**2+2)/(16 zeta) + 3/(16 zeta**2)
#
# Nothing is corrected silently: printed forms are measured and flagged.

from collections import namedtuple, OrderedDict
import logging

import numpy as np

from .utils import NumericalError


logger = logging.getLogger(__name__)


E_PLUS = 'e_plus'
E_MINUS = 'e_minus'
CONVENTIONS = (E_PLUS, E_MINUS)

PRINTED = 'printed'
FROM_Q = 'from_q'
REDERIVED = 'rederived'
NORMAL = 'normal_form'
PRINTED_Q_NORMAL = 'printed_q_normal_form'

# Stages of the reduction, by dependent variable.
Z_FORM = 'H(z)'
L_FORM = 'L(z)'
M_FORM = 'M(zeta)'

# Stages whose residual exceeds this multiple of the reference are flagged.
FLAG_FACTOR = 100.
# Nodes with omega*xi below this floor sit in the boundary layer of the
# singular point zeta = 1 and are left out of residuals.
DEFAULT_FLOOR = 2.
MIN_NODES = 7


def scaled_eigenvalue(energy, omega, convention):
    if omega <= 0:
        raise ValueError("Heun reduction requires a twisted strip.")
    if E_PLUS == convention:
        return energy / (4 * omega ** 2)
    elif E_MINUS == convention:
        return -energy / (4 * omega ** 2)
    raise ValueError("Unknown sign convention %r." % (convention,))


def _check_zeta(zeta):
    zeta = np.asarray(zeta, dtype=float)
    if np.any(zeta <= 1):
        raise ValueError("Q(zeta) is defined for zeta > 1 only.")
    return zeta


def q_of_zeta(zeta, ratio, e):
    zeta = _check_zeta(zeta)
    c2 = 4 * ratio ** 2
    return (
        -(e + (c2 - 1) / 16.) / (zeta - 1)
        + (c2 + 2) / (16. * zeta)
        + 3. / (16. * zeta ** 2))


def q_of_zeta_rederived(zeta, ratio, e):
    zeta = _check_zeta(zeta)
    c2 = 4 * ratio ** 2
    return (
        3. / (16. * (zeta - 1) ** 2)
        - (e + (c2 + 2) / 16.) / (zeta - 1)
        + (c2 + 2) / (16. * zeta)
        + 3. / (16. * zeta ** 2))


def transverse_weight(z, ratio):
    # W(z): the net potential over 4 omega**2.
    c2 = 4 * ratio ** 2
    return ((c2 - 1) / (1 + z) + 3. / (1 + z) ** 2) / 16.


CoefficientSet = namedtuple('CoefficientSet', [
    'provenance', 'A', 'B', 'C', 'D', 'E',
])


def heun_coefficients(ratio, e):
    """Coefficients of A + B/x + C/(x-1) + D/x**2 + E/(x-1)**2.

    Returns the printed list, the set read term by term from Q, and the
    re-derived set, keyed by provenance.
    """
    c2 = 4 * ratio ** 2
    cpole = -(e + (c2 - 1) / 16.)
    return OrderedDict([
        (PRINTED, CoefficientSet(
            PRINTED, 0., (c2 + 2) / 12., cpole, 3. / 16., 0.)),
        (FROM_Q, CoefficientSet(
            FROM_Q, 0., (c2 + 2) / 16., cpole, 3. / 16., 0.)),
        (REDERIVED, CoefficientSet(
            REDERIVED, 0., (c2 + 2) / 16., -(e + (c2 + 2) / 16.),
            3. / 16., 3. / 16.)),
    ])


def coefficient_discrepancies(ratio, e):
    sets = heun_coefficients(ratio, e)
    out = []
    for name in 'ABCDE':
        printed = getattr(sets[PRINTED], name)
        from_q = getattr(sets[FROM_Q], name)
        if printed != from_q:
            out.append(
                "coefficient %s is printed as %.17g but Q gives %.17g"
                % (name, printed, from_q))
    return out


HeunVariables = namedtuple('HeunVariables', [
    'xi', 'z', 'H', 'L', 'zeta', 'M',
])


def to_heun_variables(f, xi, geometry):
    omega = geometry.omega
    if omega <= 0:
        raise ValueError("Heun reduction requires a twisted strip.")
    f = np.asarray(f, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any(np.diff(xi) <= 0):
        raise ValueError("xi grid must be strictly increasing.")
    if xi[0] <= 0:
        # z**(-1/4) is singular on the axis.
        logger.warning("Dropping xi=0 node from Heun variables.")
        keep = xi > 0
        f, xi = f[keep], xi[keep]

    z = (omega * xi) ** 2
    H = f
    L = z ** -.25 * H
    return HeunVariables(xi=xi, z=z, H=H, L=L, zeta=1 + z, M=L)


def from_heun_variables(variables):
    # Inverse maps back to f on the xi grid.
    return variables.z ** .25 * variables.M


def nonuniform_derivatives(x, y):
    """First and second derivatives on interior nodes of a non-uniform grid.

    Standard three-point stencils, second order on smooth images of a
    uniform grid.
    """
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    first = np.gradient(y, x)[1:-1]
    second = 2 * (
        y[:-2] / (hm * (hm + hp))
        - y[1:-1] / (hm * hp)
        + y[2:] / (hp * (hm + hp)))
    return first, second


StageResidual = namedtuple('StageResidual', [
    'equation', 'variant', 'convention', 'residual', 'flagged',
])


def _relative(terms):
    # max |sum of terms| over max of the summed magnitudes.
    total = np.abs(sum(terms))
    scale = np.max(sum(np.abs(t) for t in terms))
    if scale == 0:
        return 0.
    return float(np.max(total) / scale)


def _stage_residuals(variables, window, ratio, e):
    z = variables.z
    H = variables.H
    W = transverse_weight(z, ratio)

    dH, d2H = nonuniform_derivatives(z, H)
    inner = slice(1, -1)
    zi, Wi, Hi = z[inner], W[inner], H[inner]

    # Printed substitution, L = z**(-1/4) H.
    L = variables.L
    dL, d2L = nonuniform_derivatives(z, L)
    Li = L[inner]
    # Normal form substitution, N = z**(1/4) H.
    N = z ** .25 * H
    dN, d2N = nonuniform_derivatives(z, N)
    Ni = N[inner]
    zeta = variables.zeta[inner]

    def measure(*terms):
        return _relative([t[window] for t in terms])

    out = OrderedDict()
    out[(Z_FORM, PRINTED)] = measure(-zi * d2H, -dH / 2., Wi * Hi, e * Hi)
    out[(L_FORM, PRINTED)] = measure(
        -zi * d2L, -3. / 16. * Li, Wi * Li, e * Li)
    out[(L_FORM, REDERIVED)] = measure(
        -zi * d2L, -dL, Li / (16. * zi), Wi * Li, e * Li)
    out[(L_FORM, NORMAL)] = measure(
        -zi * d2N, -3. / (16. * zi) * Ni, Wi * Ni, e * Ni)
    # M(zeta) = L(z) and zeta - z = 1, so d/dzeta = d/dz.
    out[(M_FORM, PRINTED)] = measure(d2L, q_of_zeta(zeta, ratio, e) * Li)
    out[(M_FORM, PRINTED_Q_NORMAL)] = measure(
        d2N, q_of_zeta(zeta, ratio, e) * Ni)
    out[(M_FORM, REDERIVED)] = measure(
        d2N, q_of_zeta_rederived(zeta, ratio, e) * Ni)
    return out


ResidualReport = namedtuple('ResidualReport', [
    'convention', 'e', 'reference', 'stages', 'coefficients',
    'discrepancies', 'nodes',
])


def residual_chain(f, xi, energy, geometry, mode, floor=DEFAULT_FLOOR):
    """Measure every stage of the Heun reduction on a converged state.

    f solves the transverse equation on xi with eigenvalue energy, natural
    units. Both sign conventions for e are measured; the one with the smaller
    residual in the z form wins.
    """
    omega = geometry.omega
    ratio = mode.ratio(geometry)
    if ratio is None:
        raise ValueError("Heun reduction requires a twisted strip.")

    variables = to_heun_variables(f, xi, geometry)
    window = (omega * variables.xi[1:-1]) >= floor
    nodes = int(np.count_nonzero(window))
    if nodes < MIN_NODES:
        raise NumericalError(
            "Only %d usable interior nodes for Heun residuals." % nodes)

    measured = OrderedDict()
    for convention in CONVENTIONS:
        e = scaled_eigenvalue(energy, omega, convention)
        measured[convention] = (
            e, _stage_residuals(variables, window, ratio, e))

    winner = min(
        CONVENTIONS, key=lambda c: measured[c][1][(Z_FORM, PRINTED)])
    e = measured[winner][0]
    reference = measured[winner][1][(M_FORM, REDERIVED)]
    logger.debug(
        "Sign convention %s wins with e=%.15g, reference residual %.3g.",
        winner, e, reference)

    stages = []
    for convention, (_, residuals) in measured.items():
        for (equation, variant), residual in residuals.items():
            flagged = residual > FLAG_FACTOR * reference
            stages.append(StageResidual(
                equation, variant, convention, residual, flagged))
            if flagged and convention == winner:
                logger.warning(
                    "Stage %s (%s) is inconsistent: residual %.3g.",
                    equation, variant, residual)

    discrepancies = coefficient_discrepancies(ratio, e)
    for message in discrepancies:
        logger.warning("%s.", message[0].upper() + message[1:])

    return ResidualReport(
        convention=winner, e=e, reference=reference, stages=stages,
        coefficients=heun_coefficients(ratio, e),
        discrepancies=discrepancies, nodes=nodes,
    )


def flagged_stages(report):
    return [
        s for s in report.stages
        if s.flagged and s.convention == report.convention]


HeunNormalForm = namedtuple('HeunNormalForm', [
    'ratio', 'e', 'sign_convention', 'coefficients', 'zeta_grid',
    'q_samples', 'm_samples',
])


def normal_form(f, xi, energy, geometry, mode, convention=E_MINUS):
    """Sampled normal form: zeta grid, Q as printed and M."""
    ratio = mode.ratio(geometry)
    if ratio is None:
        raise ValueError("Heun reduction requires a twisted strip.")
    e = scaled_eigenvalue(energy, geometry.omega, convention)
    variables = to_heun_variables(f, xi, geometry)
    return HeunNormalForm(
        ratio=ratio, e=e, sign_convention=convention,
        coefficients=heun_coefficients(ratio, e)[FROM_Q],
        zeta_grid=variables.zeta,
        q_samples=q_of_zeta(variables.zeta, ratio, e),
        m_samples=variables.M,
    )
