# Transverse eigenproblem on xi in [0, D]:
#
#   -f''(xi) + U(xi) f(xi) = E f(xi)
#
# discretized with the three-point stencil. Eigenvalues come from LAPACK Sturm
# bisection (stebz), eigenvectors from inverse iteration (stein), both through
# scipy.linalg.eigh_tridiagonal.

from collections import namedtuple
import logging
import math

import numpy as np
from numpy.linalg import LinAlgError
from scipy.linalg import eigh_tridiagonal

from .geometry import TransverseMode, lame_h1, net_potential
from .utils import NumericalError, Timer, sign_changes


logger = logging.getLogger(__name__)


DIRICHLET = 'dirichlet'
NEUMANN = 'neumann'
BOUNDARY_CONDITIONS = (DIRICHLET, NEUMANN)

DEFAULT_POINTS = 4001
# LAPACK stein gives up after 5 inverse iterations per vector.
STEIN_MAX_ITERATIONS = 5
RESIDUAL_TOLERANCE = 1e-10
NODE_FLOOR = 1e-10


class TransverseGrid(namedtuple('TransverseGrid', [
        'xi_max', 'points', 'bc_left', 'bc_right', 'xi_min'])):
    """Uniform grid over [xi_min, xi_max], endpoints included."""

    __slots__ = ()

    def __new__(cls, xi_max, points=DEFAULT_POINTS,
                bc_left=DIRICHLET, bc_right=DIRICHLET, xi_min=0.):
        if points < 3:
            raise ValueError("Grid needs at least 3 points, got %d." % points)
        if xi_max <= xi_min:
            raise ValueError("Grid upper bound must exceed lower bound.")
        for bc in bc_left, bc_right:
            if bc not in BOUNDARY_CONDITIONS:
                raise ValueError("Unknown boundary condition %r." % (bc,))
        return super(TransverseGrid, cls).__new__(
            cls, float(xi_max), int(points), bc_left, bc_right, float(xi_min))

    @classmethod
    def for_geometry(cls, geometry, points=DEFAULT_POINTS, **kw):
        return cls(geometry.width, points, **kw)

    @property
    def spacing(self):
        return (self.xi_max - self.xi_min) / (self.points - 1)

    @property
    def nodes(self):
        return np.linspace(self.xi_min, self.xi_max, self.points)

    def refine(self):
        # Halve the spacing, keeping every existing node.
        return self._replace(points=2 * (self.points - 1) + 1)

    @property
    def unknowns(self):
        # Slice of nodes carried by the operator. Dirichlet ends are pinned.
        start = 1 if DIRICHLET == self.bc_left else 0
        stop = self.points - 1 if DIRICHLET == self.bc_right else self.points
        return slice(start, stop)

    @property
    def weights(self):
        # Trapezoid end weights on Neumann ends. They make the ghost-point
        # boundary rows symmetric after diagonal scaling.
        weights = np.ones(self.points)
        if NEUMANN == self.bc_left:
            weights[0] = .5
        if NEUMANN == self.bc_right:
            weights[-1] = .5
        return weights


class TridiagonalOperator(namedtuple('TridiagonalOperator', [
        'diagonal', 'off_diagonal', 'potential', 'grid'])):
    """Symmetric -d2/dxi2 + U on the grid unknowns."""

    __slots__ = ()

    @property
    def size(self):
        return len(self.diagonal)

    @property
    def norm(self):
        # Infinity norm, equal to the 1-norm for a symmetric matrix.
        row = np.abs(self.diagonal).copy()
        row[:-1] += np.abs(self.off_diagonal)
        row[1:] += np.abs(self.off_diagonal)
        return float(row.max())

    def apply(self, vector):
        out = self.diagonal * vector
        out[:-1] += self.off_diagonal * vector[1:]
        out[1:] += self.off_diagonal * vector[:-1]
        return out

    def dense(self):
        return (
            np.diag(self.diagonal)
            + np.diag(self.off_diagonal, 1)
            + np.diag(self.off_diagonal, -1))


def discretize(grid, geometry, mode):
    return operator_for_potential(
        grid, net_potential(grid.nodes, geometry, mode))


def operator_for_potential(grid, potential):
    # potential is sampled on every grid node.
    potential = np.asarray(potential, dtype=float)
    if potential.shape != (grid.points,):
        raise ValueError(
            "Potential has %d samples for %d grid points."
            % (potential.size, grid.points))
    h = grid.spacing
    unknowns = grid.unknowns

    diagonal = 2. / h ** 2 + potential[unknowns]
    off_diagonal = np.full(len(diagonal) - 1, -1. / h ** 2)
    # Ghost-point Neumann rows read (2f0 - 2f1)/h**2. Scaling the end unknown
    # by sqrt(1/2) makes them symmetric with off-diagonal -sqrt(2)/h**2.
    if NEUMANN == grid.bc_left:
        off_diagonal[0] *= math.sqrt(2)
    if NEUMANN == grid.bc_right:
        off_diagonal[-1] *= math.sqrt(2)

    return TridiagonalOperator(
        diagonal=diagonal, off_diagonal=off_diagonal,
        potential=potential, grid=grid,
    )


def operator_potential_floor(operator):
    return float(np.min(operator.potential))


class EigenSolution(namedtuple('EigenSolution', [
        'energies', 'wavefunctions', 'node_counts', 'residual_norms',
        'nodes', 'quadrature', 'operator_norm'])):
    """Lowest states of the transverse problem.

    wavefunctions[j] holds f on every grid node, Dirichlet ends included, with
    sum(quadrature * f**2) == 1.
    """

    __slots__ = ()

    def __len__(self):
        return len(self.energies)

    def density(self, index):
        return self.wavefunctions[index] ** 2


def _select(operator, index):
    try:
        energy, vector = eigh_tridiagonal(
            operator.diagonal, operator.off_diagonal,
            select='i', select_range=(index, index),
            lapack_driver='stebz', tol=np.finfo(float).tiny,
        )
    except LinAlgError as e:
        raise NumericalError(
            "Inverse iteration failed for state %d after %d iterations: %s."
            % (index, STEIN_MAX_ITERATIONS, e), index=index)
    return float(energy[0]), vector[:, 0]


def eigen_lowest(operator, k):
    if not 1 <= k <= operator.size:
        raise ValueError(
            "Requested %d states from an operator of size %d."
            % (k, operator.size))

    grid = operator.grid
    h = grid.spacing
    scale = np.sqrt(grid.weights)
    norm = operator.norm

    energies = []
    wavefunctions = []
    node_counts = []
    residuals = []
    for index in range(k):
        energy, vector = _select(operator, index)
        residual = float(
            np.linalg.norm(operator.apply(vector) - energy * vector)
            / np.linalg.norm(vector))
        if residual > RESIDUAL_TOLERANCE * max(1., norm):
            raise NumericalError(
                "State %d residual %.3g exceeds tolerance."
                % (index, residual),
                index=index)

        f = np.zeros(grid.points)
        f[grid.unknowns] = vector
        f /= scale
        f /= math.sqrt(np.sum(grid.weights * f ** 2) * h)
        # Deterministic sign: first significant lobe is positive.
        floor = NODE_FLOOR * np.max(np.abs(f))
        if f[np.argmax(np.abs(f) > floor)] < 0:
            f = -f

        energies.append(energy)
        wavefunctions.append(f)
        node_counts.append(sign_changes(f, floor))
        residuals.append(residual)

    energies = np.array(energies)
    if np.any(np.diff(energies) <= 0):
        raise NumericalError("Eigenvalues are not strictly increasing.")

    floor = operator_potential_floor(operator)
    for index, energy in enumerate(energies):
        if energy < floor - 1e-12 * max(1., abs(floor)):
            logger.warning(
                "State %d energy %.10g is below potential floor %.10g.",
                index, energy, floor)
        if node_counts[index] != index:
            logger.warning(
                "State %d has %d nodes.", index, node_counts[index])

    return EigenSolution(
        energies=energies,
        wavefunctions=np.array(wavefunctions),
        node_counts=node_counts,
        residual_norms=residuals,
        nodes=grid.nodes,
        quadrature=grid.weights * h,
        operator_norm=norm,
    )


def solve(geometry, mode, grid, k=1):
    return eigen_lowest(discretize(grid, geometry, mode), k)


def sturm_count(operator, energy):
    """Number of eigenvalues strictly below energy.

    Counts negative pivots of the LDL' factorization of A - energy.
    """
    diagonal = (operator.diagonal - energy).tolist()
    squares = (operator.off_diagonal ** 2).tolist()
    tiny = np.finfo(float).tiny
    count = 0
    pivot = diagonal[0]
    for i in range(len(diagonal)):
        if i:
            pivot = diagonal[i] - squares[i - 1] / pivot
        if pivot == 0.:
            pivot = -tiny
        if pivot < 0:
            count += 1
    return count


def lapack_count(operator, energy):
    # Same count through LAPACK bisection, from below the Gershgorin bound.
    lower = float(
        np.min(operator.diagonal)
        - 2 * np.max(np.abs(operator.off_diagonal)) - 1.)
    if energy <= lower:
        return 0
    values = eigh_tridiagonal(
        operator.diagonal, operator.off_diagonal, eigvals_only=True,
        select='v', select_range=(lower, energy), lapack_driver='stebz',
    )
    return int(np.count_nonzero(values < energy))


BoundStateCount = namedtuple('BoundStateCount', [
    'below_zero', 'below_tail', 'tail_value',
])


def bound_state_count(geometry, mode, grid):
    operator = discretize(grid, geometry, mode)
    below_zero = sturm_count(operator, 0.)
    check = lapack_count(operator, 0.)
    if check != below_zero:
        logger.warning(
            "Sturm count %d disagrees with LAPACK count %d.",
            below_zero, check)
    tail = float(operator.potential[-1])
    return BoundStateCount(
        below_zero=below_zero,
        below_tail=sturm_count(operator, tail),
        tail_value=tail,
    )


StateObservables = namedtuple('StateObservables', [
    'mean_xi', 'rms_xi', 'outer_mass',
])


def outer_edge(geometry):
    # Zero crossing of V_eff.
    if geometry.flat:
        return None
    return math.sqrt(2) / geometry.omega


def observables(solution, geometry):
    nodes = solution.nodes
    edge = outer_edge(geometry)
    out = []
    for index in range(len(solution)):
        mass = solution.quadrature * solution.density(index)
        mean = float(np.sum(nodes * mass))
        rms = math.sqrt(float(np.sum(nodes ** 2 * mass)))
        outer = None if edge is None else float(np.sum(mass[nodes > edge]))
        out.append(StateObservables(mean, rms, outer))
    return out


def full_wavefunction(solution, geometry, kx, x, index=0):
    # psi(x, xi) = exp(i kx x) f(xi) / sqrt(h1), on the area element dx dxi.
    x = np.asarray(x, dtype=float)
    transverse = solution.wavefunctions[index] / np.sqrt(
        lame_h1(solution.nodes, geometry))
    return np.exp(1j * kx * x)[:, None] * transverse[None, :]


DispersionTable = namedtuple('DispersionTable', [
    'kx', 'energies', 'monotone',
])


def dispersion(geometry, grid, kx_values, count=3, pool=None):
    kx_values = [float(k) for k in kx_values]
    if not all(math.isfinite(k) for k in kx_values):
        raise ValueError("kx values must be finite.")

    def row(kx):
        return solve(geometry, TransverseMode(kx), grid, count).energies

    rows = pool.map(row, kx_values) if pool else [row(k) for k in kx_values]
    energies = np.array(rows)

    # Levels must not decrease with |kx|.
    order = np.argsort(np.abs(kx_values), kind='stable')
    tolerance = 1e-12 * max(1., float(np.max(np.abs(energies))))
    monotone = bool(np.all(np.diff(energies[order], axis=0) >= -tolerance))
    if not monotone:
        logger.warning("Dispersion is not monotone in |kx|.")
    return DispersionTable(np.array(kx_values), energies, monotone)


Refinement = namedtuple('Refinement', [
    'energy', 'extrapolated', 'grid', 'converged', 'history', 'tolerance',
])


def ground_tolerance(geometry):
    scale = max(geometry.omega ** 2, (math.pi / geometry.width) ** 2)
    return 1e-9 * scale


def converged_ground_state(geometry, mode, grid, tolerance=None,
                           max_points=2 ** 17 + 1):
    """Double the grid until the ground energy moves by less than tolerance."""
    if tolerance is None:
        tolerance = ground_tolerance(geometry)

    timer = Timer()
    history = []
    previous = None
    while True:
        with timer:
            energy = float(solve(geometry, mode, grid).energies[0])
        history.append((grid.points, energy))
        logger.debug(
            "Ground energy %.15g with %d points.", energy, grid.points)
        if previous is not None and abs(energy - previous) < tolerance:
            converged = True
            break
        if grid.refine().points > max_points:
            converged = False
            logger.warning(
                "Ground energy not converged to %.3g with %d points.",
                tolerance, grid.points)
            break
        previous = energy
        grid = grid.refine()

    logger.debug("Refinement took %s.", timer.delta)
    extrapolated = energy
    if len(history) > 1:
        # Second order stencil, Richardson step.
        extrapolated = energy + (energy - history[-2][1]) / 3.
    return Refinement(
        energy=energy, extrapolated=extrapolated, grid=grid,
        converged=converged, history=history, tolerance=tolerance,
    )


ConvergenceOrder = namedtuple('ConvergenceOrder', [
    'points', 'energies', 'ratio', 'extrapolated',
])


def convergence_order(geometry, mode, grid, index=0):
    # Three grid levels, each halving the spacing.
    grids = [grid, grid.refine(), grid.refine().refine()]
    energies = [
        float(solve(geometry, mode, g, index + 1).energies[index])
        for g in grids
    ]
    coarse, middle, fine = energies
    ratio = (coarse - middle) / (middle - fine)
    return ConvergenceOrder(
        points=[g.points for g in grids],
        energies=energies,
        ratio=ratio,
        extrapolated=fine + (fine - middle) / 3.,
    )


def richardson_energies(geometry, mode, grid, k=1):
    # Lowest k matrix eigenvalues with the h**2 term removed.
    coarse = solve(geometry, mode, grid, k).energies
    fine = solve(geometry, mode, grid.refine(), k).energies
    return fine + (fine - coarse) / 3.


WidthReport = namedtuple('WidthReport', [
    'width', 'points', 'ground_energy', 'bound_states',
])


def ground_state_vs_width(geometry, mode, widths, spacing):
    """Ground energy and bound state count as the strip widens.

    Binding in the inverse-square tail is cut-off sensitive, so counts are
    reported per width rather than assumed.
    """
    out = []
    for width in widths:
        strip = geometry._replace(width=float(width))
        points = max(3, int(round(width / spacing)) + 1)
        grid = TransverseGrid.for_geometry(strip, points)
        energy = float(solve(strip, mode, grid).energies[0])
        count = bound_state_count(strip, mode, grid).below_zero
        out.append(WidthReport(float(width), points, energy, count))
    return out
