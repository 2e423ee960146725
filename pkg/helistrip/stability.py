# Twisted against flat strip: elastic cost of the twist versus the electronic
# energy of N non-interacting electrons filling transverse levels at T=0.

from collections import namedtuple
import logging
import math

from .geometry import NATURAL_UNITS, TransverseMode, thermal_twist_scale
from .spectrum import DIRICHLET, solve
from .utils import NumericalError


logger = logging.getLogger(__name__)


PERIODIC = 'periodic'
# Levels are computed until the lowest level at |kx| clears the highest
# occupied level by this factor.
SAFETY_FACTOR = 2.
MAX_KX_INDEX = 100000


class StabilityScenario(namedtuple('StabilityScenario', [
        'geometry', 'torsional_constant', 'electron_count',
        'spin_degeneracy', 'kx_quantization', 'temperature', 'units'])):
    """Strip of fixed width and length, twist scanned through omega.

    torsional_constant is C*, the elastic energy per unit length being
    C* omega**2 / 2.
    """

    __slots__ = ()

    def __new__(cls, geometry, torsional_constant, electron_count,
                spin_degeneracy=2, kx_quantization=PERIODIC, temperature=0.,
                units=NATURAL_UNITS):
        if torsional_constant < 0:
            raise ValueError("Torsional constant must be nonnegative.")
        if electron_count < 0 or int(electron_count) != electron_count:
            raise ValueError("Electron count must be a nonnegative integer.")
        if spin_degeneracy < 1:
            raise ValueError("Spin degeneracy must be at least 1.")
        if PERIODIC != kx_quantization:
            raise ValueError(
                "Unsupported kx quantization %r." % (kx_quantization,))
        if temperature < 0:
            raise ValueError("Temperature must be nonnegative.")
        return super(StabilityScenario, cls).__new__(
            cls, geometry, float(torsional_constant), int(electron_count),
            int(spin_degeneracy), kx_quantization, float(temperature), units)

    @property
    def orbitals(self):
        # Spatial levels touched by the filling.
        return -(-self.electron_count // self.spin_degeneracy)

    def kx(self, j):
        return 2 * math.pi * j / self.geometry.length


def elastic_energy(scenario, omega):
    if omega < 0:
        raise ValueError("Twist rate must be nonnegative.")
    return .5 * scenario.torsional_constant * omega ** 2 \
        * scenario.geometry.length


Level = namedtuple('Level', ['j', 'kx', 'm', 'energy'])


def level_order(level):
    # Energy, then |kx|, then transverse index. j last for a total order.
    return (level.energy, abs(level.kx), level.m, level.j)


def fill(levels, electron_count, spin_degeneracy):
    """Occupy sorted levels from the bottom. Yields (level, occupancy)."""
    remaining = electron_count
    for level in sorted(levels, key=level_order):
        if remaining <= 0:
            break
        occupancy = min(spin_degeneracy, remaining)
        remaining -= occupancy
        yield level, occupancy
    if remaining > 0:
        raise NumericalError(
            "%d electrons left without a level." % remaining)


def _grid_size(grid):
    return len(range(grid.points)[grid.unknowns])


LevelTable = namedtuple('LevelTable', [
    'omega', 'levels', 'occupied', 'j_max',
])


def level_table(scenario, omega, grid, pool=None):
    """Transverse levels over the periodic kx ladder, with the T=0 filling.

    Levels with -j are not solved: U depends on kx**2 only.
    """
    geometry = scenario.geometry.with_omega(omega)
    need = scenario.orbitals
    if 0 == need:
        return LevelTable(omega, [], [], 0)

    per_kx = min(need, _grid_size(grid))

    def transverse(j):
        mode = TransverseMode(scenario.kx(j))
        return solve(geometry, mode, grid, per_kx).energies

    levels = []
    ceilings = []
    batch = getattr(pool, 'size', 1) if pool else 1
    j = 0
    j_max = None
    while j_max is None:
        block = list(range(j, j + batch))
        rows = pool.map(transverse, block) if pool else map(transverse, block)
        for jj, energies in zip(block, rows):
            for m, energy in enumerate(energies):
                for sign in ((1,) if 0 == jj else (1, -1)):
                    levels.append(Level(
                        sign * jj, sign * scenario.kx(jj), m, float(energy)))
            ceilings.append(float(energies[-1]))
            if _budget_cleared(levels, need, float(energies[0])):
                j_max = jj
                break
        j += batch
        if j_max is None and j > MAX_KX_INDEX:
            raise NumericalError(
                "Level budget exhausted at |j|=%d. Reduce N or widen the "
                "strip." % MAX_KX_INDEX)

    fermi = sorted(level.energy for level in levels)[need - 1]
    if per_kx < need and min(ceilings) <= fermi:
        raise NumericalError(
            "Level budget exhausted: %d transverse levels per kx do not "
            "reach the Fermi level. Increase grid points." % per_kx)

    occupied = list(fill(
        levels, scenario.electron_count, scenario.spin_degeneracy))
    logger.debug(
        "Filled %d levels up to %.15g with |j| <= %d at omega=%.15g.",
        len(occupied), occupied[-1][0].energy, j_max, omega)
    return LevelTable(omega, sorted(levels, key=level_order), occupied, j_max)


def _budget_cleared(levels, need, lowest_here):
    # U grows with kx**2, so no |kx| beyond this one can reach the filling.
    if len(levels) < need:
        return False
    ordered = sorted(level.energy for level in levels)
    bottom, top = ordered[0], ordered[need - 1]
    return lowest_here > top \
        and lowest_here - bottom > SAFETY_FACTOR * (top - bottom)


def electronic_energy(scenario, omega, grid, pool=None):
    table = level_table(scenario, omega, grid, pool)
    total = math.fsum(
        occupancy * level.energy for level, occupancy in table.occupied)
    return scenario.units.to_dimensional(total)


def box_filling_energy(scenario, grid=None):
    """Analytic T=0 filling of the flat Dirichlet strip.

    Levels are (m pi/D)**2 + kx**2, filled with the same ordering as the
    numerical levels.
    """
    if grid is not None and not (
            DIRICHLET == grid.bc_left == grid.bc_right):
        raise ValueError("Box levels assume Dirichlet ends.")
    need = scenario.orbitals
    width = scenario.geometry.width
    levels = [
        Level(j, scenario.kx(j), m - 1,
              (m * math.pi / width) ** 2 + scenario.kx(j) ** 2)
        for j in range(-need, need + 1)
        for m in range(1, need + 1)
    ]
    occupied = fill(levels, scenario.electron_count, scenario.spin_degeneracy)
    total = math.fsum(occ * level.energy for level, occ in occupied)
    return scenario.units.to_dimensional(total)


ScanRow = namedtuple('ScanRow', ['omega', 'elastic', 'electronic', 'total'])
StabilityScan = namedtuple('StabilityScan', [
    'rows', 'omega_star', 'total_star', 'total_flat', 'twist_favoured',
])


def total_energy_scan(scenario, omega_values, grid, pool=None):
    omegas = sorted(set(float(w) for w in omega_values))
    if 0. not in omegas:
        raise ValueError("Twist scan must include omega=0.")
    if omegas[0] < 0:
        raise ValueError("Twist rates must be nonnegative.")

    def row(omega):
        elastic = elastic_energy(scenario, omega)
        electronic = electronic_energy(scenario, omega, grid)
        return ScanRow(omega, elastic, electronic, elastic + electronic)

    rows = pool.map(row, omegas) if pool else [row(w) for w in omegas]
    rows = list(rows)
    # First minimum wins, so ties favour the flatter strip.
    star = min(rows, key=lambda r: r.total)
    flat = rows[0]
    favoured = star.total < flat.total
    logger.info(
        "Lowest total energy %.10g at omega=%.10g%s.",
        star.total, star.omega, ", twist favoured" if favoured else "")
    return StabilityScan(
        rows=rows, omega_star=star.omega, total_star=star.total,
        total_flat=flat.total, twist_favoured=favoured,
    )


ThermalOccupation = namedtuple('ThermalOccupation', [
    'omega', 'window', 'fraction', 'occupied',
])


def occupied_fraction_below_thermal(scenario, grid, omega=None):
    """Share of occupied electrons with |kx| <= omega/4.

    omega defaults to the thermal twist scale of the scenario temperature.
    """
    units = scenario.units
    if not units.is_dimensional:
        raise ValueError("Thermal window requires dimensional units.")
    if scenario.temperature <= 0:
        raise ValueError("Thermal window requires a positive temperature.")
    if omega is None:
        omega = thermal_twist_scale(scenario.temperature, units)

    table = level_table(scenario, omega, grid)
    window = omega / 4.
    occupied = sum(occ for _, occ in table.occupied)
    if 0 == occupied:
        return ThermalOccupation(omega, window, 1., 0)
    inside = sum(
        occ for level, occ in table.occupied if abs(level.kx) <= window)
    return ThermalOccupation(omega, window, inside / float(occupied), occupied)
