import math

import pytest


def scenario(electrons=2, torsional=1., length=10., width=1., **kw):
    from helistrip.geometry import StripGeometry
    from helistrip.stability import StabilityScenario

    return StabilityScenario(
        StripGeometry(length, 0, width), torsional, electrons, **kw)


def grid(points=4001, width=1.):
    from helistrip.spectrum import TransverseGrid

    return TransverseGrid(width, points)


def test_scenario():
    from helistrip.stability import StabilityScenario

    my = scenario(electrons=5)
    assert 3 == my.orbitals
    assert 2 * math.pi / 10. == pytest.approx(my.kx(1))
    assert 1 == scenario(electrons=1).orbitals
    assert 0 == scenario(electrons=0).orbitals
    assert 5 == scenario(electrons=5, spin_degeneracy=1).orbitals

    strip = my.geometry
    with pytest.raises(ValueError):
        StabilityScenario(strip, -1., 2)
    with pytest.raises(ValueError):
        StabilityScenario(strip, 1., 2.5)
    with pytest.raises(ValueError):
        StabilityScenario(strip, 1., 2, spin_degeneracy=0)
    with pytest.raises(ValueError):
        StabilityScenario(strip, 1., 2, kx_quantization='hard_wall')
    with pytest.raises(ValueError):
        StabilityScenario(strip, 1., 2, temperature=-1.)


def test_elastic_energy():
    from helistrip.stability import elastic_energy

    my = scenario(torsional=1., length=10.)
    assert 0. == elastic_energy(my, 0.)
    assert 5. == pytest.approx(elastic_energy(my, 1.))
    assert 4 * elastic_energy(my, .3) == pytest.approx(
        elastic_energy(my, .6))
    with pytest.raises(ValueError):
        elastic_energy(my, -.1)


def test_fill():
    from helistrip.stability import Level, fill
    from helistrip.utils import NumericalError

    levels = [
        Level(1, .5, 0, 2.), Level(-1, -.5, 0, 2.), Level(0, 0., 0, 1.),
        Level(0, 0., 1, 2.),
    ]
    occupied = list(fill(levels, 5, 2))
    assert [(0, 0), (0, 1), (-1, 0)] == [
        (level.j, level.m) for level, _ in occupied]
    assert [2, 2, 1] == [occ for _, occ in occupied]

    # Equal energies: lower |kx| first, then negative j.
    occupied = list(fill(levels, 7, 2))
    assert (1, 0) == (occupied[-1][0].j, occupied[-1][0].m)

    with pytest.raises(NumericalError):
        list(fill(levels, 9, 2))


def test_electronic_energy():
    from helistrip.stability import electronic_energy

    assert 0. == electronic_energy(scenario(electrons=0), 0., grid())
    value = electronic_energy(scenario(electrons=2), 0., grid())
    assert 2 * math.pi ** 2 == pytest.approx(value, rel=1e-5)


@pytest.mark.parametrize('electrons', [1, 5, 12, 20])
def test_box_filling(electrons):
    from helistrip.stability import box_filling_energy, electronic_energy

    my = scenario(electrons=electrons)
    numeric = electronic_energy(my, 0., grid())
    assert box_filling_energy(my, grid()) == pytest.approx(numeric, rel=1e-6)


def test_box_filling_needs_dirichlet():
    from helistrip.spectrum import TransverseGrid
    from helistrip.stability import box_filling_energy

    with pytest.raises(ValueError):
        box_filling_energy(
            scenario(), TransverseGrid(1., 11, bc_left='neumann'))


def test_electronic_grows_with_electrons():
    from helistrip.stability import electronic_energy

    values = [
        electronic_energy(scenario(electrons=n), 0., grid(801))
        for n in range(0, 12, 3)]
    assert values == sorted(values)


def test_level_table_pool(mocker):
    from helistrip.pool import WorkerPool
    from helistrip.stability import level_table

    my = scenario(electrons=7)
    serial = level_table(my, .5, grid(401))
    with WorkerPool(3) as pool:
        spy = mocker.spy(pool, 'map')
        parallel = level_table(my, .5, grid(401), pool)
    assert spy.called
    assert serial.occupied == parallel.occupied
    assert serial.j_max <= parallel.j_max
    # Both signs of kx are listed for j != 0.
    js = {level.j for level in serial.levels}
    assert js == {-j for j in js}


def test_budget_exhausted(mocker):
    from helistrip.stability import electronic_energy
    from helistrip.utils import NumericalError

    mocker.patch('helistrip.stability.MAX_KX_INDEX', 2)
    my = scenario(electrons=20, length=1000.)
    with pytest.raises(NumericalError) as ei:
        electronic_energy(my, 0., grid(401))
    assert 'budget exhausted' in str(ei.value)


def test_transverse_ceiling():
    from helistrip.stability import electronic_energy
    from helistrip.utils import NumericalError

    # One unknown per kx cannot hold two orbitals.
    with pytest.raises(NumericalError) as ei:
        electronic_energy(scenario(electrons=4), 0., grid(3))
    assert 'grid points' in str(ei.value)


def test_total_energy_scan():
    from helistrip.stability import total_energy_scan

    my = scenario(electrons=4, torsional=1e6)
    scan = total_energy_scan(my, [.4, 0., .2, .2], grid(401))
    assert [0., .2, .4] == [row.omega for row in scan.rows]
    for row in scan.rows:
        assert row.elastic + row.electronic == row.total
    elastic = [row.elastic for row in scan.rows]
    assert elastic == sorted(elastic)
    assert 0. == scan.omega_star
    assert not scan.twist_favoured
    assert scan.total_flat == scan.rows[0].total == scan.total_star

    with pytest.raises(ValueError):
        total_energy_scan(my, [.1, .2], grid(401))
    with pytest.raises(ValueError):
        total_energy_scan(my, [-.1, 0.], grid(401))


def test_total_energy_scan_pool():
    from helistrip.pool import WorkerPool
    from helistrip.stability import total_energy_scan

    my = scenario(electrons=4, torsional=0., width=20.)
    serial = total_energy_scan(my, [0., .5, 1.], grid(401, 20.))
    with WorkerPool(2) as pool:
        parallel = total_energy_scan(my, [0., .5, 1.], grid(401, 20.), pool)
    assert serial == parallel
    assert 0. == serial.rows[0].elastic


def test_thermal_fraction():
    from helistrip.geometry import UnitSystem
    from helistrip.stability import occupied_fraction_below_thermal

    with pytest.raises(ValueError):
        occupied_fraction_below_thermal(
            scenario(temperature=1.), grid())

    si = UnitSystem.dimensional()
    with pytest.raises(ValueError):
        occupied_fraction_below_thermal(scenario(units=si), grid())

    my = scenario(
        electrons=2, length=1e-6, width=1e-8, temperature=1., units=si)
    thermal = occupied_fraction_below_thermal(my, grid(401, 1e-8))
    assert 1. == thermal.fraction
    assert 2 == thermal.occupied
    assert thermal.omega / 4. == thermal.window
