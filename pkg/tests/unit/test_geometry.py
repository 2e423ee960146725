import math

import numpy as np
import pytest


def test_unit_system():
    from helistrip.geometry import (
        ELECTRON_MASS, HBAR, NATURAL_UNITS, UnitSystem)

    assert 1. == NATURAL_UNITS.energy_scale
    assert not NATURAL_UNITS.is_dimensional
    assert 3. == NATURAL_UNITS.to_dimensional(3.)

    si = UnitSystem.dimensional()
    assert si.is_dimensional
    assert HBAR == si.hbar
    assert ELECTRON_MASS == si.mass
    assert HBAR ** 2 / (2 * ELECTRON_MASS) == si.energy_scale
    energy = 1e17
    assert energy == pytest.approx(si.to_natural(si.to_dimensional(energy)))

    # Defaults fill in.
    assert HBAR == UnitSystem('dimensional').hbar

    with pytest.raises(ValueError):
        UnitSystem('imperial')
    with pytest.raises(ValueError):
        UnitSystem.dimensional(mass=-1.)


def test_strip_geometry():
    from helistrip.geometry import StripGeometry

    strip = StripGeometry(100., 5, 20.)
    assert 0.3141592653589793 == pytest.approx(strip.omega, rel=1e-15)
    assert not strip.flat
    assert StripGeometry(100., 0, 20.).flat

    strip = StripGeometry.from_omega(1., 40.)
    assert 2 * math.pi == pytest.approx(strip.length)
    assert 1. == pytest.approx(strip.omega)
    assert 3. == pytest.approx(strip.with_omega(3.).omega)
    assert strip.length == strip.with_omega(3.).length

    with pytest.raises(ValueError):
        StripGeometry(0., 1, 1.)
    with pytest.raises(ValueError):
        StripGeometry(1., 1, -1.)
    with pytest.raises(ValueError):
        StripGeometry(1., -1, 1.)


def test_transverse_mode():
    from helistrip.geometry import StripGeometry, TransverseMode

    strip = StripGeometry.from_omega(2., 10.)
    mode = TransverseMode.from_ratio(.25, strip)
    assert .5 == pytest.approx(mode.kx)
    assert .25 == pytest.approx(mode.kinetic_energy)
    assert .25 == pytest.approx(mode.ratio(strip))

    flat = StripGeometry(1., 0, 1.)
    assert mode.ratio(flat) is None
    with pytest.raises(ValueError):
        TransverseMode.from_ratio(.1, flat)


def test_v_eff_landmarks_values():
    from helistrip.geometry import StripGeometry, v_eff

    strip = StripGeometry.from_omega(1., 40.)
    assert .5 == pytest.approx(v_eff(0., strip), rel=1e-10)
    assert abs(v_eff(math.sqrt(2), strip)) < 1e-15
    assert -1 / 48. == pytest.approx(v_eff(math.sqrt(5), strip), rel=1e-10)


def test_partial_fractions():
    from helistrip.geometry import (
        StripGeometry, v_eff, v_eff_partial_fractions)

    xi = np.linspace(0., 50., 501)
    for omega in .1, 1., 10.:
        strip = StripGeometry.from_omega(omega, 50.)
        assert np.allclose(
            v_eff(xi, strip), v_eff_partial_fractions(xi, strip),
            rtol=0, atol=1e-14 * omega ** 2)


def test_metric_oracle():
    from helistrip.geometry import StripGeometry, v_eff, v_eff_from_metric

    rng = np.random.RandomState(20160101)
    xi = rng.uniform(0., 100., 1000)
    for omega in .1, 1., 10.:
        strip = StripGeometry.from_omega(omega, 100.)
        delta = np.abs(v_eff(xi, strip) - v_eff_from_metric(xi, strip))
        assert np.max(delta) <= 1e-7 * omega ** 2


def test_metric_oracle_large_step(caplog):
    from helistrip.geometry import StripGeometry, v_eff_from_metric

    strip = StripGeometry.from_omega(1., 10.)
    with pytest.raises(ValueError):
        v_eff_from_metric([1.], strip, step=0.)

    v_eff_from_metric([1.], strip, step=.1)
    assert 'unreliable' in caplog.text


def test_net_potential_identity():
    from helistrip.geometry import (
        StripGeometry, TransverseMode, lame_h1, net_potential, v_eff)

    rng = np.random.RandomState(13)
    for _ in range(1000):
        xi = rng.uniform(0., 50.)
        omega = rng.uniform(.01, 10.)
        kx = rng.uniform(-5., 5.)
        strip = StripGeometry.from_omega(omega, 50.)
        mode = TransverseMode(kx)
        expected = v_eff(xi, strip) + kx ** 2 / lame_h1(xi, strip) ** 2
        scale = omega ** 2 + kx ** 2
        assert abs(net_potential(xi, strip, mode) - expected) \
            <= 1e-13 * scale


def test_net_potential_flat():
    from helistrip.geometry import StripGeometry, TransverseMode, net_potential

    flat = StripGeometry(1., 0, 2.)
    values = net_potential(np.linspace(0, 2., 5), flat, TransverseMode(.3))
    assert np.allclose(values, .09, rtol=1e-15)


@pytest.mark.parametrize('ratio', [.1, .3, .45])
def test_negativity_threshold(ratio):
    from helistrip.geometry import (
        StripGeometry, TransverseMode, negativity_threshold, net_potential)

    omega = .7
    strip = StripGeometry.from_omega(omega, 200.)
    mode = TransverseMode.from_ratio(ratio, strip)
    xi = np.linspace(0., 200., 200001)
    h = xi[1] - xi[0]
    u = net_potential(xi, strip, mode)
    crossing = xi[np.argmax(u < 0)]
    expected = negativity_threshold(ratio) / omega
    assert abs(crossing - expected) <= h
    assert expected == pytest.approx(
        math.sqrt((2 + 4 * ratio ** 2) / (1 - 4 * ratio ** 2)) / omega)

    assert negativity_threshold(.5) is None


@pytest.mark.parametrize('ratio', [0., .1, .3])
def test_landmarks(ratio):
    from helistrip.geometry import (
        StripGeometry, TransverseMode, landmarks, net_potential)

    omega = 1.3
    strip = StripGeometry.from_omega(omega, 40.)
    mode = TransverseMode.from_ratio(ratio, strip)
    report = landmarks(strip, mode)

    exact = -omega ** 2 * (1 - 4 * ratio ** 2) ** 2 / 48.
    assert exact == pytest.approx(report.u_min, rel=1e-8)
    assert exact == pytest.approx(
        float(net_potential(report.xi_min, strip, mode)), rel=1e-8)
    assert report.xi_min == pytest.approx(report.xi_min_numeric, rel=1e-5)
    assert mode.kx ** 2 + omega ** 2 / 2. == pytest.approx(report.v0)
    assert 'minimum location disagreement' not in report.flags

    if ratio:
        # The closed form only holds at C=0.
        assert 'closed-form U_min differs from exact minimum' in report.flags
    else:
        assert -omega ** 2 / 48. == pytest.approx(report.closed_form_u_min)
        assert [] == report.flags


def test_landmarks_repulsive():
    from helistrip.geometry import StripGeometry, TransverseMode, landmarks

    strip = StripGeometry.from_omega(1., 40.)
    report = landmarks(strip, TransverseMode.from_ratio(.6, strip))
    assert report.xi_min is None
    assert report.xi_zero is None
    assert ['no attractive region'] == report.flags

    with pytest.raises(ValueError):
        landmarks(StripGeometry(1., 0, 1.), TransverseMode(0.))


def test_thermal_twist_scale():
    from helistrip.geometry import (
        BOLTZMANN, ELECTRON_MASS, HBAR, NATURAL_UNITS, UnitSystem,
        thermal_twist_scale)

    si = UnitSystem.dimensional()
    omega = thermal_twist_scale(1., si)
    expected = math.sqrt(2 * ELECTRON_MASS * BOLTZMANN) / HBAR
    assert expected == pytest.approx(omega, rel=1e-15)
    # hbar**2 omega**2 / 2m == kB T
    assert BOLTZMANN * 4. == pytest.approx(
        si.to_dimensional(thermal_twist_scale(4., si) ** 2))

    with pytest.raises(ValueError):
        thermal_twist_scale(1., NATURAL_UNITS)
    with pytest.raises(ValueError):
        thermal_twist_scale(0., si)


def test_reference_potentials():
    from helistrip.geometry import (
        StripGeometry, clark_strip_potential, tube_binding_potential, v_eff)

    omega = 2.
    strip = StripGeometry.from_omega(omega, 10.)
    assert v_eff(0., strip) == pytest.approx(
        clark_strip_potential(0., 0., omega))
    assert -.25 == tube_binding_potential(1.)


def test_sample_surface():
    from helistrip.geometry import StripGeometry, sample_surface

    strip = StripGeometry(10., 2, 3.)
    points = sample_surface(strip, 11, 4)
    assert (44, 3) == points.shape

    x, y, z = points.T
    xi = np.tile(np.linspace(0., 3., 4), 11)
    assert np.allclose(np.hypot(y, z), xi)
    assert np.allclose(x[:4], 0.)
    # Last ruling is back to its starting angle after 2 turns.
    assert np.allclose(y[-4:], xi[-4:])
    assert np.allclose(z[-4:], 0., atol=1e-12)

    with pytest.raises(ValueError):
        sample_surface(strip, 1, 4)


def test_potential_table():
    from helistrip.geometry import (
        FLAT_FALLBACK, StripGeometry, TransverseMode, UnitSystem,
        potential_table)

    strip = StripGeometry.from_omega(1., 5.)
    xi = np.linspace(0., 5., 11)
    table = potential_table(strip, TransverseMode(0.), xi)
    assert 11 == len(table.u)
    assert np.allclose(table.u, table.v_eff)

    si = UnitSystem.dimensional()
    table = potential_table(strip, TransverseMode(0.), xi, si)
    assert si.to_dimensional(.5) == pytest.approx(table.v_eff[0])
    assert [] == table.flags

    flat = StripGeometry(10., 0, 1.)
    table = potential_table(flat, TransverseMode(.5), xi)
    assert np.allclose(.25, table.u)
    assert [FLAT_FALLBACK] == table.flags


@pytest.mark.parametrize('omega', [.3, 1., 2.5])
def test_landmarks_axis_values(omega):
    from helistrip.geometry import StripGeometry, TransverseMode, landmarks

    strip = StripGeometry.from_omega(omega, 40.)
    report = landmarks(strip, TransverseMode(0.))
    assert abs(report.xi_zero - math.sqrt(2) / omega) <= 1e-10
    assert abs(report.xi_min - math.sqrt(5) / omega) <= 1e-10
    assert abs(report.u_min + omega ** 2 / 48.) <= 1e-12
