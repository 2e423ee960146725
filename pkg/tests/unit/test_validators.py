import pytest


def test_numbers():
    from helistrip.validators import count, nonnegative, number, positive

    assert number(None) is None
    assert 1.5 == number('1.5')
    assert -2. == number(-2)
    with pytest.raises(ValueError):
        number('pouet')
    with pytest.raises(ValueError):
        number(True)
    with pytest.raises(ValueError):
        number('nan')
    with pytest.raises(ValueError):
        number(float('inf'))

    assert 1e-8 == positive('1e-8')
    with pytest.raises(ValueError):
        positive(0)

    assert 0. == nonnegative('0')
    with pytest.raises(ValueError):
        nonnegative(-1e-300)

    assert 3 == count('3')
    assert 3 == count(3.)
    assert 0 == count(0)
    with pytest.raises(ValueError):
        count(2.5)
    with pytest.raises(ValueError):
        count(-1)


def test_points():
    from helistrip.validators import points, threads

    assert points(None) is None
    assert 3 == points('3')
    with pytest.raises(ValueError):
        points(2)

    assert 4 == threads('4')
    with pytest.raises(ValueError):
        threads(0)


def test_choices():
    from helistrip.validators import (
        boundary, output_format, scheme, subcommand, units)

    assert 'neumann' == boundary('Neumann')
    with pytest.raises(ValueError):
        boundary('robin')

    assert 'three_point' == scheme('three-point')
    assert 'numerov' == scheme('NUMEROV')
    with pytest.raises(ValueError):
        scheme('euler')

    assert 'heun-check' == subcommand('heun-check')
    assert subcommand(None) is None
    with pytest.raises(ValueError):
        subcommand('sync')

    assert 'json' == output_format('JSON')
    with pytest.raises(ValueError):
        output_format('xml')

    assert 'dimensional' == units(True)
    assert 'natural' == units(False)
    assert 'dimensional' == units('Dimensional')
    with pytest.raises(ValueError):
        units('imperial')


def test_boolean():
    from helistrip.validators import boolean

    assert boolean(True) is True
    assert boolean(None) is False
    assert boolean('Yes') is True
    assert boolean('1') is True
    assert boolean('') is False
    assert boolean('off') is False
    with pytest.raises(ValueError):
        boolean('maybe')


def test_float_list():
    from helistrip.validators import float_list

    assert float_list(None) is None
    assert [0., .5, 1.] == float_list('0, .5,1,')
    assert [0., 2.] == float_list([0, '2'])
    assert [3.] == float_list(3)
    with pytest.raises(ValueError):
        float_list(dict(a=1))
    with pytest.raises(ValueError):
        float_list('0,a')
    with pytest.raises(ValueError):
        float_list(True)


def test_verbosity():
    from helistrip.validators import verbosity

    assert 'DEBUG' == verbosity('DEBUG')
    assert 'DEBUG' == verbosity([3, 1])
    assert 'DEBUG' == verbosity([3, 1, 1, 1])
    assert 'CRITICAL' == verbosity([3, -1, -1, -1, -1])
    assert 'WARNING' == verbosity([3, -1])

    with pytest.raises(ValueError):
        verbosity('TOTO')
