from collections import namedtuple
from io import StringIO
import json
import logging

import numpy as np
import pytest


def test_sidecar():
    from helistrip.output import MANIFEST_SUFFIX, sidecar

    assert 'a.csv.manifest.json' == sidecar('a.csv', MANIFEST_SUFFIX)
    assert sidecar('-', MANIFEST_SUFFIX) is None
    assert sidecar(None, MANIFEST_SUFFIX) is None


def test_write_csv():
    from helistrip.output import write_csv

    fo = StringIO()
    write_csv(fo, ['a', 'b'], [[1, .5], (2, None)])
    assert "a,b\n1,0.5\n2,\n" == fo.getvalue()

    fo = StringIO()
    write_csv(fo, ['x', 'y'], [[.1 + .2, None], [np.float64(.1), None]])
    assert "x,y\n0.30000000000000004,\n0.10000000000000001,\n" == (
        fo.getvalue())

    fo = StringIO()
    write_csv(fo, ['a'], [])
    assert "a\n" == fo.getvalue()

    with pytest.raises(ValueError):
        write_csv(StringIO(), ['a', 'b'], [[1]])


def test_dumps():
    from helistrip.output import dumps

    Point = namedtuple('Point', ['x', 'y'])
    payload = dict(
        b=Point(np.float64(1.5), np.array([1, 2])),
        a=[float('inf'), np.bool_(False)],
    )
    text = dumps(payload)
    assert text.endswith('\n')
    assert text.index('"a"') < text.index('"b"')
    assert dict(
        a=['inf', False], b=dict(x=1.5, y=[1, 2])) == json.loads(text)


def test_manifest(tmpdir):
    from helistrip.output import Manifest

    manifest = Manifest(dict(width=20.), '1.0')
    assert 'running' in repr(manifest)
    with manifest.timer('total'):
        pass
    manifest.flag("zeta")
    manifest.flag("alpha")
    manifest.flag("zeta")
    manifest.tolerance('residual', 1e-8)
    manifest.record_file('-')
    manifest.record_file('out.csv')
    manifest.status = 'ok'

    path = tmpdir.join('out.csv.manifest.json')
    manifest.write(str(path))
    payload = json.loads(path.read())
    assert ['alpha', 'zeta'] == payload['data']['flags']
    assert ['out.csv'] == payload['data']['files']
    assert 1e-8 == payload['data']['tolerances']['residual']
    assert 'ok' == payload['run']['status']
    assert 'total' in payload['run']['seconds']

    # Nothing to write for stdout.
    manifest.write(None)


def test_write_table(tmpdir):
    from helistrip.output import write_table

    path = tmpdir.join('t.json')
    write_table(str(path), 'json', ['x'], [[1.], [2.]])
    assert dict(columns=['x'], rows=[[1.], [2.]]) == json.loads(path.read())

    path = tmpdir.join('t.csv')
    write_table(str(path), 'csv', ['x'], iter([[1.], [2.]]))
    assert "x\n1\n2\n" == path.read()


def test_write_stdout(capsys):
    from helistrip.output import STDOUT, write_report

    write_report(STDOUT, dict(a=1))
    out, _ = capsys.readouterr()
    assert {'a': 1} == json.loads(out)


def test_flag_collector():
    from helistrip.output import FlagCollector, Manifest

    manifest = Manifest({}, '1.0')
    logger = logging.getLogger('helistrip.tests')
    collector = FlagCollector(manifest)
    logger.addHandler(collector)
    try:
        logger.info("Not a flag.")
        logger.warning("Stage %s is off.", 'L(z)')
    finally:
        logger.removeHandler(collector)
    assert ['Stage L(z) is off.'] == manifest.data['flags']


def test_manifest_flags_from_threads():
    from concurrent.futures import ThreadPoolExecutor
    from helistrip.output import Manifest

    manifest = Manifest({}, '1.0')
    messages = ['level %d' % (i % 7) for i in range(700)]
    with ThreadPoolExecutor(8) as executor:
        list(executor.map(manifest.flag, messages))

    assert sorted(set(messages)) == manifest.as_dict()['data']['flags']
