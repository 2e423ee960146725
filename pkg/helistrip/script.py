import logging
import os
import pdb
import resource
import sys

import numpy as np

from . import geometry as G
from . import heun
from . import output
from . import spectrum
from . import stability
from .config import Configuration, __version__
from .pool import WorkerPool
from .shooting import NUMEROV, shooting_roots
from .utils import NumericalError, UserError


logger = logging.getLogger(__name__)

# three_point roots are checked against the matrix on the same grid, numerov
# roots against the Richardson extrapolated matrix eigenvalues.
ORACLE_TOLERANCE = 1e-8


def main():
    config = Configuration()
    debug = False

    try:
        debug = config.bootstrap(environ=os.environ)
        if debug:
            logger.debug("Debug mode enabled.")
        config.load()
        exit(run(config))
    except pdb.bdb.BdbQuit:
        logger.info("Graceful exit from debugger.")
    except UserError as e:
        logger.critical("%s", e)
        exit(e.exit_code)
    except Exception:
        logger.exception('Unhandled error:')
        if debug and sys.stdout.isatty():
            logger.debug("Dropping in debugger.")
            pdb.post_mortem(sys.exc_info()[2])
    exit(1)


def run(config):
    """Run the configured subcommand. Returns the exit code.

    The manifest is written in every case, before a UserError propagates.
    """
    path = config.output_path()
    manifest = output.Manifest(config.echo(), __version__)
    manifest.record_file(path)
    collector = output.FlagCollector(manifest)
    package_logger = logging.getLogger(__package__)
    package_logger.addHandler(collector)

    handler = SUBCOMMANDS[config['subcommand']]
    try:
        with manifest.timer('total'), WorkerPool(config['threads']) as pool:
            handler(config, manifest, path, pool)
    except UserError as e:
        manifest.status = 'failed'
        manifest.error = str(e)
        if isinstance(e, NumericalError) and e.index is not None:
            manifest.error = "state %d: %s" % (e.index, e)
        raise
    except Exception as e:
        manifest.status = 'failed'
        manifest.error = "%s: %s" % (e.__class__.__name__, e)
        raise
    else:
        manifest.status = 'ok'
    finally:
        package_logger.removeHandler(collector)
        manifest.write(output.sidecar(path, output.MANIFEST_SUFFIX))
        logger.debug(
            "Run took %s.", manifest.timer('total').delta)
        rusage = resource.getrusage(resource.RUSAGE_SELF)
        logger.debug(
            "Used up to %.1fMiB of memory.", rusage.ru_maxrss / 1024.)

    return 0


def describe_grid(grid):
    return dict(
        xi_max=grid.xi_max, points=grid.points, spacing=grid.spacing,
        bc_left=grid.bc_left, bc_right=grid.bc_right,
    )


def do_potential(config, manifest, path, pool):
    geometry = config.geometry()
    mode = config.mode(geometry)
    units = config.units()
    grid = config.grid(geometry)
    manifest.data['grid'] = describe_grid(grid)

    table = G.potential_table(geometry, mode, grid.nodes, units)
    manifest.data['reference'] = dict(
        v_eff_axis=float(G.v_eff(0., geometry, units)),
        narrow_strip_axis=G.clark_strip_potential(
            0., 0., geometry.omega, units),
        # Helices xi=const bend most, by omega/2, at omega*xi = 1.
        tube_max_helix_curvature=G.tube_binding_potential(
            geometry.omega / 2., units),
    )
    for flag in table.flags:
        manifest.flag(flag)
    if not geometry.flat:
        report = G.landmarks(geometry, mode)
        manifest.data['landmarks'] = report
        for flag in report.flags:
            manifest.flag(flag)

    output.write_table(
        path, config['format'], ['xi', 'v_eff', 'u'],
        zip(table.xi, table.v_eff, table.u))


def do_solve(config, manifest, path, pool):
    geometry = config.geometry()
    mode = config.mode(geometry)
    units = config.units()
    grid = config.grid(geometry)
    states = config['states']
    if geometry.flat:
        manifest.flag(G.FLAT_FALLBACK)

    if config['refine']:
        with manifest.timer('refine'):
            refinement = spectrum.converged_ground_state(geometry, mode, grid)
        manifest.tolerance('refinement', refinement.tolerance)
        manifest.data['refinement'] = dict(
            converged=refinement.converged, history=refinement.history,
            extrapolated=units.to_dimensional(refinement.extrapolated))
        grid = refinement.grid
    manifest.data['grid'] = describe_grid(grid)
    manifest.tolerance('residual', spectrum.RESIDUAL_TOLERANCE)

    with manifest.timer('eigen'):
        solution = spectrum.solve(geometry, mode, grid, states)
        counts = spectrum.bound_state_count(geometry, mode, grid)
    manifest.data['bound_states'] = counts

    oracle = [None] * states
    if config['oracle']:
        with manifest.timer('oracle'):
            oracle = shooting_roots(
                geometry, mode, grid, states, config['scheme'])
            reference = solution.energies
            if NUMEROV == config['scheme']:
                reference = spectrum.richardson_energies(
                    geometry, mode, grid, states)
        manifest.tolerance('oracle', ORACLE_TOLERANCE)
        manifest.data['oracle'] = oracle_summary(
            reference, oracle, config['scheme'], geometry)

    rows = []
    for index, state in enumerate(spectrum.observables(solution, geometry)):
        root = oracle[index]
        rows.append([
            index,
            units.to_dimensional(solution.energies[index]),
            None if root is None else units.to_dimensional(root),
            solution.node_counts[index],
            state.mean_xi, state.rms_xi, state.outer_mass,
            solution.residual_norms[index],
        ])
    output.write_table(path, config['format'], [
        'index', 'energy', 'oracle_energy', 'nodes', 'mean_xi', 'rms_xi',
        'outer_mass', 'residual',
    ], rows)

    if config['wavefunctions']:
        side = output.sidecar(path, '.wavefunctions.csv')
        columns = [solution.nodes] + list(solution.wavefunctions)
        output.write_table(
            side or output.STDOUT, 'csv',
            ['xi'] + ['f%d' % i for i in range(states)], zip(*columns))
        manifest.record_file(side)


def oracle_summary(reference, oracle, scheme, geometry):
    scale = max(geometry.omega ** 2, 1e-300)
    difference = np.abs(np.asarray(oracle) - reference)
    relative = difference / np.maximum(np.abs(reference), 1e-2 * scale)
    agreement = float(np.max(relative))
    summary = dict(
        scheme=scheme,
        reference='richardson' if NUMEROV == scheme else 'matrix',
        max_relative_difference=agreement,
        tolerance=ORACLE_TOLERANCE,
        agrees=agreement <= ORACLE_TOLERANCE,
    )
    if not summary['agrees']:
        logger.warning(
            "Matrix and %s shooting eigenvalues differ by %.3g.",
            scheme, agreement)
    return summary


def do_dispersion(config, manifest, path, pool):
    geometry = config.geometry()
    units = config.units()
    grid = config.grid(geometry)
    manifest.data['grid'] = describe_grid(grid)
    states = config['states']

    with manifest.timer('dispersion'):
        table = spectrum.dispersion(
            geometry, grid, config['kx_values'], states, pool)
    manifest.data['monotone'] = table.monotone
    output.write_table(
        path, config['format'],
        ['kx'] + ['e%d' % i for i in range(states)],
        ([kx] + [units.to_dimensional(e) for e in row]
         for kx, row in zip(table.kx, table.energies)))


def do_heun_check(config, manifest, path, pool):
    geometry = config.geometry()
    mode = config.mode(geometry)
    grid = config.grid(geometry)
    manifest.data['grid'] = describe_grid(grid)
    manifest.tolerance('heun_flag_factor', heun.FLAG_FACTOR)
    manifest.tolerance('heun_floor', config['heun_floor'])

    solution = spectrum.solve(geometry, mode, grid)
    energy = float(solution.energies[0])
    report = heun.residual_chain(
        solution.wavefunctions[0], solution.nodes, energy, geometry, mode,
        floor=config['heun_floor'])
    for stage in heun.flagged_stages(report):
        manifest.flag("%s %s inconsistent" % (stage.equation, stage.variant))
    for message in report.discrepancies:
        manifest.flag(message)

    output.write_report(path, dict(energy=energy, report=report))

    if config['zeta_csv']:
        side = output.sidecar(path, '.zeta.csv')
        form = heun.normal_form(
            solution.wavefunctions[0], solution.nodes, energy, geometry,
            mode, report.convention)
        rederived = heun.q_of_zeta_rederived(
            form.zeta_grid, form.ratio, form.e)
        output.write_table(
            side or output.STDOUT, 'csv', ['zeta', 'm', 'q', 'q_rederived'],
            zip(form.zeta_grid, form.m_samples, form.q_samples, rederived))
        manifest.record_file(side)


def do_stability(config, manifest, path, pool):
    scenario = config.scenario()
    grid = config.grid(scenario.geometry)
    manifest.data['grid'] = describe_grid(grid)
    manifest.tolerance('level_safety_factor', stability.SAFETY_FACTOR)

    with manifest.timer('scan'):
        scan = stability.total_energy_scan(
            scenario, config['omega_values'], grid, pool)
    output.write_table(
        path, config['format'], ['omega', 'elastic', 'electronic', 'total'],
        scan.rows)

    table = stability.level_table(scenario, scan.omega_star, grid)
    summary = dict(
        omega_star=scan.omega_star,
        total_star=scan.total_star,
        total_flat=scan.total_flat,
        twist_favoured=scan.twist_favoured,
        filling=dict(
            model='T=0',
            kx_quantization=scenario.kx_quantization,
            spin_degeneracy=scenario.spin_degeneracy,
            electrons=scenario.electron_count,
        ),
        occupied=[
            dict(level._asdict(), occupancy=occupancy)
            for level, occupancy in table.occupied],
    )
    if scenario.units.is_dimensional and scenario.temperature > 0:
        thermal = stability.occupied_fraction_below_thermal(scenario, grid)
        summary['thermal'] = thermal
    side = output.sidecar(path, '.summary.json')
    output.write_report(side or output.STDOUT, summary)
    manifest.record_file(side)


def do_surface(config, manifest, path, pool):
    geometry = config.geometry()
    points = G.sample_surface(geometry, config['nx'], config['nxi'])
    output.write_table(path, config['format'], ['x', 'y', 'z'], points)


SUBCOMMANDS = {
    'potential': do_potential,
    'solve': do_solve,
    'dispersion': do_dispersion,
    'heun-check': do_heun_check,
    'stability': do_stability,
    'surface': do_surface,
}


if '__main__' == __name__:  # pragma: no cover
    logger = logging.getLogger(__package__)
    main()
