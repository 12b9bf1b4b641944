import json
import sys

import fire
from numpy.linalg import LinAlgError

import utils
from data.matrix_io import SchemaError, bound_to_json, read_matrix, write_matrix
from data.reports import manifest_to_json, start_manifest, write_csv, write_rows
from experiments.experiment import FalsificationError
from experiments.harness import CramerExploration, MacdonaldExperiment, Theorem1Harness, Theorem2Harness
from linalg.errors import CompletionError, MatrixInputError, PreconditionError
from nest.chains import bound_table, solve_scalar_chain
from searchers.flag_search import SearchConfig, estimate_nu, estimate_nu_order
from settings.hparam import hparam as hp

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FALSIFIED = 2

logger = utils.get_logger('cli')


def _emit(obj):
    sys.stdout.write(json.dumps(obj) + '\n')
    sys.stdout.flush()


def _config(restarts=None, sweeps=None, seed=None, angle_grid=None, shrink=None, cert_tol=None):
    return SearchConfig.from_hparam(restarts=restarts, sweeps=sweeps, seed=seed, angle_grid=angle_grid,
                                    shrink=shrink, cert_tol=cert_tol)


class Context:
    """
    Shared state of one invocation: argv for the manifest
    """
    def __init__(self, argv):
        self.argv = list(argv)

    def manifest(self, command, seed, config):
        return start_manifest(command, self.argv, seed, config)


def _check_format(output_format):
    if output_format not in ('json', 'csv'):
        raise PreconditionError('unknown format %r (use json or csv)' % (output_format,))
    return output_format


def _finish_experiment(experiment, manifest, output_format, witness_path, summary=None):
    summary = dict(summary or {})
    summary.update({'min_gap': experiment.min_gap, 'falsifications': len(experiment.falsifications)})
    write_rows(experiment.rows, sys.stdout, output_format, manifest.finish(), summary)
    if experiment.falsifications:
        witnesses = [{'row': row._asdict(), 'witness': witness} for row, witness in experiment.falsifications]
        with open(witness_path, 'w') as f:
            json.dump({'manifest': manifest_to_json(manifest.finish()), 'falsifications': witnesses}, f)
        raise FalsificationError('%d falsification events, witnesses written to %s'
                                 % (len(witnesses), witness_path), witnesses)


class ChainCommands:
    """
    Scalar chain problem for rank-one projections
    """
    def __init__(self, context):
        self._context = context

    def solve(self, n, tol=None):
        """
        Solve the scalar chain problem by bisection
        :param n: chain length (matrix dimension)
        :param tol: bisection tolerance (default from hparams)
        """
        manifest = self._context.manifest('chain solve', 0, {'n': n, 'tol': tol})
        value, chain = solve_scalar_chain(int(n), tol)
        _emit({'n': int(n), 'value': value, 'chain': list(chain.c),
               'manifest': manifest_to_json(manifest.finish())})


class VerifyCommands:
    """
    Verification harnesses; exit status 2 on falsification
    """
    def __init__(self, context):
        self._context = context

    def macdonald(self, n_max=None, restarts=None, sweeps=None, seed=None, format=None,
                  witness='falsification.json'):
        """
        Rank-one projections for n = 1..n_max against 1/2 sec(pi/(n+2))
        """
        n_max = int(hp.verify.n_max if n_max is None else n_max)
        config = _config(restarts, sweeps, seed)
        output_format = _check_format(format or hp.output_format)
        manifest = self._context.manifest('verify macdonald', config.seed, config._asdict())
        experiment = MacdonaldExperiment(config, seed=config.seed)
        experiment.run(n_max)
        _finish_experiment(experiment, manifest, output_format, witness)

    def theorem1(self, trials=None, n_max=None, seed=None, restarts=None, sweeps=None, format=None,
                 witness='falsification.json'):
        """
        Random hypothesis instances against the refined lower bound 1/2 sec(pi/(n-m+3))
        """
        trials = int(hp.verify.trials if trials is None else trials)
        n_max = int(hp.verify.n_max if n_max is None else n_max)
        seed = int(hp.verify.seed if seed is None else seed)
        config = _config(restarts, sweeps)
        output_format = _check_format(format or hp.output_format)
        manifest = self._context.manifest('verify theorem1', seed, dict(config._asdict(), trials=trials, n_max=n_max))
        harness = Theorem1Harness(config, n_max, seed=seed)
        harness.run(trials)
        _finish_experiment(harness, manifest, output_format, witness)

    def theorem2(self, trials=None, d_max=None, seed=None, restarts=None, sweeps=None, format=None,
                 witness='falsification.json'):
        """
        Random hypothesis instances of dimension d against order-n nilpotents, n < d, and 1/2 sec(pi/(n+2))
        """
        trials = int(hp.verify.trials if trials is None else trials)
        d_max = int(hp.verify.n_max if d_max is None else d_max)
        seed = int(hp.verify.seed if seed is None else seed)
        config = _config(restarts, sweeps)
        output_format = _check_format(format or hp.output_format)
        manifest = self._context.manifest('verify theorem2', seed, dict(config._asdict(), trials=trials, d_max=d_max))
        harness = Theorem2Harness(config, d_max, seed=seed)
        harness.run(trials)
        _finish_experiment(harness, manifest, output_format, witness)


class ExploreCommands:
    """
    Exploration of conjectured closed forms
    """
    def __init__(self, context):
        self._context = context

    def cramer(self, n, m, seed=None, restarts=None, sweeps=None, format=None, witness='falsification.json'):
        """
        Rank-m projection against 1/2 sec(pi/(n/m+2)); only proven cases are checked
        """
        seed = int(hp.explore.seed if seed is None else seed)
        config = _config(restarts, sweeps, seed)
        output_format = _check_format(format or hp.output_format)
        manifest = self._context.manifest('explore cramer', seed, dict(config._asdict(), n=n, m=m))
        experiment = CramerExploration(config, int(n), int(m), seed=seed)
        experiment.run(1)
        _finish_experiment(experiment, manifest, output_format, witness)


class Runner:
    """
    Certified upper bounds on the distance from a matrix to the nilpotents
    """

    def __init__(self, argv=()):
        self._context = Context(argv)
        self.chain = ChainCommands(self._context)
        self.verify = VerifyCommands(self._context)
        self.explore = ExploreCommands(self._context)

    def _estimate(self, command, matrix, restarts, sweeps, seed, order, angle_grid, shrink, cert_tol):
        A = read_matrix(matrix)
        config = _config(restarts, sweeps, seed, angle_grid, shrink, cert_tol)
        manifest = self._context.manifest(command, config.seed, dict(config._asdict(), order=order))
        if order is None:
            bound = estimate_nu(A, config)
        else:
            bound = estimate_nu_order(A, int(order), config)
        return bound, manifest

    def estimate(self, matrix, restarts=None, sweeps=None, seed=None, order=None, angle_grid=None, shrink=None,
                 cert_tol=None):
        """
        Certified upper bound on nu(A) (or nu_n(A) with --order)
        :param matrix: matrix JSON file
        """
        bound, manifest = self._estimate('estimate', matrix, restarts, sweeps, seed, order, angle_grid, shrink,
                                         cert_tol)
        _emit(dict(bound_to_json(bound), manifest=manifest_to_json(manifest.finish())))

    def nearest(self, matrix, output='certificate.json', restarts=None, sweeps=None, seed=None, order=None,
                angle_grid=None, shrink=None, cert_tol=None):
        """
        As estimate, and write the certificate nilpotent as matrix JSON
        :param output: path of the certificate matrix file
        """
        bound, manifest = self._estimate('nearest', matrix, restarts, sweeps, seed, order, angle_grid, shrink,
                                         cert_tol)
        write_matrix(bound.certificate, output)
        logger.info('certificate written to %s' % output)
        _emit(dict(bound_to_json(bound), manifest=manifest_to_json(manifest.finish())))

    def bound(self, n, m=1, format=None):
        """
        Closed-form values: MacDonald, Cramer (conjectured) and the refined lower bound
        """
        row = bound_table(int(n), int(m))
        output_format = _check_format(format or hp.output_format)
        manifest = self._context.manifest('bound', 0, {'n': n, 'm': m})
        if output_format == 'csv':
            write_csv([row], sys.stdout, manifest.finish(), columns=row._fields)
        else:
            _emit(dict(row._asdict(), manifest=manifest_to_json(manifest.finish())))


def _pop_hparams_case(argv):
    """
    Strip --hparams-case CASE (or --hparams-case=CASE) from argv
    :return: (case or None, remaining argv)
    """
    case, rest, i = None, [], 0
    while i < len(argv):
        arg = argv[i]
        if arg.startswith('--hparams-case='):
            case = arg.split('=', 1)[1]
        elif arg in ('--hparams-case', '--hparams_case'):
            if i + 1 >= len(argv):
                raise PreconditionError('--hparams-case needs a value')
            case = argv[i + 1]
            i += 1
        else:
            rest.append(arg)
        i += 1
    return case, rest


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        case, command = _pop_hparams_case(argv)
        if case:
            hp.set_hparam_yaml(case)
        fire.Fire(Runner(argv), command=command, name='nildist')
    except fire.core.FireExit as e:
        return EXIT_OK if not e.code else EXIT_USAGE
    except FalsificationError as e:
        logger.error(str(e))
        return EXIT_FALSIFIED
    except KeyboardInterrupt:
        sys.stderr.write('error: interrupted, no report written\n')
        return EXIT_USAGE
    except (MatrixInputError, PreconditionError, SchemaError, OSError, ValueError, LinAlgError, CompletionError) as e:
        sys.stderr.write('error: %s\n' % e)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
