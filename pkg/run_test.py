import contextlib
import io
import json
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from data.matrix_io import read_matrix, write_matrix
from run import EXIT_FALSIFIED, EXIT_OK, EXIT_USAGE, _pop_hparams_case, main
from settings.hparam import hparam as hp
hp.set_hparam_yaml('test')


def run_main(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        status = main(argv)
    return status, out.getvalue(), err.getvalue()


class TestRunner(unittest.TestCase):

    def setUp(self):
        self.tmp_dir = tempfile.TemporaryDirectory()
        self.id4 = os.path.join(self.tmp_dir.name, 'id4.json')
        write_matrix(np.eye(4), self.id4)

    def tearDown(self):
        self.tmp_dir.cleanup()

    def testBound(self):
        status, out, _ = run_main(['bound', '--n', '3', '--m', '1'])
        self.assertEqual(status, EXIT_OK)
        obj = json.loads(out)
        self.assertAlmostEqual(obj['macdonald'], 0.6180339887498949, delta=1e-15)
        self.assertEqual(obj['manifest']['command'], 'bound')

    def testBoundCsv(self):
        status, out, _ = run_main(['bound', '--n', '2', '--format', 'csv'])
        self.assertEqual(status, EXIT_OK)
        lines = out.splitlines()
        self.assertTrue(lines[0].startswith('# '))
        self.assertEqual(json.loads(lines[0][2:])['manifest']['command'], 'bound')
        self.assertEqual(lines[1], 'n,m,macdonald,cramer,theorem1')
        self.assertEqual(len(lines), 3)

    def testChainSolve(self):
        status, out, _ = run_main(['chain', 'solve', '--n', '2'])
        self.assertEqual(status, EXIT_OK)
        obj = json.loads(out)
        self.assertAlmostEqual(obj['value'], 0.7071067811865476, delta=1e-11)
        np.testing.assert_allclose(obj['chain'], [0.0, 0.5, 1.0], atol=1e-9)

    def testEstimateIdentity(self):
        status, out, _ = run_main(['estimate', '--matrix', self.id4, '--restarts', '2', '--sweeps', '3'])
        self.assertEqual(status, EXIT_OK)
        obj = json.loads(out)
        self.assertAlmostEqual(obj['value'], 1.0, delta=1e-9)
        self.assertEqual(obj['manifest']['config']['restarts'], 2)
        self.assertEqual(obj['manifest']['argv'][0], 'estimate')

    def testNearestWritesCertificate(self):
        output = os.path.join(self.tmp_dir.name, 'cert.json')
        status, out, _ = run_main(['nearest', '--matrix', self.id4, '--output', output,
                                   '--restarts', '2', '--sweeps', '3'])
        self.assertEqual(status, EXIT_OK)
        N = read_matrix(output)
        self.assertAlmostEqual(np.linalg.norm(np.eye(4) - N, 2), json.loads(out)['value'], delta=1e-8)

    def testEstimateOrder(self):
        status, out, _ = run_main(['estimate', '--matrix', self.id4, '--order', '1'])
        self.assertEqual(status, EXIT_OK)
        self.assertAlmostEqual(json.loads(out)['value'], 1.0, delta=1e-12)

    def testMissingMatrix(self):
        status, _, err = run_main(['estimate', '--matrix', os.path.join(self.tmp_dir.name, 'missing.json')])
        self.assertEqual(status, EXIT_USAGE)
        self.assertIn('error', err)

    def testBadFormat(self):
        status, _, _ = run_main(['bound', '--n', '3', '--format', 'xml'])
        self.assertEqual(status, EXIT_USAGE)

    def testBadRank(self):
        status, _, _ = run_main(['bound', '--n', '3', '--m', '4'])
        self.assertEqual(status, EXIT_USAGE)

    def testUnknownCommand(self):
        status, _, _ = run_main(['frobnicate'])
        self.assertEqual(status, EXIT_USAGE)

    def testVerifyMacdonaldCsv(self):
        status, out, _ = run_main(['verify', 'macdonald', '--n-max', '2', '--restarts', '2', '--sweeps', '3',
                                   '--format', 'csv'])
        self.assertEqual(status, EXIT_OK)
        lines = out.splitlines()
        record = json.loads(lines[0][2:])
        self.assertEqual(record['manifest']['command'], 'verify macdonald')
        self.assertEqual(record['summary']['falsifications'], 0)
        self.assertEqual(lines[1], 'n,m,lower_bound,upper_estimate,gap,seed,wall_time_ms,label')
        self.assertEqual(len(lines), 4)

    def testVerifyTheorem2(self):
        status, out, _ = run_main(['verify', 'theorem2', '--trials', '3', '--d-max', '3', '--seed', '1',
                                   '--restarts', '2', '--sweeps', '3'])
        self.assertEqual(status, EXIT_OK)
        lines = [json.loads(line) for line in out.splitlines()]
        self.assertEqual(len(lines), 4)
        for row in lines[:3]:
            self.assertLess(row['n'], row['extras']['dim'])
            self.assertGreaterEqual(row['gap'], -1e-9)
        self.assertEqual(lines[-1]['manifest']['config']['d_max'], 3)
        self.assertEqual(lines[-1]['summary']['falsifications'], 0)

    def testInterruptWritesNoReport(self):
        with mock.patch('run.MacdonaldExperiment.trial', side_effect=KeyboardInterrupt):
            status, out, err = run_main(['verify', 'macdonald', '--n-max', '2'])
        self.assertEqual(status, EXIT_USAGE)
        self.assertEqual(out, '')
        self.assertIn('interrupted', err)

    def testExploreCramer(self):
        status, out, _ = run_main(['explore', 'cramer', '--n', '2', '--m', '2', '--restarts', '2',
                                   '--sweeps', '3'])
        self.assertEqual(status, EXIT_OK)
        lines = out.splitlines()
        row = json.loads(lines[0])
        self.assertEqual(row['label'], 'PROVEN')
        self.assertAlmostEqual(row['upper_estimate'], 1.0, delta=1e-9)
        self.assertEqual(json.loads(lines[-1])['summary']['falsifications'], 0)

    def testExitCodes(self):
        self.assertEqual((EXIT_OK, EXIT_USAGE, EXIT_FALSIFIED), (0, 1, 2))

    def testPopHparamsCase(self):
        self.assertEqual(_pop_hparams_case(['--hparams-case', 'search', 'bound', '--n', '3']),
                         ('search', ['bound', '--n', '3']))
        self.assertEqual(_pop_hparams_case(['bound', '--hparams-case=verify']), ('verify', ['bound']))
        self.assertEqual(_pop_hparams_case(['bound']), (None, ['bound']))


if __name__ == '__main__':
    unittest.main()
