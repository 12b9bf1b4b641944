import json
import os
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_array_equal

from data.matrix_io import SchemaError, bound_to_json, flag_to_json, matrix_from_json, matrix_to_json, \
    read_matrix, write_matrix
from linalg.matcore import haar_unitary, make_rng
from nest.flags import PartialFlag, standard_flag
from nest.nestdist import nearest_flag_nilpotent
from settings.hparam import hparam as hp
hp.set_hparam_yaml('test')


class TestMatrixJson(unittest.TestCase):

    def setUp(self):
        self.tmp_dir = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp_dir.name, 'matrix.json')

    def tearDown(self):
        self.tmp_dir.cleanup()

    def testScalar(self):
        A = matrix_from_json({'n': 1, 'rows': [[[2, 0]]]})
        assert_array_equal(A, [[2.0 + 0j]])

    def testNonSquare(self):
        with self.assertRaises(SchemaError) as ctx:
            matrix_from_json({'n': 2, 'rows': [[[1, 0], [0, 0]], [[0, 0]]]})
        self.assertEqual(ctx.exception.location, 'row 1')

    def testBadEntry(self):
        with self.assertRaises(SchemaError) as ctx:
            matrix_from_json({'n': 1, 'rows': [[[True, 0]]]})
        self.assertEqual(ctx.exception.location, 'row 0, column 0')
        with self.assertRaises(SchemaError):
            matrix_from_json({'n': 1, 'rows': [[[1.0]]]})

    def testMissingKeys(self):
        with self.assertRaises(SchemaError):
            matrix_from_json({'rows': []})
        with self.assertRaises(SchemaError):
            matrix_from_json({'n': 0, 'rows': []})

    def testWriteReadIsBitIdentical(self):
        rng = make_rng(0)
        A = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        write_matrix(A, self.path)
        assert_array_equal(read_matrix(self.path), A)

    def testInvalidJson(self):
        with open(self.path, 'w') as f:
            f.write('{"n": 1,')
        with self.assertRaises(SchemaError):
            read_matrix(self.path)

    def testMissingFile(self):
        with self.assertRaises(OSError):
            read_matrix(os.path.join(self.tmp_dir.name, 'missing.json'))


class TestBoundJson(unittest.TestCase):

    def testBound(self):
        A = np.array([[1.0, 2.0], [0.5, -1.0]])
        bound = nearest_flag_nilpotent(A, standard_flag(2))
        obj = json.loads(json.dumps(bound_to_json(bound)))
        self.assertEqual(obj['value'], bound.value)
        assert_array_equal(matrix_from_json(obj['certificate']), bound.certificate)
        self.assertNotIn('ranks', obj['flag'])

    def testPartialFlag(self):
        obj = flag_to_json(PartialFlag.from_basis(haar_unitary(3, 1), (0, 1, 3)))
        self.assertEqual(obj['ranks'], [0, 1, 3])
        self.assertEqual(obj['n'], 3)

    def testMatrixToJson(self):
        obj = matrix_to_json(np.array([[1 + 2j]]))
        self.assertEqual(obj, {'n': 1, 'rows': [[[1.0, 2.0]]]})


if __name__ == '__main__':
    unittest.main()
