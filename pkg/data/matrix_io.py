"""
Matrix JSON format {"n": int, "rows": [[[re, im], ...], ...]} and the encodings built on it
(flags, partial flags, certified bounds). Floats are written with repr, which round-trips
every double exactly.
"""
import json
import math

import numpy as np

from nest.flags import PartialFlag


class SchemaError(ValueError):
    """
    Matrix JSON does not follow the schema; location names the offending row/column
    """
    def __init__(self, message, location=None):
        if location is not None:
            message = '%s (at %s)' % (message, location)
        super().__init__(message)
        self.location = location


def _number(value, location):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError('entry part is not a number: %r' % (value,), location)
    value = float(value)
    if not math.isfinite(value):
        raise SchemaError('entry part is not finite: %r' % value, location)
    return value


def matrix_from_json(obj):
    if not isinstance(obj, dict) or 'n' not in obj or 'rows' not in obj:
        raise SchemaError('matrix object needs keys "n" and "rows"')
    n = obj['n']
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise SchemaError('"n" must be a positive integer, got %r' % (n,))
    rows = obj['rows']
    if not isinstance(rows, list) or len(rows) != n:
        raise SchemaError('"rows" must hold %d rows' % n)
    A = np.zeros((n, n), dtype=np.complex128)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise SchemaError('row must hold %d entries, matrix is not square' % n, 'row %d' % i)
        for j, entry in enumerate(row):
            location = 'row %d, column %d' % (i, j)
            if not isinstance(entry, list) or len(entry) != 2:
                raise SchemaError('entry must be a [re, im] pair', location)
            A[i, j] = complex(_number(entry[0], location), _number(entry[1], location))
    return A


def matrix_to_json(A):
    A = np.asarray(A, dtype=np.complex128)
    return {
        'n': int(A.shape[0]),
        'rows': [[[float(z.real), float(z.imag)] for z in row] for row in A],
    }


def read_matrix(path):
    """
    :param path: JSON file in the matrix format
    :return: complex128 array
    """
    with open(path, 'r') as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError('invalid JSON: %s' % e)
    return matrix_from_json(obj)


def write_matrix(A, path):
    with open(path, 'w') as f:
        json.dump(matrix_to_json(A), f)
        f.write('\n')


def flag_to_json(flag):
    obj = matrix_to_json(flag.basis)
    if isinstance(flag, PartialFlag):
        obj['ranks'] = list(flag.ranks)
    return obj


def bound_to_json(bound):
    return {
        'value': bound.value,
        'residual': bound.residual,
        'nilpotency_defect': bound.nilpotency_defect,
        'flag': flag_to_json(bound.flag),
        'certificate': matrix_to_json(bound.certificate),
    }
