from typing import NamedTuple, Tuple, Union

import numpy as np

from linalg.errors import MatrixInputError, PreconditionError
from linalg.matcore import adjoint, as_cmatrix, operator_norm

UNITARY_TOL = 1e-10


def _check_unitary(basis, tol):
    defect = operator_norm(adjoint(basis) @ basis - np.eye(basis.shape[0]))
    if defect > tol:
        raise PreconditionError('flag basis is not unitary (|U*U - I| = %.3e)' % defect)


class Flag(NamedTuple):
    """
    Complete flag: P_k projects onto the first k columns of a unitary basis
    """
    basis: np.ndarray

    @classmethod
    def from_basis(cls, basis, tol=UNITARY_TOL):
        basis = as_cmatrix(basis, 'flag basis')
        _check_unitary(basis, tol)
        basis.setflags(write=False)
        return cls(basis)

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def ranks(self):
        return tuple(range(self.dim + 1))


class PartialFlag(NamedTuple):
    """
    Chain 0 = P_0 <= ... <= P_n = I with rank P_k = ranks[k], projections onto leading basis columns
    """
    basis: np.ndarray
    ranks: Tuple[int, ...]

    @classmethod
    def from_basis(cls, basis, ranks, tol=UNITARY_TOL):
        basis = as_cmatrix(basis, 'flag basis')
        _check_unitary(basis, tol)
        ranks = tuple(int(r) for r in ranks)
        check_ranks(ranks, basis.shape[0])
        basis.setflags(write=False)
        return cls(basis, ranks)

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def length(self):
        return len(self.ranks) - 1


AnyFlag = Union[Flag, PartialFlag]


def check_ranks(ranks, dim):
    if len(ranks) < 2:
        raise PreconditionError('rank vector needs at least two entries, got %s' % (ranks,))
    if ranks[0] != 0 or ranks[-1] != dim:
        raise PreconditionError('rank vector must run from 0 to %d, got %s' % (dim, ranks))
    if any(b < a for a, b in zip(ranks, ranks[1:])):
        raise PreconditionError('rank vector must be nondecreasing, got %s' % (ranks,))


def standard_flag(n):
    return Flag.from_basis(np.eye(n, dtype=np.complex128))


def check_flag_dims(A, flag):
    if A.shape[0] != flag.dim:
        raise MatrixInputError('matrix dimension %d does not match flag dimension %d' % (A.shape[0], flag.dim))


class CertifiedUpperBound(NamedTuple):
    """
    value bounds nu(A) (or nu_n(A)) from above; certificate N is within nilpotency_defect of an
    exactly nilpotent matrix in the flag, and residual = | |A - N| - value |
    """
    value: float
    flag: AnyFlag
    certificate: np.ndarray
    residual: float
    nilpotency_defect: float
