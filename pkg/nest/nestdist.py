"""
Flag form of the distance to nilpotents: corner norms, per-flag objective, block completion
producing a flag-compatible nilpotent at the objective level, and the Schur bound.
"""
import numpy as np

import utils
from linalg.errors import CompletionError, MatrixInputError
from linalg.matcore import adjoint, as_cmatrix, operator_norm, projection, psd_function, schur_form, strict_upper
from nest.flags import CertifiedUpperBound, Flag, PartialFlag, check_flag_dims, check_ranks
from settings.hparam import hparam as hp

logger = utils.get_logger('nestdist')

# completion runs slightly above the target level so the defect matrices stay definite
LEVEL_SLACK = 1e-12
COMPLETION_TOL = 1e-9


def rotate(A, basis):
    return adjoint(basis) @ A @ basis


def projections(flag):
    """
    Explicit chain P_0 <= ... <= P_n of the flag (P_k projects onto the first ranks[k] basis columns)
    """
    return [projection(flag.basis, r) for r in flag.ranks]


def rotated_corner_norms(B, ranks, first=0, last=None):
    """
    Corner norms of B already written in the flag basis; B may be a stack (..., d, d)
    :param B: rotated matrix or stack of rotated matrices
    :param ranks: r_0 = 0 <= ... <= r_n = d
    :param first: first corner to evaluate (0-based)
    :param last: one past the last corner to evaluate, None for all n
    :return: array (..., last - first); entry k-1-first is the norm of rows r_{k-1}.. and columns ..r_k
    """
    d = B.shape[-1]
    last = len(ranks) - 1 if last is None else last
    out = np.zeros(B.shape[:-2] + (last - first,))
    for k in range(first + 1, last + 1):
        lo, hi = ranks[k - 1], ranks[k]
        if hi == 0 or lo == d:
            continue
        corner = B[..., lo:, :hi]
        if hi == 1 or lo == d - 1:
            # single column or row: spectral and Frobenius norms agree
            out[..., k - 1 - first] = np.linalg.norm(corner, axis=(-2, -1))
        else:
            out[..., k - 1 - first] = np.linalg.norm(corner, 2, axis=(-2, -1))
    return out


def corner_norms(A, flag):
    A = as_cmatrix(A)
    check_flag_dims(A, flag)
    return [float(c) for c in rotated_corner_norms(rotate(A, flag.basis), flag.ranks)]


def flag_objective(A, flag):
    return max(corner_norms(A, flag))


def partial_corner_norms(A, pflag):
    A = as_cmatrix(A)
    check_flag_dims(A, pflag)
    check_ranks(pflag.ranks, pflag.dim)
    return [float(c) for c in rotated_corner_norms(rotate(A, pflag.basis), pflag.ranks)]


def partial_flag_objective(A, pflag):
    return max(partial_corner_norms(A, pflag))


def _as_block(M, name):
    M = np.atleast_2d(np.asarray(M, dtype=np.complex128))
    if M.ndim != 2:
        raise MatrixInputError('%s must be a matrix, got shape %s' % (name, M.shape))
    return M


def parrott_min(A11, A21, A22, gamma=None):
    """
    Fill X in [[A11, X], [A21, A22]] so the whole norm is the larger of the column block
    [A11; A21] and row block [A21, A22] norms (central completion).
    :param gamma: level to complete at, at least the block norms; None for their max
    :return: (X, gamma)
    """
    A11, A21, A22 = _as_block(A11, 'A11'), _as_block(A21, 'A21'), _as_block(A22, 'A22')
    if A11.shape[1] != A21.shape[1] or A21.shape[0] != A22.shape[0]:
        raise MatrixInputError('incompatible block shapes A11 %s, A21 %s, A22 %s'
                               % (A11.shape, A21.shape, A22.shape))
    col_norm = operator_norm(np.vstack([A11, A21]))
    row_norm = operator_norm(np.hstack([A21, A22]))
    lower = max(col_norm, row_norm)
    gamma = lower if gamma is None else max(float(gamma), lower)
    level = gamma + LEVEL_SLACK * (1.0 + gamma)

    floor = np.finfo(float).tiny
    inv_sqrt = lambda w: 1.0 / np.sqrt(np.maximum(w, floor))
    D1_inv = psd_function(level ** 2 * np.eye(A21.shape[1]) - adjoint(A21) @ A21, inv_sqrt)
    D2_inv = psd_function(level ** 2 * np.eye(A21.shape[0]) - A21 @ adjoint(A21), inv_sqrt)
    K = A11 @ D1_inv
    L = D2_inv @ A22
    X = -K @ adjoint(A21) @ L
    return X, gamma


def block_completion(B, sizes, gamma):
    """
    Fill the block strictly upper part of B (blocks given by sizes) one block superdiagonal
    at a time so that the completed matrix has norm at most gamma (plus slack).
    Every staircase block rows[a:], cols[:b] stays within the level once filled.
    :param B: matrix whose block lower part (diagonal blocks included) is kept
    :param sizes: positive block sizes summing to the dimension
    :param gamma: level, at least the max corner norm
    :return: completed matrix
    """
    X = np.array(B, dtype=np.complex128)
    bounds = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    p = len(sizes)
    tol = COMPLETION_TOL * (1.0 + gamma)
    for delta in range(1, p):
        for a in range(p - delta):
            b = a + delta
            r0, r1 = bounds[a], bounds[a + 1]
            c0, c1 = bounds[b], bounds[b + 1]
            A11 = X[r0:r1, :c0]
            A21 = X[r1:, :c0]
            A22 = X[r1:, c0:c1]
            fill, _ = parrott_min(A11, A21, A22, gamma)
            X[r0:r1, c0:c1] = fill
            stair = operator_norm(X[r0:, :c1])
            if stair > gamma + tol:
                raise CompletionError('completed block norm %.17g exceeds level %.17g' % (stair, gamma), (a, b))
    return X


def _block_upper_mask(sizes):
    labels = np.repeat(np.arange(len(sizes)), sizes)
    return labels[:, None] < labels[None, :]


def _certify(A, flag, ranks, value, cert_tol):
    sizes = [b - a for a, b in zip(ranks, ranks[1:]) if b > a]
    B = rotate(A, flag.basis)
    X = block_completion(B, sizes, value)
    N_rot = np.where(_block_upper_mask(sizes), B - X, 0.0)
    N = flag.basis @ N_rot @ adjoint(flag.basis)

    distance = operator_norm(A - N)
    residual = abs(distance - value)
    # N is this close to the exactly nilpotent matrix it represents in the flag basis
    defect = float(np.max(rotated_corner_norms(rotate(N, flag.basis), ranks)))
    scale = 1.0 + operator_norm(A)
    if residual > cert_tol * scale or defect > cert_tol * scale:
        raise CompletionError('certificate outside tolerance (residual %.3e, defect %.3e)' % (residual, defect),
                              'final')
    N.setflags(write=False)
    return CertifiedUpperBound(value, flag, N, residual, defect)


def nearest_flag_nilpotent(A, flag, cert_tol=None):
    """
    Nilpotent strictly upper triangular in the flag basis at distance flag_objective(A, flag)
    """
    A = as_cmatrix(A)
    check_flag_dims(A, flag)
    cert_tol = hp.default.cert_tol if cert_tol is None else cert_tol
    value = flag_objective(A, flag)
    logger.debug('completing flag of dimension %d at level %.17g' % (flag.dim, value))
    return _certify(A, flag, flag.ranks, value, cert_tol)


def nearest_partial_flag_nilpotent(A, pflag, cert_tol=None):
    """
    Order-n nilpotent (block strictly upper in the partial flag) at distance partial_flag_objective
    """
    A = as_cmatrix(A)
    check_flag_dims(A, pflag)
    check_ranks(pflag.ranks, pflag.dim)
    cert_tol = hp.default.cert_tol if cert_tol is None else cert_tol
    value = partial_flag_objective(A, pflag)
    return _certify(A, pflag, pflag.ranks, value, cert_tol)


def schur_flag(A):
    U, _ = schur_form(A)
    return Flag.from_basis(U)


def schur_upper_bound(A, cert_tol=None):
    """
    nu(A) <= rho(A): drop the diagonal of the Schur form
    """
    A = as_cmatrix(A)
    cert_tol = hp.default.cert_tol if cert_tol is None else cert_tol
    U, T = schur_form(A)
    flag = Flag.from_basis(U)
    N = U @ strict_upper(T) @ adjoint(U)
    value = float(np.max(np.abs(np.diag(T))))
    residual = abs(operator_norm(A - N) - value)
    defect = float(np.max(rotated_corner_norms(rotate(N, U), flag.ranks)))
    if max(residual, defect) > cert_tol * (1.0 + operator_norm(A)):
        logger.warning('Schur certificate outside tolerance (residual %.3e, defect %.3e)' % (residual, defect))
    N.setflags(write=False)
    return CertifiedUpperBound(value, flag, N, residual, defect)
