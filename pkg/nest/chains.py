"""
Chain forms of the distance: scalar chains for rank-one projections, psd chains with
rank-one increments, their conjugated variant, closed-form bound values, and the
constructions turning chains into flags.
"""
import math
from typing import NamedTuple, Tuple

import numpy as np

import utils
from linalg.errors import PreconditionError, SingularChainError
from linalg.matcore import adjoint, as_cmatrix, hermitian_part, operator_norm, psd_inv_sqrt, psd_sqrt
from nest.flags import Flag
from settings.hparam import hparam as hp

logger = utils.get_logger('chains')

CHAIN_TOL = 1e-12


class ScalarChain(NamedTuple):
    """
    0 = c_0 <= c_1 <= ... <= c_n = 1
    """
    c: Tuple[float, ...]

    @classmethod
    def from_values(cls, values, tol=CHAIN_TOL):
        c = tuple(float(v) for v in values)
        if len(c) < 2:
            raise PreconditionError('scalar chain needs at least two entries, got %d' % len(c))
        if abs(c[0]) > tol or abs(c[-1] - 1.0) > tol:
            raise PreconditionError('scalar chain must start at 0 and end at 1, got %r ... %r' % (c[0], c[-1]))
        if any(b < a - tol for a, b in zip(c, c[1:])) or min(c) < -tol or max(c) > 1.0 + tol:
            raise PreconditionError('scalar chain must be nondecreasing in [0, 1], got %s' % (c,))
        return cls(c)

    @property
    def n(self):
        return len(self.c) - 1


class BoundTable(NamedTuple):
    n: int
    m: int
    macdonald: float
    cramer: float
    theorem1: float


class PsdChain(NamedTuple):
    """
    0 = A_0 <= A_1 <= ... <= A_n with rank(A_k - A_{k-1}) <= 1; the top A_n is the chained matrix
    """
    matrices: Tuple[np.ndarray, ...]

    @classmethod
    def from_matrices(cls, matrices, psd_tol=1e-10, rank_tol=1e-8):
        mats = tuple(as_cmatrix(M, 'chain matrix') for M in matrices)
        if len(mats) < 2:
            raise PreconditionError('psd chain needs at least two matrices, got %d' % len(mats))
        scale = max(operator_norm(mats[-1]), np.finfo(float).tiny)
        if operator_norm(mats[0]) > psd_tol * scale:
            raise PreconditionError('psd chain must start at 0')
        for k in range(1, len(mats)):
            w = np.linalg.eigvalsh(hermitian_part(mats[k] - mats[k - 1]))
            if w[0] < -psd_tol * scale:
                raise PreconditionError('chain is not increasing at step %d (min eigenvalue %.3e)' % (k, w[0]))
            if len(w) > 1 and abs(w[-2]) > rank_tol * scale:
                raise PreconditionError('increment %d has rank above one (second eigenvalue %.3e)' % (k, w[-2]))
        for M in mats:
            M.setflags(write=False)
        return cls(mats)

    @property
    def n(self):
        return len(self.matrices) - 1

    @property
    def top(self):
        return self.matrices[-1]

    def increments(self):
        return [self.matrices[k] - self.matrices[k - 1] for k in range(1, len(self.matrices))]


def scalar_chain_value(chain):
    c = chain.c
    return max(math.sqrt(max(c[k], 0.0) * max(1.0 - c[k - 1], 0.0)) for k in range(1, len(c)))


def scalar_chain_feasible(n, v):
    """
    Greedy chain c_k = min(1, v^2 / (1 - c_{k-1})); v is feasible iff c_n reaches 1
    :return: (feasible, values)
    """
    c = [0.0]
    v2 = v * v
    for _ in range(n):
        prev = c[-1]
        if prev >= 1.0:
            c.append(1.0)
        else:
            c.append(min(1.0, v2 / (1.0 - prev)))
    return c[-1] >= 1.0, c


def solve_scalar_chain(n, tol=None):
    """
    Bisection on v over [0, 1] with the greedy feasibility test
    :return: (value, ScalarChain) with the chain achieving at most value
    """
    if n < 1:
        raise PreconditionError('n must be positive, got %d' % n)
    tol = hp.default.chain_tol if tol is None else tol
    if tol <= 0:
        raise PreconditionError('tol must be positive, got %r' % tol)
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if scalar_chain_feasible(n, mid)[0]:
            hi = mid
        else:
            lo = mid
    _, c = scalar_chain_feasible(n, hi)
    c[-1] = 1.0
    return hi, ScalarChain(tuple(c))


def macdonald_value(n):
    if n < 1:
        raise PreconditionError('n must be positive, got %d' % n)
    return 0.5 / math.cos(math.pi / (n + 2))


def _check_m(n, m):
    if not 1 <= m <= n:
        raise PreconditionError('m must lie in 1..%d, got %d' % (n, m))


def cramer_value(n, m):
    _check_m(n, m)
    return 0.5 / math.cos(math.pi / (n / m + 2))


def theorem1_bound(n, m):
    _check_m(n, m)
    return macdonald_value(n - m + 1)


def bound_table(n, m):
    return BoundTable(n, m, macdonald_value(n), cramer_value(n, m), theorem1_bound(n, m))


def _check_top(A, chain):
    A = as_cmatrix(A)
    gap = operator_norm(chain.top - A)
    if gap > 1e-8 * (1.0 + operator_norm(A)):
        raise PreconditionError('chain top differs from the matrix by %.3e' % gap)
    return A


def psd_chain_objective(A, chain):
    """
    max_k |(A - A_{k-1})^{1/2} A_k^{1/2}|
    """
    A = _check_top(A, chain)
    mats = chain.matrices
    return max(operator_norm(psd_sqrt(A - mats[k - 1]) @ psd_sqrt(mats[k]))
               for k in range(1, len(mats)))


def conjugated_chain_objective(A, X, chain):
    """
    max_k |(A - A_{k-1})^{1/2} (X A_k X*)^{1/2}|
    """
    A = _check_top(A, chain)
    X = as_cmatrix(X, 'X')
    mats = chain.matrices
    return max(operator_norm(psd_sqrt(A - mats[k - 1]) @ psd_sqrt(X @ mats[k] @ adjoint(X)))
               for k in range(1, len(mats)))


def scalar_psd_chain(A, chain):
    """
    A_k = c_k A, the only chains of a rank-one psd matrix
    """
    A = as_cmatrix(A)
    return PsdChain.from_matrices([c * A for c in chain.c])


def flag_to_chain(A, flag):
    """
    A_k = A^{1/2} P_k A^{1/2} for psd A
    """
    A = as_cmatrix(A)
    S = psd_sqrt(A)
    V = S @ flag.basis
    return PsdChain.from_matrices([V[:, :k] @ adjoint(V[:, :k]) for k in range(flag.dim + 1)])


def _rank_one_factor(C, k, scale, rank_tol):
    w, V = np.linalg.eigh(hermitian_part(C))
    if len(w) > 1 and abs(w[-2]) > rank_tol * scale:
        raise PreconditionError('increment %d has rank above one (second eigenvalue %.3e)' % (k, w[-2]))
    if w[-1] <= rank_tol * scale:
        raise PreconditionError('increment %d is zero; every increment must have rank exactly one' % k)
    return math.sqrt(w[-1]) * V[:, -1]


def chain_to_flag(chain, rank_tol=None, full_rank_tol=None):
    """
    P_k = B^{-1/2} B_k B^{-1/2} for a chain with rank-one increments and invertible top B
    """
    rank_tol = hp.default.rank_one_tol if rank_tol is None else rank_tol
    full_rank_tol = hp.default.full_rank_tol if full_rank_tol is None else full_rank_tol
    B = chain.top
    scale = operator_norm(B)
    w_min = float(np.linalg.eigvalsh(hermitian_part(B))[0])
    if w_min < full_rank_tol * scale:
        raise SingularChainError('chain top is rank deficient (min eigenvalue %.3e); '
                                 'apply perturb_chain first' % w_min)
    factors = [_rank_one_factor(C, k + 1, scale, rank_tol) for k, C in enumerate(chain.increments())]
    F = psd_inv_sqrt(B, 0.0) @ np.column_stack(factors)
    # QR keeps the nested column spans, i.e. the flag, and removes rounding from orthonormality
    Q, R = np.linalg.qr(F)
    d = np.diag(R)
    phases = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0), 1.0)
    return Flag.from_basis(Q * phases[None, :])


def perturb_chain(chain, eps=None):
    """
    Nearby chain with exact rank-one increments and full-rank top: keep the top rank-one part
    x_k x_k* of each increment, then lift the singular values of X = [x_1 .. x_n] below sqrt(eps)
    so that X X* gains eps only on the eigendirections where it sits below eps.
    The top moves by at most eps and its smallest eigenvalue is at least eps.
    """
    B = chain.top
    scale = operator_norm(B)
    eps = hp.default.perturb_eps * max(scale, np.finfo(float).tiny) if eps is None else eps
    cols = []
    for C in chain.increments():
        w, V = np.linalg.eigh(hermitian_part(C))
        cols.append(math.sqrt(max(w[-1], 0.0)) * V[:, -1])
    X = np.column_stack(cols)
    U, s, Vh = np.linalg.svd(X)
    k = len(s)
    small = s ** 2 < eps
    s = np.where(small, np.sqrt(s ** 2 + eps), s)
    X = (U[:, :k] * s[None, :]) @ Vh[:k, :]
    mats = [np.zeros_like(B)]
    for j in range(X.shape[1]):
        mats.append(mats[-1] + np.outer(X[:, j], X[:, j].conj()))
    logger.debug('perturbed chain of length %d with eps %.3e, %d directions filled'
                 % (chain.n, eps, int(small.sum())))
    return PsdChain.from_matrices(mats)


def optimal_rank_one_flag(n, e, tol=None):
    """
    Flag attaining the MacDonald value for Q = e e*: basis W* where W e = s and
    s_j = sqrt(c_j - c_{j-1}) from the optimal scalar chain.
    """
    e = np.asarray(e, dtype=np.complex128).reshape(-1)
    if e.shape[0] != n:
        raise PreconditionError('vector has length %d, expected %d' % (e.shape[0], n))
    if abs(np.linalg.norm(e) - 1.0) > 1e-12:
        raise PreconditionError('vector is not a unit vector (norm %.17g)' % np.linalg.norm(e))
    _, chain = solve_scalar_chain(n, tol)
    s = np.sqrt(np.clip(np.diff(np.array(chain.c)), 0.0, None)).astype(np.complex128)
    s /= np.linalg.norm(s)

    t = np.vdot(e, s)
    alpha = t / abs(t) if abs(t) > 0 else 1.0
    v = alpha * e - s
    H = np.eye(n, dtype=np.complex128)
    vv = np.vdot(v, v).real
    if vv > 1e-30:
        H -= 2.0 * np.outer(v, v.conj()) / vv
    W = alpha * H
    return Flag.from_basis(adjoint(W))
