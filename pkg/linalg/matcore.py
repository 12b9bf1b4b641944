"""
Dense complex linear algebra on numpy arrays: norms, Hermitian functional calculus,
Schur form, Haar unitaries and nilpotency tests.

Every matrix is a square complex128 numpy array (the CMatrix carrier).
"""
from typing import NamedTuple

import numpy as np
import scipy.linalg

import utils
from linalg.errors import MatrixInputError, NotPsdError, NumericalError, PreconditionError
from settings.hparam import hparam as hp

logger = utils.get_logger('matcore')

SEED_MASK = (1 << 64) - 1


class HermitianCheckTolerance(NamedTuple):
    """
    Absolute tolerances; None means the hparam default relative to the matrix norm
    """
    herm_tol: float = None
    psd_tol: float = None

    def resolve(self, norm):
        herm_tol = self.herm_tol if self.herm_tol is not None else hp.default.herm_tol * max(1.0, norm)
        psd_tol = self.psd_tol if self.psd_tol is not None else hp.default.psd_tol * norm
        if herm_tol < 0 or psd_tol < 0:
            raise PreconditionError('tolerances must be nonnegative (herm_tol %r, psd_tol %r)' % (herm_tol, psd_tol))
        return HermitianCheckTolerance(herm_tol, psd_tol)


def as_cmatrix(A, name='matrix'):
    """
    Validate and convert to a square, finite complex128 array
    :param A: array-like
    :param name: label used in error messages
    :return: np.ndarray of dtype complex128
    """
    try:
        arr = np.array(A, dtype=np.complex128)
    except (TypeError, ValueError) as e:
        raise MatrixInputError('%s is not a numeric array: %s' % (name, e))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise MatrixInputError('%s must be a non-empty square matrix, got shape %s' % (name, arr.shape))
    if not np.all(np.isfinite(arr)):
        raise MatrixInputError('%s has non-finite entries' % name)
    return arr


def adjoint(A):
    return A.conj().T


def hermitian_part(A):
    return (A + adjoint(A)) / 2


def strict_upper(A):
    return np.triu(A, k=1)


def operator_norm(A):
    """
    Largest singular value of a (possibly rectangular) matrix: full SVD up to hp.default.svd_max_dim,
    power iteration on A*A above
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.size == 0:
        return 0.0
    if max(A.shape) <= hp.default.svd_max_dim:
        return float(np.linalg.norm(A, 2))
    return _power_norm(A, hp.default.power_tol, hp.default.power_max_iter)


def _power_norm(A, tol, max_iter):
    x = make_rng(0).standard_normal(A.shape[1]) + 0j
    x /= np.linalg.norm(x)
    sigma = 0.0
    for i in range(max_iter):
        y = A @ x
        z = adjoint(A) @ y
        z_norm = float(np.linalg.norm(z))
        new_sigma = np.sqrt(z_norm)
        if z_norm == 0.0:
            return 0.0
        x = z / z_norm
        if abs(new_sigma - sigma) <= tol * max(new_sigma, 1.0):
            return new_sigma
        sigma = new_sigma
    logger.warning('power iteration stopped at %d iterations (last estimate %.17g)' % (max_iter, sigma))
    return sigma


def psd_function(A, fn, tol=None):
    """
    Apply fn to the eigenvalues of a Hermitian psd matrix, negative eigenvalues clamped to 0
    :param A: Hermitian positive semidefinite matrix (within tol)
    :param fn: vectorized function of the clamped eigenvalues
    :param tol: HermitianCheckTolerance
    :return: V diag(fn(w)) V*
    """
    A = as_cmatrix(A)
    norm = operator_norm(A)
    tol = (tol or HermitianCheckTolerance()).resolve(norm)
    asym = operator_norm(A - adjoint(A))
    if asym > tol.herm_tol:
        raise PreconditionError('matrix is not Hermitian (|A - A*| = %.3e > %.3e)' % (asym, tol.herm_tol))
    w, V = np.linalg.eigh(hermitian_part(A))
    if w[0] < -tol.psd_tol:
        raise NotPsdError(float(w[0]), tol.psd_tol)
    w = np.clip(w, 0.0, None)
    S = (V * fn(w)) @ adjoint(V)
    return hermitian_part(S)


def psd_sqrt(A, tol=None):
    """
    Positive square root of a psd matrix
    """
    return psd_function(A, np.sqrt, tol)


def psd_inv_sqrt(A, floor, tol=None):
    """
    Inverse positive square root; eigenvalues at or below floor raise (rank deficiency)
    """
    A = as_cmatrix(A)
    w = np.linalg.eigvalsh(hermitian_part(A))
    if w[0] <= floor:
        raise np.linalg.LinAlgError('matrix is singular (min eigenvalue %.3e <= %.3e)' % (w[0], floor))
    return psd_function(A, lambda x: 1.0 / np.sqrt(x), tol)


def eigenvalues(A):
    A = as_cmatrix(A)
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as e:
        raise NumericalError('eigenvalue iteration did not converge: %s' % e)


def spectral_radius(A):
    return float(np.max(np.abs(eigenvalues(A))))


def schur_form(A):
    """
    Complex Schur form A = U T U*
    :return: (U, T) with U unitary and T upper triangular
    """
    A = as_cmatrix(A)
    try:
        T, U = scipy.linalg.schur(A, output='complex')
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError('Schur QR iteration did not converge: %s' % e)
    return U, np.triu(T)


def make_rng(seed, *stream):
    """
    Counter-based Philox generator for (seed, *stream); streams are independent of call order
    """
    entropy = [int(seed) & SEED_MASK] + [int(s) & SEED_MASK for s in stream]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(seed)


def haar_unitary(n, seed):
    """
    Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of diag(R) removed
    :param n: dimension
    :param seed: integer seed or np.random.Generator
    """
    if n < 1:
        raise PreconditionError('dimension must be positive, got %d' % n)
    rng = _as_rng(seed)
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    absd = np.abs(d)
    phases = np.where(absd > 0, d / np.where(absd > 0, absd, 1.0), 1.0)
    return Q * phases[None, :]


def random_unit_vector(n, seed):
    return haar_unitary(n, seed)[:, 0].copy()


def rank_one_projection(e):
    e = np.asarray(e, dtype=np.complex128)
    return np.outer(e, e.conj())


def projection(basis, rank):
    """
    Orthogonal projection onto the first `rank` columns of a unitary basis
    """
    V = basis[:, :rank]
    return V @ adjoint(V)


def power_residual(A, order=None):
    """
    Absolute power residual |A^k| with k = order (default: dimension)
    """
    A = as_cmatrix(A)
    k = A.shape[0] if order is None else int(order)
    if k < 1:
        raise PreconditionError('order must be positive, got %d' % k)
    return operator_norm(np.linalg.matrix_power(A, k))


def nilpotency_defect(A, order=None):
    """
    Scale-free power residual |A^k| / |A|^k with k = order (default: dimension); 0 for A = 0.
    At least (rho(A) / |A|)^k, and zero exactly when A^k = 0; eigenvalues of nilpotents are too
    ill-conditioned to test directly.
    """
    A = as_cmatrix(A)
    k = A.shape[0] if order is None else int(order)
    if k < 1:
        raise PreconditionError('order must be positive, got %d' % k)
    norm = operator_norm(A)
    if norm == 0.0:
        return 0.0
    return power_residual(A / norm, k)


def is_nilpotent(A, tol=None, order=None):
    tol = hp.default.nilpotent_tol if tol is None else tol
    return nilpotency_defect(A, order) <= tol
