"""
Hypothesis check for the lower bound (P M P = M and M* M >= P) and generators of matrices
satisfying it: Haar-conjugated blocks blockdiag(M0, 0) with M0* M0 >= I, normal matrices with
spectrum in {0} and |z| >= 1, and rank-m projections.
"""
from typing import NamedTuple

import numpy as np

from linalg.errors import PreconditionError
from linalg.matcore import adjoint, as_cmatrix, haar_unitary, hermitian_part, make_rng, operator_norm


class HypothesisReport(NamedTuple):
    pmp_residual: float
    min_eig: float
    rank_p: int
    satisfied: bool


def check_theorem1_hypothesis(M, P, tol=1e-9):
    """
    :param M: candidate matrix
    :param P: nonzero projection (within tol)
    :return: HypothesisReport; satisfied iff |PMP - M| <= tol and min eig(M*M - P) >= -tol
    """
    M = as_cmatrix(M, 'M')
    P = as_cmatrix(P, 'P')
    if M.shape != P.shape:
        raise PreconditionError('M and P differ in shape: %s vs %s' % (M.shape, P.shape))
    idem = operator_norm(P @ P - P)
    herm = operator_norm(P - adjoint(P))
    if idem > tol or herm > tol:
        raise PreconditionError('P is not a projection (|P^2 - P| = %.3e, |P - P*| = %.3e)' % (idem, herm))
    if operator_norm(P) <= tol:
        raise PreconditionError('P must be a nonzero projection')
    pmp_residual = operator_norm(P @ M @ P - M)
    min_eig = float(np.linalg.eigvalsh(hermitian_part(adjoint(M) @ M - P))[0])
    rank_p = int(round(float(np.trace(P).real)))
    satisfied = pmp_residual <= tol and min_eig >= -tol
    return HypothesisReport(pmp_residual, min_eig, rank_p, satisfied)


def _check_m(n, m):
    if not 1 <= m <= n:
        raise PreconditionError('m must lie in 1..%d, got %d' % (n, m))


def _leading_projection(W, m):
    V = W[:, :m]
    return hermitian_part(V @ adjoint(V))


def random_theorem1_instance(n, m, seed, boundary=False):
    """
    M = W blockdiag(M0, 0) W*, M0 = U diag(sigma) V* with sigma_i = 1 + |z_i| (all 1 on the boundary)
    :return: (M, P) with P = W blockdiag(I_m, 0) W*
    """
    _check_m(n, m)
    rng = make_rng(seed)
    W = haar_unitary(n, rng)
    U = haar_unitary(m, rng)
    V = haar_unitary(m, rng)
    sigma = np.ones(m) if boundary else 1.0 + np.abs(rng.standard_normal(m))
    block = np.zeros((n, n), dtype=np.complex128)
    block[:m, :m] = (U * sigma[None, :]) @ adjoint(V)
    return W @ block @ adjoint(W), _leading_projection(W, m)


def normal_instance(n, zeros, seed, unimodular=False, return_support=False):
    """
    Haar-conjugated diagonal with `zeros` zero eigenvalues and the rest of modulus in [1, 3]
    (exactly 1 when unimodular)
    """
    if not 0 <= zeros < n:
        raise PreconditionError('zeros must lie in 0..%d, got %d' % (n - 1, zeros))
    rng = make_rng(seed)
    W = haar_unitary(n, rng)
    k = n - zeros
    moduli = np.ones(k) if unimodular else rng.uniform(1.0, 3.0, k)
    phases = np.exp(2j * np.pi * rng.uniform(0.0, 1.0, k))
    spectrum = np.concatenate([moduli * phases, np.zeros(zeros)])
    M = (W * spectrum[None, :]) @ adjoint(W)
    if return_support:
        return M, _leading_projection(W, k)
    return M


def projection_instance(n, m, seed):
    """
    Haar-conjugated projection of rank m
    """
    _check_m(n, m)
    return _leading_projection(haar_unitary(n, make_rng(seed)), m)
