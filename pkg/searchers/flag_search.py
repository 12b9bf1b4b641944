"""
Search over flags for the outer infimum of the distance formula: random restarts from Haar
flags (plus the identity and Schur flags) refined by Givens-pair coordinate descent on a
shrinking grid of 2x2 rotations.

Every start is screened on the first coarse grid levels; only the best `polish` starts are
refined down to the finest level.
"""
import itertools
from typing import NamedTuple

import numpy as np

import utils
from linalg.errors import PreconditionError
from linalg.matcore import as_cmatrix, haar_unitary, make_rng, power_residual, schur_form
from nest.flags import Flag, PartialFlag, check_flag_dims
from nest.nestdist import nearest_flag_nilpotent, nearest_partial_flag_nilpotent, rotate, rotated_corner_norms
from searchers.searcher import SearchResult, Searcher, search_logger
from settings.hparam import hparam as hp

# relative to the current max corner
KEY_TOL = 1e-14


class SearchConfig(NamedTuple):
    restarts: int = 32
    sweeps: int = 20
    angle_grid: int = 8
    shrink: float = 0.5
    seed: int = 0
    cert_tol: float = 1e-8
    max_passes: int = 3
    screen_sweeps: int = 3
    polish: int = 4

    @classmethod
    def from_hparam(cls, **overrides):
        """
        Defaults from the `search` hparam case; None-valued overrides are ignored
        """
        values = {field: hp.search[field] for field in cls._fields if field in hp.search}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values).validate()

    def validate(self):
        for field in ('restarts', 'sweeps', 'angle_grid', 'max_passes', 'screen_sweeps'):
            if int(getattr(self, field)) < 1:
                raise PreconditionError('%s must be a positive integer, got %r' % (field, getattr(self, field)))
        if int(self.polish) < 0:
            raise PreconditionError('polish must be a nonnegative integer, got %r' % (self.polish,))
        if not 0.0 < self.shrink < 1.0:
            raise PreconditionError('shrink must lie in (0, 1), got %r' % self.shrink)
        if self.cert_tol <= 0:
            raise PreconditionError('cert_tol must be positive, got %r' % self.cert_tol)
        return self

    @property
    def screen_levels(self):
        return min(int(self.screen_sweeps), int(self.sweeps))


def rotation_grid(angle_grid, scale):
    """
    2x2 unitaries [[cos t, -e^{-ip} sin t], [e^{ip} sin t, cos t]] with t = scale * (pi/2) * j / g,
    j = 1..g, and g phases p on [0, 2 pi); diagonal phases are omitted since they leave the flag fixed
    :return: array (g * g, 2, 2)
    """
    thetas = scale * (np.pi / 2) * np.arange(1, angle_grid + 1) / angle_grid
    phis = 2 * np.pi * np.arange(angle_grid) / angle_grid
    t, p = [x.reshape(-1) for x in np.meshgrid(thetas, phis, indexing='ij')]
    G = np.empty((t.size, 2, 2), dtype=np.complex128)
    G[:, 0, 0] = np.cos(t)
    G[:, 0, 1] = -np.exp(-1j * p) * np.sin(t)
    G[:, 1, 0] = np.exp(1j * p) * np.sin(t)
    G[:, 1, 1] = np.cos(t)
    return G


def leximax_keys(corners):
    """
    Corner vectors sorted in decreasing order; comparing them lexicographically separates ties of the max
    """
    return -np.sort(-corners, axis=-1)


def _lex_less(a, b):
    if a[0] > b[0]:
        return False
    tol = KEY_TOL * b[0]
    for x, y in zip(a, b):
        if x < y - tol:
            return True
        if x > y + tol:
            return False
    return False


def _lex_argmin(keys):
    # np.lexsort sorts by the last key first
    return int(np.lexsort(keys.T[::-1])[0])


def _block_labels(ranks):
    return np.repeat(np.arange(len(ranks) - 1), np.diff(ranks))


def refine_rotated(B, basis, ranks, config, levels=None):
    """
    Coordinate descent on (B = basis* A basis, basis); every accepted move keeps the max corner
    from increasing and strictly lowers the sorted corner vector.
    A rotation of columns i < j moves only the subspaces between their blocks, so only the corners
    labels[i]..labels[j] are recomputed.
    :param levels: grid levels to run (level l uses scale shrink^l), default all config.sweeps levels
    :return: (B, basis, corners, moves) after refinement
    """
    B = np.array(B, dtype=np.complex128)
    basis = np.array(basis, dtype=np.complex128)
    d = B.shape[0]
    labels = _block_labels(ranks)
    pairs = [(i, j) for i, j in itertools.combinations(range(d), 2) if labels[i] != labels[j]]
    corners = rotated_corner_norms(B, ranks)
    key = leximax_keys(corners)
    moves = 0

    for level in (range(config.sweeps) if levels is None else levels):
        G = rotation_grid(config.angle_grid, config.shrink ** level)
        GH = np.conj(np.transpose(G, (0, 2, 1)))
        for _ in range(config.max_passes):
            improved = False
            for i, j in pairs:
                idx = [i, j]
                first, last = labels[i], labels[j] + 1
                Bs = np.repeat(B[None], G.shape[0], axis=0)
                Bs[:, :, idx] = Bs[:, :, idx] @ G
                Bs[:, idx, :] = GH @ Bs[:, idx, :]
                candidates = np.repeat(corners[None], G.shape[0], axis=0)
                candidates[:, first:last] = rotated_corner_norms(Bs, ranks, first, last)
                keys = leximax_keys(candidates)
                best = _lex_argmin(keys)
                if _lex_less(keys[best], key):
                    B = Bs[best]
                    basis[:, idx] = basis[:, idx] @ G[best]
                    corners = candidates[best]
                    key = keys[best]
                    moves += 1
                    improved = True
            if not improved:
                break
    return B, basis, rotated_corner_norms(B, ranks), moves


def _orthonormalize(basis):
    # QR keeps the nested column spans (the flag) while removing drift from unitarity
    Q, R = np.linalg.qr(basis)
    d = np.diag(R)
    phases = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0), 1.0)
    return Q * phases[None, :]


class FlagSearcher(Searcher):
    """
    Restart search over (partial) flags with a fixed rank vector: every start is screened on the
    coarse levels, then the best config.polish starts run the remaining levels
    """

    def __init__(self, matrix, ranks, config, threads=None):
        super().__init__(matrix, config, threads=threads)
        self.ranks = tuple(ranks)
        self.polished = []

    def initial_starts(self):
        d = self.matrix.shape[0]
        U, _ = schur_form(self.matrix)
        starts = [('identity', np.eye(d, dtype=np.complex128)), ('schur', U)]
        for r in range(self.config.restarts):
            starts.append(('haar', haar_unitary(d, make_rng(self.config.seed, r))))
        return starts

    def _refine_levels(self, index, label, basis, levels):
        B = rotate(self.matrix, basis)
        _, basis, _, _ = refine_rotated(B, basis, self.ranks, self.config, levels)
        basis = _orthonormalize(basis)
        value = float(np.max(rotated_corner_norms(rotate(self.matrix, basis), self.ranks)))
        search_logger.debug('start %s #%d (levels %d..%d): value %.17g'
                            % (label, index, levels.start, levels.stop - 1, value))
        return SearchResult(value, basis, index, label)

    def refine(self, index, label, basis):
        return self._refine_levels(index, label, basis, range(self.config.screen_levels))

    def polish(self, results):
        levels = range(self.config.screen_levels, self.config.sweeps)
        if not self.config.polish or not levels:
            return results
        chosen = sorted(results, key=lambda r: (r.value, r.index))[:self.config.polish]
        polished = utils.parallel_map(lambda r: self._refine_levels(r.index, r.label, r.basis, levels),
                                      chosen, self.threads)
        results = list(results)
        for result in polished:
            results[result.index] = result
        self.polished = [result.index for result in polished]
        return results


def refine_flag(A, start, config=None):
    """
    Local search from `start` over all grid levels; the objective never increases
    """
    A = as_cmatrix(A)
    check_flag_dims(A, start)
    config = config or SearchConfig.from_hparam()
    B = rotate(A, start.basis)
    _, basis, _, moves = refine_rotated(B, start.basis, start.ranks, config)
    if moves == 0:
        return start
    basis = _orthonormalize(basis)
    before = float(np.max(rotated_corner_norms(B, start.ranks)))
    after = float(np.max(rotated_corner_norms(rotate(A, basis), start.ranks)))
    if after > before:
        return start
    if isinstance(start, PartialFlag):
        return PartialFlag.from_basis(basis, start.ranks)
    return Flag.from_basis(basis)


def _search(A, ranks, config, threads):
    return FlagSearcher(A, ranks, config, threads=threads).run()


def estimate_nu(A, config=None, threads=None):
    """
    Certified upper bound on the distance from A to the nilpotents
    """
    A = as_cmatrix(A)
    config = config or SearchConfig.from_hparam()
    best = _search(A, tuple(range(A.shape[0] + 1)), config, threads)
    bound = nearest_flag_nilpotent(A, Flag.from_basis(best.basis), config.cert_tol)
    search_logger.info('estimate for dimension %d: %.17g (from %s start #%d)'
                       % (A.shape[0], bound.value, best.label, best.index))
    return bound


def rank_vectors(d, n):
    """
    Strictly increasing rank vectors 0 < r_1 < ... < r_{n-1} < d; refining a nest never raises
    corner norms, so vectors with repeated ranks are never better
    """
    for inner in itertools.combinations(range(1, d), n - 1):
        yield (0,) + inner + (d,)


def _rank_neighbours(ranks):
    d = ranks[-1]
    for k in range(1, len(ranks) - 1):
        for step in (-1, 1):
            moved = list(ranks)
            moved[k] += step
            if 0 < moved[k] < d and moved[k - 1] < moved[k] < moved[k + 1]:
                yield tuple(moved)


def _balanced_ranks(d, n):
    return tuple(int(round(k * d / n)) for k in range(n + 1))


def screen_rank_vectors(A, candidates, config, threads=None):
    """
    Coarse search (screening levels only, no polishing) for each rank vector
    :return: (best ranks, its screened value); ties go to the earlier candidate
    """
    screen_config = config._replace(polish=0)
    best, best_ranks = None, None
    for ranks in candidates:
        result = _search(A, ranks, screen_config, threads)
        search_logger.debug('ranks %s screened at %.17g' % (ranks, result.value))
        if best is None or result.value < best.value:
            best, best_ranks = result, ranks
    return best_ranks, best.value


def estimate_nu_order(A, n, config=None, threads=None):
    """
    Certified upper bound on the distance from A (dimension d) to operators with N^n = 0.
    Rank vectors are compared on the coarse screening levels; only the winner is refined fully.
    """
    A = as_cmatrix(A)
    d = A.shape[0]
    if not 1 <= n <= d:
        raise PreconditionError('order must lie in 1..%d, got %d' % (d, n))
    config = config or SearchConfig.from_hparam()
    if n == d:
        return estimate_nu(A, config, threads)
    if n == 1:
        return nearest_partial_flag_nilpotent(A, PartialFlag.from_basis(np.eye(d), (0, d)), config.cert_tol)

    if d <= hp.search.get('exhaustive_rank_dim', 8):
        best_ranks, _ = screen_rank_vectors(A, list(rank_vectors(d, n)), config, threads)
    else:
        best_ranks, best_value = screen_rank_vectors(A, [_balanced_ranks(d, n)], config, threads)
        while True:
            neighbours = list(_rank_neighbours(best_ranks))
            if not neighbours:
                break
            ranks, value = screen_rank_vectors(A, neighbours, config, threads)
            if value >= best_value:
                break
            best_ranks, best_value = ranks, value

    best = _search(A, best_ranks, config, threads)
    bound = nearest_partial_flag_nilpotent(A, PartialFlag.from_basis(best.basis, best_ranks), config.cert_tol)
    residual = power_residual(bound.certificate, order=n)
    if residual > config.cert_tol:
        search_logger.warning('order-%d certificate has |N^%d| = %.3e above cert_tol' % (n, n, residual))
    search_logger.info('order-%d estimate for dimension %d: %.17g with ranks %s' % (n, d, bound.value, best_ranks))
    return bound
