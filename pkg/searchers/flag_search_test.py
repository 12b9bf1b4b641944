import unittest
from unittest import mock

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from linalg.errors import PreconditionError
from linalg.matcore import haar_unitary, make_rng, rank_one_projection, random_unit_vector, \
    spectral_radius
from nest.chains import macdonald_value
from nest.flags import Flag, PartialFlag, standard_flag
from nest.nestdist import flag_objective, partial_flag_objective, rotate, rotated_corner_norms
from searchers.flag_search import FlagSearcher, SearchConfig, _block_labels, estimate_nu, estimate_nu_order, \
    leximax_keys, rank_vectors, refine_flag, rotation_grid, screen_rank_vectors
from searchers.searcher import SearchResult, Searcher
from settings.hparam import hparam as hp
hp.set_hparam_yaml('test')


def random_matrix(n, rng):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


class TestSearchConfig(unittest.TestCase):

    def testFromHparam(self):
        config = SearchConfig.from_hparam(restarts=3, seed=None)
        self.assertEqual(config.restarts, 3)
        self.assertEqual(config.seed, hp.search.seed)
        self.assertEqual(config.sweeps, hp.search.sweeps)
        self.assertEqual(config.polish, hp.search.polish)
        self.assertLessEqual(config.screen_levels, config.sweeps)

    def testValidate(self):
        with self.assertRaises(PreconditionError):
            SearchConfig(shrink=1.0).validate()
        with self.assertRaises(PreconditionError):
            SearchConfig(restarts=0).validate()
        with self.assertRaises(PreconditionError):
            SearchConfig(cert_tol=0.0).validate()
        with self.assertRaises(PreconditionError):
            SearchConfig(polish=-1).validate()
        self.assertEqual(SearchConfig(polish=0).validate().polish, 0)


class TestPrimitives(unittest.TestCase):

    def testRotationGrid(self):
        G = rotation_grid(8, 1.0)
        self.assertEqual(G.shape, (64, 2, 2))
        eye = np.broadcast_to(np.eye(2), G.shape)
        assert_allclose(np.conj(np.transpose(G, (0, 2, 1))) @ G, eye, atol=1e-14)

    def testLeximaxKeys(self):
        assert_array_equal(leximax_keys(np.array([0.2, 0.7, 0.5])), [0.7, 0.5, 0.2])

    def testRankVectors(self):
        self.assertEqual(list(rank_vectors(4, 2)), [(0, 1, 4), (0, 2, 4), (0, 3, 4)])
        self.assertEqual(list(rank_vectors(3, 3)), [(0, 1, 2, 3)])

    def testSelectBreaksTiesByIndex(self):
        results = [SearchResult(0.5, None, 0, 'a'), SearchResult(0.4, None, 1, 'b'),
                   SearchResult(0.4, None, 2, 'c')]
        self.assertEqual(Searcher.select(results).index, 1)

    def testRotationMovesOnlyCornersBetweenItsBlocks(self):
        rng = make_rng(33)
        B = random_matrix(6, rng)
        G = rotation_grid(4, 1.0)[5]
        for ranks in ((0, 1, 2, 3, 4, 5, 6), (0, 2, 3, 6)):
            labels = _block_labels(ranks)
            for i, j in ((0, 5), (1, 4), (2, 3)):
                if labels[i] == labels[j]:
                    continue
                R = np.eye(6, dtype=np.complex128)
                R[np.ix_([i, j], [i, j])] = G
                before = rotated_corner_norms(B, ranks)
                after = rotated_corner_norms(rotate(B, R), ranks)
                outside = [c for c in range(len(ranks) - 1) if not labels[i] <= c <= labels[j]]
                assert_allclose(after[outside], before[outside], atol=1e-12)
                assert_allclose(rotated_corner_norms(rotate(B, R), ranks, labels[i], labels[j] + 1),
                                after[labels[i]:labels[j] + 1], atol=1e-14)


class TestRefineFlag(unittest.TestCase):

    def setUp(self):
        self.config = SearchConfig(**hp.test)
        self.Q = np.diag([1.0, 0.0])

    def testRotatesToHalfAngle(self):
        flag = refine_flag(self.Q, standard_flag(2), self.config._replace(sweeps=3))
        self.assertAlmostEqual(flag_objective(self.Q, flag), np.sqrt(2) / 2, delta=1e-6)

    def testLocalMinimumReturnsStart(self):
        start = Flag.from_basis(np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2))
        self.assertIs(refine_flag(self.Q, start, self.config), start)

    def testNeverWorsens(self):
        rng = make_rng(30)
        for n in range(2, 5):
            A = random_matrix(n, rng)
            start = Flag.from_basis(haar_unitary(n, rng))
            refined = refine_flag(A, start, self.config._replace(sweeps=4))
            self.assertLessEqual(flag_objective(A, refined), flag_objective(A, start) + 1e-12)

    def testPartialFlag(self):
        A = random_matrix(4, make_rng(31))
        start = PartialFlag.from_basis(haar_unitary(4, 32), (0, 2, 4))
        refined = refine_flag(A, start, self.config._replace(sweeps=4))
        self.assertEqual(refined.ranks, (0, 2, 4))
        self.assertLessEqual(partial_flag_objective(A, refined), partial_flag_objective(A, start) + 1e-12)

    def testRefinementIsScaleFree(self):
        A = np.diag([1.0, 0.0, 0.0])
        reference = flag_objective(A, refine_flag(A, standard_flag(3), self.config))
        for s in (2.0 ** -30, 2.0 ** -40, 2.0 ** 20):
            refined = refine_flag(s * A, standard_flag(3), self.config)
            self.assertAlmostEqual(flag_objective(s * A, refined) / s, reference, delta=1e-12)
        self.assertLess(reference, macdonald_value(3) + 1e-3)


class TestEstimateNu(unittest.TestCase):

    def setUp(self):
        self.config = SearchConfig(**hp.test)

    def testNilpotent(self):
        A = np.triu(random_matrix(4, make_rng(40)), 1)
        bound = estimate_nu(A, self.config)
        self.assertLessEqual(bound.value, 1e-8)
        self.assertLessEqual(np.linalg.norm(A - bound.certificate, 2), 1e-8)

    def testIdentity(self):
        bound = estimate_nu(np.eye(4), self.config)
        self.assertAlmostEqual(bound.value, 1.0, delta=1e-9)
        self.assertAlmostEqual(np.linalg.norm(np.eye(4) - bound.certificate, 2), 1.0, delta=1e-9)

    def testSandwich(self):
        rng = make_rng(42)
        for trial in range(10):
            n = 1 + trial % 5
            A = random_matrix(n, rng)
            bound = estimate_nu(A, self.config._replace(seed=trial))
            self.assertLessEqual(bound.value, spectral_radius(A) + 1e-8)
            self.assertLessEqual(bound.value, np.linalg.norm(A, 2) + 1e-8)
            self.assertLessEqual(np.linalg.norm(A - bound.certificate, 2), bound.value + 1e-8)
            self.assertLessEqual(bound.nilpotency_defect, 1e-8)

    def testRankOneProjection(self):
        Q = rank_one_projection(random_unit_vector(3, 43))
        bound = estimate_nu(Q, SearchConfig.from_hparam())
        self.assertGreaterEqual(bound.value, macdonald_value(3) - 1e-9)
        self.assertAlmostEqual(bound.value, (np.sqrt(5) - 1) / 2, delta=1e-4)

    def testDeterministic(self):
        A = random_matrix(3, make_rng(44))
        first = estimate_nu(A, self.config)
        second = estimate_nu(A, self.config, threads=2)
        self.assertEqual(first.value, second.value)
        assert_array_equal(first.certificate, second.certificate)
        assert_array_equal(first.flag.basis, second.flag.basis)

    def testRankOneQualityAcrossDimensions(self):
        config = SearchConfig.from_hparam()
        for n in range(2, 7):
            Q = rank_one_projection(random_unit_vector(n, make_rng(60, n)))
            bound = estimate_nu(Q, config._replace(seed=n))
            self.assertGreaterEqual(bound.value, macdonald_value(n) - 1e-9)
            self.assertLess(bound.value, macdonald_value(n) + 1e-4)

    def testRankOneBitwiseReproducible(self):
        Q = rank_one_projection(random_unit_vector(4, 61))
        first = estimate_nu(Q, self.config._replace(seed=3))
        second = estimate_nu(Q, self.config._replace(seed=3))
        self.assertEqual(first.value, second.value)
        assert_array_equal(first.certificate, second.certificate)


class TestScreening(unittest.TestCase):

    def setUp(self):
        self.config = SearchConfig(**hp.test)._replace(restarts=4, sweeps=6, screen_sweeps=2)
        self.A = random_matrix(4, make_rng(70))
        self.ranks = tuple(range(5))

    def testPolishesBestScreenedStarts(self):
        screened = FlagSearcher(self.A, self.ranks, self.config._replace(polish=0))
        screened.run()
        searcher = FlagSearcher(self.A, self.ranks, self.config._replace(polish=2))
        best = searcher.run()
        order = sorted(screened.results, key=lambda r: (r.value, r.index))
        self.assertEqual(searcher.polished, [r.index for r in order[:2]])
        self.assertIn(best.index, searcher.polished)
        for before, after in zip(screened.results, searcher.results):
            self.assertEqual(before.index, after.index)
            self.assertLessEqual(after.value, before.value + 1e-12)

    def testNoPolishKeepsScreenedResults(self):
        searcher = FlagSearcher(self.A, self.ranks, self.config._replace(polish=0))
        searcher.run()
        self.assertEqual(searcher.polished, [])
        self.assertEqual(len(searcher.results), self.config.restarts + 2)

    def testScreenRankVectors(self):
        candidates = list(rank_vectors(4, 2))
        ranks, value = screen_rank_vectors(self.A, candidates, self.config)
        self.assertIn(ranks, candidates)
        self.assertLessEqual(value, np.linalg.norm(self.A, 2) + 1e-12)


class TestEstimateNuOrder(unittest.TestCase):

    def setUp(self):
        self.config = SearchConfig(**hp.test)

    def testFullOrderAgrees(self):
        A = random_matrix(3, make_rng(50))
        self.assertAlmostEqual(estimate_nu_order(A, 3, self.config).value, estimate_nu(A, self.config).value,
                               delta=2e-8)

    def testOrderOne(self):
        A = random_matrix(3, make_rng(51))
        bound = estimate_nu_order(A, 1, self.config)
        self.assertAlmostEqual(bound.value, np.linalg.norm(A, 2), delta=1e-12)
        assert_allclose(bound.certificate, np.zeros((3, 3)), atol=1e-12)

    def testEmbeddedRankOneOrderTwo(self):
        Q = np.diag([1.0, 0.0, 0.0, 0.0])
        bound = estimate_nu_order(Q, 2, self.config._replace(restarts=2))
        self.assertAlmostEqual(bound.value, np.sqrt(2) / 2, delta=1e-9)
        self.assertEqual(len(bound.flag.ranks), 3)

    def testEmbeddedRankOneOrderThree(self):
        Q = rank_one_projection(random_unit_vector(6, 53))
        bound = estimate_nu_order(Q, 3, SearchConfig.from_hparam())
        self.assertGreaterEqual(bound.value, macdonald_value(3) - 1e-9)
        self.assertAlmostEqual(bound.value, macdonald_value(3), delta=1e-4)
        self.assertLessEqual(np.linalg.norm(np.linalg.matrix_power(bound.certificate, 3), 2), 1e-8)

    def testWarnsOnLargePowerResidual(self):
        A = random_matrix(3, make_rng(54))
        with mock.patch('searchers.flag_search.power_residual', return_value=1e-6) as residual:
            with self.assertLogs('search', level='WARNING') as logs:
                estimate_nu_order(A, 2, self.config._replace(restarts=2, sweeps=4))
        residual.assert_called_once()
        self.assertEqual(residual.call_args[1], {'order': 2})
        self.assertTrue(any('above cert_tol' in line for line in logs.output))

    def testMonotoneInOrder(self):
        A = random_matrix(4, make_rng(52))
        config = self.config._replace(restarts=2, sweeps=6)
        values = [estimate_nu_order(A, n, config).value for n in (1, 2)]
        self.assertGreaterEqual(values[0], values[1] - 2e-8)

    def testOrderAboveDimension(self):
        with self.assertRaises(PreconditionError):
            estimate_nu_order(np.eye(2), 3, self.config)


if __name__ == '__main__':
    unittest.main()
