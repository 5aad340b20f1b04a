from dataclasses import dataclass

import numpy as np
import pytest

from specfda.covariance import (CovEstimate, assemble_pairs, evaluate_cov, fit_covariance,
                                oracle_lambda_cov, oracle_schedule)
from specfda.errors import BadExponent, NoPairs, PairCapExceeded
from specfda.filters import Filter
from specfda.kernels import BrownianMin, DirectKernel2, Gaussian, ProductKernel
from specfda.mean import SampleSet, fit_mean, oracle_lambda_mean
from specfda.numerics import trapezoid_grid

ZERO = lambda t: np.zeros_like(np.asarray(t, dtype=float))  # noqa: E731
PK = ProductKernel(BrownianMin())


@dataclass(frozen=True)
class OrderedOnly(ProductKernel):
    """Same kernel, but forces the solver onto the full ordered-pair system."""

    swap_invariant = False


def random_samples(seed, n=8, lo=1, hi=6):
    rng = np.random.default_rng(seed)
    counts = rng.integers(lo, hi + 1, size=n)
    t = rng.uniform(size=counts.sum())
    return SampleSet(t, rng.standard_normal(t.size), counts)


class TestAssemblePairs:
    def test_one_curve_two_points(self):
        d = assemble_pairs(SampleSet([0.25, 0.75], [1.0, 2.0], [2]), ZERO)
        np.testing.assert_array_equal(d.pairs, [[0.25, 0.75], [0.75, 0.25]])
        np.testing.assert_array_equal(d.weights, [0.5, 0.5])
        np.testing.assert_array_equal(d.responses, [2.0, 2.0])

    def test_perfect_centering_zero_responses(self):
        s = random_samples(0)
        d = assemble_pairs(s, lambda t: s.y)
        assert not np.any(d.responses)

    def test_skips_singletons(self):
        d = assemble_pairs(SampleSet([0.1, 0.2, 0.3, 0.9], np.ones(4), [3, 1]), ZERO)
        assert d.size == 6
        np.testing.assert_array_equal(d.counts, [6, 0])
        assert d.contributing_curves == 1

    def test_lexicographic_order(self):
        d = assemble_pairs(SampleSet([0.1, 0.2, 0.3], [1.0, 2.0, 3.0], [3]), ZERO)
        np.testing.assert_array_equal(
            d.pairs, [[0.1, 0.2], [0.1, 0.3], [0.2, 0.1], [0.2, 0.3], [0.3, 0.1], [0.3, 0.2]])

    @pytest.mark.parametrize("seed", range(5))
    def test_invariants(self, seed):
        s = random_samples(seed)
        d = assemble_pairs(s, ZERO)
        assert d.size == sum(m * (m - 1) for m in s.counts)
        # swap closure with equal responses
        lookup = {(c, a, b): r for c, (a, b), r in zip(d.curve, map(tuple, d.pairs), d.responses)}
        for (c, a, b), r in lookup.items():
            assert lookup[(c, b, a)] == r
        assert d.weights.sum() == pytest.approx(d.contributing_curves / s.n, abs=1e-12)
        # every orbit has exactly two members
        assert np.all(np.bincount(d.orbit) == 2)

    def test_no_pairs(self):
        with pytest.raises(NoPairs):
            assemble_pairs(SampleSet([0.1, 0.5], [1.0, 1.0], [1, 1]), ZERO)

    def test_diagonal_variant(self):
        s = SampleSet([0.1, 0.2, 0.5], [1.0, 2.0, 3.0], [2, 1])
        d = assemble_pairs(s, ZERO, include_diagonal=True)
        assert d.size == 4 + 1
        assert d.weights.sum() == pytest.approx(1.0)


class TestFitCovariance:
    def test_zero_responses(self):
        s = random_samples(1)
        est = fit_covariance(s, lambda t: s.y, PK, Filter("cutoff"), 0.01)
        assert not np.any(est.alpha)
        assert not np.any(evaluate_cov(est, trapezoid_grid(9)))

    def test_hand_two_by_two(self):
        r1, r2 = 0.7, -1.3
        s = SampleSet([0.25, 0.75], [r1, r2], [2])
        lam = 0.1
        # G = [[3/16, 1/16], [1/16, 3/16]], w = 1/2, symmetric solution
        est = fit_covariance(s, ZERO, PK, Filter("tikhonov"), lam)
        np.testing.assert_allclose(est.alpha, [r1 * r2 / (0.25 + 2 * lam)] * 2, rtol=1e-13)
        kwk = fit_covariance(s, ZERO, PK, Filter("tikhonov"), lam, form="kwk")
        np.testing.assert_allclose(kwk.alpha, [0.125 * r1 * r2 / (0.03125 + lam)] * 2,
                                   rtol=1e-13)

    @pytest.mark.parametrize("seed", range(3))
    def test_kwk_tikhonov_matches_dense_solve(self, seed):
        s = random_samples(seed)
        lam = 1e-3
        d = assemble_pairs(s, ZERO)
        G = PK.gram(d.pairs)
        W = np.diag(d.weights)
        ref = np.linalg.solve(G @ W @ G + lam * np.eye(d.size), G @ W @ d.responses)
        est = fit_covariance(s, ZERO, PK, Filter("tikhonov"), lam, form="kwk")
        assert np.linalg.norm(est.alpha - ref) <= 1e-8 * np.linalg.norm(ref)

    @pytest.mark.parametrize("seed", range(3))
    def test_operator_tikhonov_matches_dense_solve(self, seed):
        s = random_samples(seed)
        lam = 1e-3
        d = assemble_pairs(s, ZERO)
        G = PK.gram(d.pairs)
        ref = np.linalg.solve(G + np.diag(lam / d.weights), d.responses)
        for solver in ("eigen", "direct"):
            est = fit_covariance(s, ZERO, PK, Filter("tikhonov"), lam, solver=solver)
            assert np.linalg.norm(est.alpha - ref) <= 1e-8 * np.linalg.norm(ref)

    @pytest.mark.parametrize("name", ["tikhonov", "cutoff", "showalter", "landweber"])
    @pytest.mark.parametrize("seed", range(3))
    def test_unordered_reduction_is_exact(self, name, seed):
        s = random_samples(seed)
        lam = 5e-3
        full = fit_covariance(s, ZERO, OrderedOnly(BrownianMin()), Filter(name), lam)
        red = fit_covariance(s, ZERO, PK, Filter(name), lam)
        assert np.linalg.norm(red.alpha - full.alpha) <= 1e-8 * max(np.linalg.norm(full.alpha), 1e-300)
        g = trapezoid_grid(17)
        np.testing.assert_allclose(red.evaluate(g), full.evaluate(g), atol=1e-9)

    def test_partial_matches_eigen(self):
        s = random_samples(4)
        a = fit_covariance(s, ZERO, PK, Filter("cutoff"), 1e-3)
        b = fit_covariance(s, ZERO, PK, Filter("cutoff"), 1e-3, solver="partial")
        np.testing.assert_allclose(b.alpha, a.alpha, rtol=1e-7, atol=1e-9 * np.abs(a.alpha).max())

    @pytest.mark.parametrize("kernel", [PK, ProductKernel(Gaussian(0.3)), DirectKernel2(Gaussian(0.4))],
                             ids=["brownian", "gauss-product", "gauss-direct"])
    def test_symmetric_surface(self, kernel):
        s = random_samples(5)
        mean, _ = fit_mean(s, BrownianMin(), Filter("tikhonov"), 0.05)
        est = fit_covariance(s, mean, kernel, Filter("showalter"), 0.01)
        C = est.evaluate(trapezoid_grid(21))
        assert np.all(np.isfinite(C))
        assert np.max(np.abs(C - C.T)) <= 1e-10
        assert est.eta == pytest.approx(0.05)

    def test_pair_cap(self):
        s = random_samples(6, n=10, lo=5, hi=5)
        with pytest.raises(PairCapExceeded):
            fit_covariance(s, ZERO, PK, Filter("tikhonov"), 0.1, pair_cap=199)
        fit_covariance(s, ZERO, PK, Filter("tikhonov"), 0.1, pair_cap=200)

    def test_no_pairs(self):
        with pytest.raises(NoPairs):
            fit_covariance(SampleSet([0.3], [1.0], [1]), ZERO, PK, Filter("tikhonov"), 0.1)


class TestEvaluate:
    def test_zero_estimate(self):
        est = CovEstimate(np.array([[0.2, 0.4]]), np.zeros(1), PK, 0.1, None, Filter("tikhonov"))
        assert not np.any(est.evaluate(trapezoid_grid(5)))

    def test_single_pair_with_twin(self):
        a, b = 0.3, 0.8
        est = CovEstimate(np.array([[a, b], [b, a]]), np.ones(2), PK, 0.1, None,
                          Filter("tikhonov"))
        g = trapezoid_grid(11)
        s, t = np.meshgrid(g.nodes, g.nodes, indexing="ij")
        expected = np.minimum(a, s) * np.minimum(b, t) + np.minimum(b, s) * np.minimum(a, t)
        np.testing.assert_allclose(est.evaluate(g), expected, atol=1e-15)

    def test_generic_kernel_path_matches_product_path(self):
        rng = np.random.default_rng(0)
        P = rng.uniform(size=(6, 2))
        alpha = rng.standard_normal(6)
        fast = CovEstimate(P, alpha, PK, 0.1, None, Filter("tikhonov"))
        slow = CovEstimate(P, alpha, OrderedOnly(BrownianMin()), 0.1, None, Filter("tikhonov"))
        g = trapezoid_grid(7)
        np.testing.assert_allclose(fast.evaluate(g), slow.evaluate(g), atol=1e-14)


class TestOracle:
    def test_values(self):
        assert oracle_lambda_cov(1, 1, 0.5, 2, np.inf) == 1.0
        assert oracle_lambda_cov(100, 5, 0.5, 2, np.inf) == pytest.approx(500 ** (-2 / 3))

    def test_schedule(self):
        eta, lam = oracle_schedule(100, 5, 0.5, 2, np.inf, 1.5, 2, 1.0)
        assert eta == oracle_lambda_mean(100, 5, 0.5, 2, np.inf)
        assert lam == pytest.approx(500 ** (-2 / 5))

    def test_bad_exponent(self):
        with pytest.raises(BadExponent):
            oracle_lambda_cov(10, 5, 0.5, 1.0, np.inf)
