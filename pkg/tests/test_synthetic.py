import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specfda.errors import BadRule, BadScheme, BadVariances
from specfda.kernels import BrownianMin, mercer_system
from specfda.numerics import trapezoid_grid
from specfda.synthetic import (Constant, ExplicitH, FiniteXi, FixedUnit, PolynomialH,
                               PolynomialXi, TwoPoint, draw, make_process, make_source_mean,
                               realize_counts, true_cov_on_grid, true_mean_on_grid)

MS = mercer_system(BrownianMin(), 200)


class TestSourceMean:
    def test_fixed_unit(self):
        mu = make_source_mean(MS, 0.5, FixedUnit())
        assert mu.coefficients[0] == pytest.approx(2 / np.pi, rel=1e-14)
        assert not np.any(mu.coefficients[1:])
        t = np.linspace(0, 1, 7)
        np.testing.assert_allclose(mu(t), 2 / np.pi * np.sqrt(2) * np.sin(np.pi * t / 2),
                                   atol=1e-14)

    def test_alpha_to_zero(self):
        mu = make_source_mean(MS, 1e-12, FixedUnit())
        assert mu.coefficients[0] == pytest.approx(1.0, abs=1e-10)

    def test_explicit_zero(self):
        mu = make_source_mean(MS, 0.5, ExplicitH((0.0,)))
        assert not np.any(mu(np.linspace(0, 1, 5)))

    def test_polynomial_normalized(self):
        mu = make_source_mean(MS, 0.5, PolynomialH(0.55))
        assert mu.h_norm == pytest.approx(1.0)
        np.testing.assert_allclose(mu.coefficients, MS.eigenvalues**0.5 * mu.h)

    @pytest.mark.parametrize("rule,alpha", [(PolynomialH(0.5), 0.5), (PolynomialH(0.2), 0.5),
                                            (FixedUnit(), 0.0), (ExplicitH((1.0,) * 201), 0.5)])
    def test_bad_rules(self, rule, alpha):
        with pytest.raises(BadRule):
            make_source_mean(MS, alpha, rule)


class TestProcess:
    def test_rank_one(self):
        spec = make_process(make_source_mean(MS, 0.5), FiniteXi((1.0,)))
        assert spec.true_cov([0.5], [0.5])[0, 0] == pytest.approx(1.0, abs=1e-14)

    def test_polynomial_trace(self):
        spec = make_process(make_source_mean(MS, 0.5), PolynomialXi(2.0), kl_size=200)
        g = trapezoid_grid(4001)
        trace = g.weights @ np.diag(true_cov_on_grid(spec, g))
        partial = np.sum(1.0 / np.arange(1, 201) ** 2)
        assert trace == pytest.approx(partial, abs=1e-4)
        assert partial == pytest.approx(np.pi**2 / 6, abs=5e-3)

    def test_covariance_symmetric_psd(self):
        spec = make_process(make_source_mean(MS, 0.5), PolynomialXi(2.0))
        C = true_cov_on_grid(spec, trapezoid_grid(65))
        assert np.array_equal(C, C.T)
        assert np.linalg.eigvalsh(C).min() >= -1e-10 * np.trace(C)

    def test_truncation_adequacy(self):
        mean = make_source_mean(MS, 0.5)
        g = trapezoid_grid(129)
        c50 = true_cov_on_grid(make_process(mean, PolynomialXi(2.0), kl_size=50), g)
        c100 = true_cov_on_grid(make_process(mean, PolynomialXi(2.0), kl_size=100), g)
        # |psi_k| <= sqrt(2), so the change is bounded by the dropped variance tail, which is
        # attained at t = 1 where every psi_k^2 equals 2.
        tail = 2 * np.sum(1.0 / np.arange(51, 101) ** 2)
        assert np.max(np.abs(c100 - c50)) == pytest.approx(tail, rel=1e-10)

    @pytest.mark.parametrize("rule,sigma0", [(PolynomialXi(1.0), 0.0), (FiniteXi((-1.0,)), 0.0),
                                             (FiniteXi((1.0,)), -0.1), (PolynomialXi(2, -1), 0.0)])
    def test_bad_variances(self, rule, sigma0):
        with pytest.raises(BadVariances):
            make_process(make_source_mean(MS, 0.5), rule, sigma0)

    def test_true_mean_zero(self):
        spec = make_process(make_source_mean(MS, 0.5, ExplicitH((0.0,))), FiniteXi(()))
        assert not np.any(true_mean_on_grid(spec, trapezoid_grid(9)))


class TestDraw:
    def setup_method(self):
        self.spec = make_process(make_source_mean(MS, 0.5, PolynomialH(0.55)), PolynomialXi(2.0),
                                 0.5)

    def test_deterministic(self):
        a = draw(self.spec, 20, 5, 42).samples
        b = draw(self.spec, 20, 5, 42).samples
        assert np.array_equal(a.t, b.t) and np.array_equal(a.y, b.y)
        assert not np.array_equal(a.y, draw(self.spec, 20, 5, 43).samples.y)

    def test_noiseless_exact(self):
        spec = make_process(self.spec.mean, FiniteXi(()), 0.0)
        s = draw(spec, 10, 4, 1).samples
        np.testing.assert_array_equal(s.y, spec.true_mean(s.t))

    def test_design_and_counts(self):
        s = draw(self.spec, 30, 6, 3).samples
        assert s.n == 30 and np.all(s.counts == 6)
        assert 0 <= s.t.min() and s.t.max() <= 1

    def test_two_point_harmonic_mean(self):
        scheme = TwoPoint(2, 10, 0.5)
        assert scheme.harmonic_mean == pytest.approx(10 / 3)
        spec = make_process(self.spec.mean, PolynomialXi(2.0), 0.5, scheme)
        s = draw(spec, 40, 10 / 3, 5).samples
        assert s.harmonic_mean == pytest.approx(10 / 3, rel=0.05)
        assert s.harmonic_mean == pytest.approx(1 / np.mean(1 / s.counts), abs=1e-12)

    def test_two_point_unreachable(self):
        with pytest.raises(BadScheme):
            realize_counts(TwoPoint(2, 10, 0.5), 40, 6.0, np.random.default_rng(0))

    def test_constant_must_be_integer(self):
        with pytest.raises(BadScheme):
            realize_counts(Constant(), 10, 2.5, np.random.default_rng(0))

    def test_moment_check(self):
        # Variance of X(0.5) over many single-point curves pinned at t = 0.5.
        spec = make_process(self.spec.mean, PolynomialXi(2.0), 0.0)
        rng = np.random.default_rng(0)
        Z = rng.standard_normal((100_000, spec.xi.size))
        phi = spec.basis_functions([0.5])[:, 0]
        x = Z @ (np.sqrt(spec.xi) * phi)
        target = spec.pointwise_variance([0.5])[0]
        se = target * np.sqrt(2 / (x.size - 1))
        assert abs(x.var(ddof=1) - target) <= 3 * se

    def test_empirical_variance_through_draw(self):
        spec = make_process(make_source_mean(MS, 0.5, ExplicitH((0.0,))), FiniteXi((1.0,)), 0.0)
        s = draw(spec, 20_000, 1, 11).samples
        # X = Z psi_1(t): E[Y^2] = E[psi_1(t)^2] = 1 for uniform t
        assert np.mean(s.y**2) == pytest.approx(1.0, abs=4 * np.sqrt(2 / 20_000) * 1.5)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(min_value=1, max_value=30), st.integers(min_value=1, max_value=8),
           st.integers(min_value=0, max_value=2**31))
    def test_shapes(self, n, m, seed):
        s = draw(self.spec, n, m, seed).samples
        assert s.total == n * m and np.all(np.isfinite(s.y))
