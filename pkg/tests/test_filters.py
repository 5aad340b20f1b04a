import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specfda.errors import BadLambda, OutOfSpectralRange
from specfda.filters import (FILTER_NAMES, Filter, default_verification_grids, filter_from_name,
                             g, landweber_steps, qualification, residual, verify_family)

lams = st.floats(min_value=1e-6, max_value=1.0)
sigmas = st.floats(min_value=1e-8, max_value=1.0)


class TestValues:
    def test_tikhonov(self):
        assert g(Filter("tikhonov"), 1.0, 1.0) == 0.5
        assert residual(Filter("tikhonov"), 1.0, 1.0) == 0.5

    def test_cutoff(self):
        assert g(Filter("cutoff"), 0.1, 0.05) == 0.0
        assert g(Filter("cutoff"), 0.1, 0.1) == pytest.approx(10.0)
        assert residual(Filter("cutoff"), 0.1, np.array([0.1, 0.5, 1.0])) == pytest.approx(0.0)

    def test_landweber(self):
        assert landweber_steps(1 / 3) == 3
        assert g(Filter("landweber"), 1 / 3, 0.5) == pytest.approx(1.75, abs=1e-15)
        assert residual(Filter("landweber"), 1 / 3, 0.5) == pytest.approx(0.125, abs=1e-15)
        assert g(Filter("landweber"), 1 / 3, 0.0) == 3.0

    def test_landweber_steps_floor(self):
        assert landweber_steps(1.0) == 1
        assert landweber_steps(10**-0.25) == 1
        assert landweber_steps(0.4) == 2
        assert landweber_steps(5.0) == 1
        assert landweber_steps(1e-3) == 1000

    def test_showalter(self):
        assert g(Filter("showalter"), 1.0, 1.0) == pytest.approx(1 - math.exp(-1), rel=1e-14)
        assert g(Filter("showalter"), 0.2, 0.0) == pytest.approx(5.0)

    def test_showalter_small_sigma_is_stable(self):
        # expm1 keeps full precision where 1 - exp(-x) cancels
        val = g(Filter("showalter"), 1.0, 1e-12)
        assert val == pytest.approx(1.0, rel=1e-11)

    def test_qualification(self):
        assert qualification(Filter("tikhonov")) == 1
        assert qualification(Filter("cutoff")) == math.inf
        assert qualification(Filter("landweber")) == math.inf
        assert qualification(Filter("showalter")) == math.inf

    def test_names(self):
        assert set(FILTER_NAMES) == {"tikhonov", "cutoff", "showalter", "landweber"}
        assert filter_from_name("SpectralCutoff").family == "cutoff"
        with pytest.raises(ValueError):
            filter_from_name("ridge")


class TestErrors:
    @pytest.mark.parametrize("name", ["tikhonov", "cutoff", "showalter", "landweber"])
    @pytest.mark.parametrize("lam", [0.0, -1.0, math.inf, math.nan])
    def test_bad_lambda(self, name, lam):
        with pytest.raises(BadLambda):
            g(Filter(name), lam, 0.5)

    def test_negative_sigma(self):
        with pytest.raises(OutOfSpectralRange):
            g(Filter("tikhonov"), 0.1, -0.5)

    def test_above_declared_range(self):
        with pytest.raises(OutOfSpectralRange):
            g(Filter("cutoff"), 0.1, 1.5, a=1.0)
        g(Filter("cutoff"), 0.1, 1.5, a=2.0)

    def test_landweber_divergent_range(self):
        with pytest.raises(OutOfSpectralRange):
            g(Filter("landweber"), 0.1, 2.0)


class TestFamilyProperties:
    @pytest.mark.parametrize("name", ["tikhonov", "cutoff", "showalter", "landweber"])
    @settings(max_examples=60)
    @given(lams, sigmas)
    def test_bounds(self, name, lam, sigma):
        f = Filter(name)
        val = float(f.g(lam, sigma))
        assert -1e-15 <= sigma * val <= 1 + 1e-12
        assert lam * val <= 1 + 1e-12
        assert abs(float(f.residual(lam, sigma))) <= 1 + 1e-12

    @pytest.mark.parametrize("name", ["tikhonov", "cutoff", "showalter", "landweber"])
    @settings(max_examples=60)
    @given(lams, sigmas)
    def test_residual_identity(self, name, lam, sigma):
        f = Filter(name)
        assert sigma * float(f.g(lam, sigma)) + float(f.residual(lam, sigma)) == pytest.approx(
            1.0, abs=1e-12)

    @pytest.mark.parametrize("name", ["tikhonov", "cutoff", "showalter", "landweber"])
    def test_inversion_limit(self, name):
        lam = 1e-6
        assert 1.0 * float(Filter(name).g(lam, 1.0)) == pytest.approx(1.0, abs=1e-5)

    @pytest.mark.parametrize("name", ["tikhonov", "showalter"])
    @settings(max_examples=40)
    @given(st.floats(min_value=1e-5, max_value=0.5), st.floats(min_value=1e-3, max_value=20.0))
    def test_strictly_decreasing_in_lambda(self, name, lam, ratio):
        # ratio = sigma / lam, kept where exp(-ratio) is resolvable in double precision
        f = Filter(name)
        sigma = min(ratio * lam, 1.0)
        assert float(f.g(lam, sigma)) > float(f.g(2 * lam, sigma))


class TestVerifier:
    @pytest.mark.parametrize("name", ["tikhonov", "cutoff", "showalter", "landweber"])
    def test_all_pass(self, name):
        lam, sig = default_verification_grids()
        rep = verify_family(Filter(name), lam, sig)
        assert rep.passed, rep.checks
        assert rep.to_dict()["lambda_grid"] == list(lam)

    def test_tikhonov_envelopes(self):
        sig = np.logspace(-6, 0, 200)
        rep1 = verify_family(Filter("tikhonov"), np.logspace(-6, 0, 25), sig, p_list=(1.0,))
        assert rep1.envelopes[1.0] <= 1.0
        rep2 = verify_family(Filter("tikhonov"), [1e-3], sig, p_list=(2.0,))
        assert rep2.envelopes[2.0] > 10
        assert "qualification_p2" not in rep2.checks

    def test_cutoff_high_power(self):
        rep = verify_family(Filter("cutoff"), np.logspace(-6, 0, 25), np.logspace(-6, 0, 200),
                            p_list=(5.0,))
        assert rep.envelopes[5.0] <= 1.0
        assert rep.checks["qualification_p5"]

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(OutOfSpectralRange):
            verify_family(Filter("tikhonov"), [0.1], [0.0, 0.5])
