import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stablesde.alpha_est import (
    McmcConfig,
    _TableLikelihood,
    estimate_alpha_mcmc,
    increments_from_trajectory,
    mh_log_likelihood,
    standardized_group_residuals,
)
from stablesde.errors import ConfigError, DomainError
from stablesde.sde_sim import SnapshotDataset, builtin_system, generate_snapshots, grid_points
from stablesde.stable_dist import DEFAULT_QUADRATURE, pdf_fourier, sample_standard

LOG_PEAK_15 = math.log(math.gamma(5 / 3) / math.pi)  # -1.24705...


class TestLikelihood:
    def test_single_zero(self):
        assert mh_log_likelihood([0.0], 1.5, 1.0) == pytest.approx(LOG_PEAK_15, abs=1e-12)
        assert mh_log_likelihood([0.0], 1.5, 1.0) == pytest.approx(-1.247, abs=5e-4)

    def test_additive(self):
        assert mh_log_likelihood([0.0, 0.0], 1.5, 1.0) == pytest.approx(2 * LOG_PEAK_15, abs=1e-12)

    def test_scale_term(self):
        assert mh_log_likelihood([0.0], 1.5, 2.0) == pytest.approx(LOG_PEAK_15 - math.log(2), abs=1e-12)

    def test_cauchy_point(self):
        assert mh_log_likelihood([0.0, 1.0], 1.0, 1.0) == pytest.approx(-2 * math.log(math.pi) - math.log(2), abs=1e-12)

    def test_near_cauchy_uses_fourier(self):
        x = np.array([0.3, -2.0])
        want = np.sum(np.log(pdf_fourier(x, 1.002)))
        assert mh_log_likelihood(x, 1.002, 1.0) == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("alpha,sigma", [(2.3, 1.0), (2.0, 1.0), (0.0, 1.0), (-0.1, 1.0), (1.5, 1e-4), (1.5, 2e3)])
    def test_outside_support(self, alpha, sigma):
        assert mh_log_likelihood([0.1], alpha, sigma) == -math.inf

    @given(st.floats(0.2, 1.9), st.floats(0.01, 50.0))
    def test_rescaling_identity(self, alpha, sigma):
        x = np.array([0.2, -1.3, 4.0])
        a = mh_log_likelihood(2 * x, alpha, min(2 * sigma, 1e3))
        if 2 * sigma <= 1e3:
            assert a == pytest.approx(mh_log_likelihood(x, alpha, sigma) - 3 * math.log(2), abs=1e-8)

    @pytest.mark.parametrize("alpha", [0.35, 0.8, 1.0, 1.3, 1.5, 1.95])
    def test_table_matches_direct(self, alpha):
        x = sample_standard(1.5, 2000, 1)
        table = _TableLikelihood(x, DEFAULT_QUADRATURE)
        for sigma in (0.5, 1.0, 3.0):
            direct = mh_log_likelihood(x, alpha, sigma)
            assert table(alpha, sigma) == pytest.approx(direct, abs=2e-3)


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [dict(iterations=0), dict(burn_in=5000), dict(proposal_std_alpha=0.0), dict(init_alpha=2.0),
         dict(init_sigma=1e4), dict(histogram_bins=0)],
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            McmcConfig(**kw)

    def test_empty_or_nonfinite_samples(self):
        with pytest.raises(ConfigError):
            estimate_alpha_mcmc([])
        with pytest.raises(ConfigError):
            estimate_alpha_mcmc([0.0, np.inf])


@pytest.fixture(scope="module")
def data():
    return sample_standard(1.5, 5000, 11)


class TestChain:
    def test_reproducible(self, data):
        cfg = McmcConfig(iterations=300, burn_in=50, seed=4)
        a, b = estimate_alpha_mcmc(data, cfg), estimate_alpha_mcmc(data, cfg)
        np.testing.assert_array_equal(a.chain, b.chain)
        c = estimate_alpha_mcmc(data, McmcConfig(iterations=300, burn_in=50, seed=5))
        assert not np.array_equal(a.chain, c.chain)

    def test_support_never_left(self, data):
        # an alpha proposal of 2.3 has zero acceptance probability
        cfg = McmcConfig(iterations=200, burn_in=0, proposal_std_alpha=0.8, init_alpha=1.9, seed=2)
        res = estimate_alpha_mcmc(data, cfg)
        assert np.all((res.chain[:, 0] > 0) & (res.chain[:, 0] < 2))

    def test_result_fields(self, data):
        res = estimate_alpha_mcmc(data, McmcConfig(iterations=200, burn_in=100, seed=1))
        assert res.chain.shape == (200, 2) and res.log_likelihood.shape == (200,)
        assert res.posterior_mean_alpha == pytest.approx(res.chain[100:, 0].mean())
        assert 0.0 <= res.acceptance_rate <= 1.0
        d = res.to_dict()
        assert sum(d["histogram"]["counts"]) == 100 and d["iterations"] == 200
        assert len(d["histogram"]["edges"]) == 41

    def test_exact_path_agrees_with_table(self):
        x = sample_standard(1.5, 300, 2)
        cfg = McmcConfig(iterations=60, burn_in=10, seed=0)
        a = estimate_alpha_mcmc(x, cfg)
        b = estimate_alpha_mcmc(x, cfg, exact=True)
        # table and quadrature likelihoods differ by ~1e-6, so the chains
        # make the same accept/reject decisions
        np.testing.assert_allclose(a.chain, b.chain, rtol=1e-12)

    def test_second_alpha(self):
        x = sample_standard(1.2, 10**4, 3)
        res = estimate_alpha_mcmc(x, McmcConfig(seed=0))
        assert res.posterior_mean_alpha == pytest.approx(1.2, abs=0.05)
        assert not res.flags

    def test_rescaling_shifts_log_sigma_only(self, data):
        cfg = McmcConfig(iterations=3000, burn_in=500, seed=7)
        a = estimate_alpha_mcmc(data, cfg)
        b = estimate_alpha_mcmc(2 * data, cfg)
        log_a = np.log(a.chain[500:, 1]).mean()
        log_b = np.log(b.chain[500:, 1]).mean()
        assert log_b - log_a == pytest.approx(math.log(2), abs=0.02)
        assert abs(a.posterior_mean_alpha - b.posterior_mean_alpha) < 0.02

    def test_low_acceptance_flagged(self, data):
        res = estimate_alpha_mcmc(data, McmcConfig(iterations=100, burn_in=0, proposal_std_alpha=5.0,
                                                   proposal_std_log_sigma=20.0, seed=0))
        assert res.flags and "acceptance" in res.flags[0]


class TestIncrements:
    def test_examples(self):
        inc, dt = increments_from_trajectory([(0, 0), (1, 2), (2, 5)])
        np.testing.assert_array_equal(inc, [2, 3])
        np.testing.assert_array_equal(dt, [1, 1])
        np.testing.assert_array_equal(increments_from_trajectory([(0, 4), (0.5, 4), (0.7, 4)])[0], [0, 0])
        assert increments_from_trajectory([(0, 1.0)])[0].size == 0

    def test_non_monotone(self):
        with pytest.raises(DomainError):
            increments_from_trajectory([(0, 0), (1, 1), (1, 2)])


class TestResiduals:
    def test_common_scale_across_groups(self):
        sys = builtin_system("double_well_linear_mult")
        ds = generate_snapshots(sys, 1.5, grid_points(((-0.8, 0.8),), 10), 1000, 0.1, 0)
        z = standardized_group_residuals(ds)
        assert z.size == 10000
        # every group has unit median absolute residual
        for k in range(10):
            assert np.median(np.abs(z[k * 1000 : (k + 1) * 1000])) == pytest.approx(1.0, abs=1e-12)

    def test_needs_grouping(self):
        ds = SnapshotDataset(np.zeros(10), np.arange(10.0), np.full(10, 0.1), 1.5)
        with pytest.raises(ConfigError):
            standardized_group_residuals(ds)
        tiny = SnapshotDataset(np.zeros(3), np.arange(3.0), np.full(3, 0.1), 1.5, (0, 3))
        with pytest.raises(ConfigError):
            standardized_group_residuals(tiny)
