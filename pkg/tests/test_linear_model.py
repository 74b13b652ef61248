import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from polybma.linear_model import (
    SingularDesignError,
    build_design,
    chi2_aug_min_quadratic,
    lec_posterior,
    log_marginal_likelihood,
    log_marginal_likelihood_many,
    predictive_at,
    predictive_many,
)
from polybma.toy_functions import Dataset, generate_dataset


def _ds(x, d, s):
    return Dataset(np.array(x, float), np.array(d, float), np.array(s, float))


def test_design_matrix_by_hand():
    ds = build_design(_ds([0, 0.5], [1, 2], [1, 1]), 1)
    np.testing.assert_allclose(ds.A, [[2, 0.5], [0.5, 0.25]], rtol=1e-15)
    np.testing.assert_allclose(ds.b, [3, 1.0], rtol=1e-15)
    assert ds.C == 5.0
    assert not ds.singular


def test_eigenbasis_reconstructs_A():
    ds = build_design(generate_dataset("g2", seed=4), 4)
    np.testing.assert_allclose(ds.O.T @ np.diag(ds.eigvals) @ ds.O, ds.A, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(ds.O @ ds.O.T, np.eye(5), atol=1e-12)
    assert np.all(ds.eigvals >= 0)


def test_repeated_abscissa_is_singular():
    ds = build_design(_ds([1, 1, 1], [1, 2, 3], [1, 1, 1]), 1)
    assert ds.singular
    assert ds.alpha0 is None
    with pytest.raises(SingularDesignError):
        chi2_aug_min_quadratic(ds, 1.0)
    # augmented quantities stay usable
    lp = lec_posterior(ds, 1.0)
    np.linalg.cholesky(lp.cov)


def test_scalar_ridge():
    lp = lec_posterior(build_design(_ds([0.3], [1.0], [0.1]), 0), 1.0)
    assert lp.mean[0] == pytest.approx(100 / 101, rel=1e-14)
    assert lp.cov[0, 0] == pytest.approx(1 / 101, rel=1e-14)


@pytest.mark.parametrize("M", [0, 1, 3])
def test_no_data_returns_prior(M):
    ds = build_design(Dataset.empty(), M)
    lp = lec_posterior(ds, 2.5)
    np.testing.assert_allclose(lp.mean, 0.0)
    np.testing.assert_allclose(lp.cov, 2.5**2 * np.eye(M + 1), rtol=1e-14)
    for s in (0.1, 1.0, 7.0):
        assert log_marginal_likelihood(ds, s) == pytest.approx(0.0, abs=1e-12)


def test_sigma_a_must_be_positive():
    ds = build_design(generate_dataset("g1", seed=0), 1)
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            lec_posterior(ds, bad)
        with pytest.raises(ValueError):
            log_marginal_likelihood(ds, bad)


def test_predictive_examples():
    lp = lec_posterior(build_design(generate_dataset("g2", seed=2), 3), 1.5)
    assert predictive_at(lp, 0.0) == pytest.approx((lp.mean[0], lp.cov[0, 0]), rel=1e-14)
    prior = lec_posterior(build_design(Dataset.empty(), 1), 1.0)
    assert predictive_at(prior, 2.0) == pytest.approx((0.0, 5.0), abs=1e-14)


def test_predictive_matches_posterior_sampling():
    lp = lec_posterior(build_design(generate_dataset("g2", seed=17), 2), 1.0)
    x = 1.2 / math.pi
    rng = np.random.default_rng(0)
    a = rng.multivariate_normal(lp.mean, lp.cov, size=1_000_000)
    f = a @ np.array([1.0, x, x * x])
    mean, var = predictive_at(lp, x)
    assert f.mean() == pytest.approx(mean, rel=3e-3)
    assert f.var() == pytest.approx(var, rel=3e-3)


def test_vectorized_predictive_matches_scalar():
    ds = build_design(generate_dataset("g1", seed=8), 5)
    sig = np.array([0.3, 1.0, 4.0])
    means, var = predictive_many(ds, sig, 0.5)
    for s, m, v in zip(sig, means, var):
        assert (m, v) == pytest.approx(predictive_at(lec_posterior(ds, s), 0.5), rel=1e-10)
    lm = log_marginal_likelihood_many(ds, sig)
    np.testing.assert_allclose(lm, [log_marginal_likelihood(ds, s) for s in sig], rtol=1e-12)


def test_laplace_single_datum_against_quadrature():
    x, d, s, sa = 0.2, 0.8, 0.1, 1.3
    ds = build_design(_ds([x], [d], [s]), 0)

    def integrand(a):
        chi2 = (d - a) ** 2 / s**2
        prior = math.exp(-a * a / (2 * sa * sa)) / (sa * math.sqrt(2 * math.pi))
        return math.exp(-chi2 / 2) * prior

    val, _ = integrate.quad(integrand, -10, 10, points=[d], epsabs=0, epsrel=1e-13, limit=200)
    # dropped constant is exactly 1 under the exp(-chi2/2) likelihood convention
    assert log_marginal_likelihood(ds, sa) == pytest.approx(math.log(val), rel=1e-10)


def test_chi2_aug_min_non_increasing_in_M():
    data = generate_dataset("g1", seed=5)
    for sa in (0.5, 2.0, 8.0):
        vals = [lec_posterior(build_design(data, M), sa).chi2_aug_min for M in range(8)]
        assert all(b <= a + 1e-9 * (1 + a) for a, b in zip(vals, vals[1:]))
        # augmented minimum never drops below the unaugmented one
        for M, v in enumerate(vals):
            ds = build_design(data, M)
            if not ds.singular:
                assert v >= ds.chi2_min - 1e-9


def test_large_sigma_limits():
    ds = build_design(generate_dataset("g2", seed=1), 3)
    sa = 1e6
    q = chi2_aug_min_quadratic(ds, sa)
    assert q == pytest.approx(ds.chi2_min + ds.alpha0 @ ds.alpha0 / sa**2, rel=1e-6)
    lp = lec_posterior(ds, sa)
    np.testing.assert_allclose(lp.mean, ds.alpha0, rtol=1e-4)


def test_quadratic_form_with_zero_alpha0():
    # data exactly zero: alpha0 = 0 and the quadratic form collapses to chi2_min
    ds = build_design(_ds([0.0, 0.1, 0.2], [0.0, 0.0, 0.0], [0.1, 0.1, 0.1]), 1)
    np.testing.assert_allclose(ds.alpha0, 0.0, atol=1e-15)
    assert chi2_aug_min_quadratic(ds, 2.0) == ds.chi2_min


def test_return_the_prior_for_top_coefficient():
    hits = 0
    for seed in range(100):
        lp = lec_posterior(build_design(generate_dataset("g2", seed=seed), 6), 5.0)
        sd6 = math.sqrt(lp.cov[6, 6])
        hits += abs(lp.mean[6]) < 2.5 and 4.5 <= sd6 <= 5.0
    assert hits >= 90


def test_recovered_lecs_cover_reference_values():
    means = np.array([lec_posterior(build_design(generate_dataset("g1", seed=s), 2), 1.0).mean
                      for s in range(200)])
    lo, hi = np.percentile(means, [1, 99], axis=0)
    assert lo[0] <= 0.223 <= hi[0]
    assert lo[1] <= 1.807 <= hi[1]


def test_posterior_json_schema():
    lp = lec_posterior(build_design(generate_dataset("g1", seed=0), 2), 1.0)
    doc = lp.to_json()
    assert set(doc) == {"M", "sigma_a", "mean", "cov", "chi2_aug_min", "log_det_A_aug"}
    assert len(doc["cov"]) == 3 and len(doc["cov"][0]) == 3


@settings(max_examples=200, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    M=st.integers(0, 6),
    log_sa=st.floats(-1.0, 2.0),
)
def test_quadratic_form_equals_direct(seed, M, log_sa):
    rng = np.random.default_rng(seed)
    n = rng.integers(M + 1, M + 12)
    x = np.sort(rng.uniform(-1, 1, n))
    ds = build_design(_ds(x, rng.normal(0, 2, n), rng.uniform(0.05, 0.5, n)), M)
    if ds.singular:
        return
    lp = lec_posterior(ds, 10**log_sa)
    assert abs(lp.chi2_aug_min - lp.chi2_aug_min_quadratic) <= 1e-8 * (1 + lp.chi2_aug_min)
    np.linalg.cholesky(lp.cov)
