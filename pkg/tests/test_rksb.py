import math

import numpy as np
import pytest

from hodeinfer.models import make_linear_null, make_van_der_pol
from hodeinfer.rksb import (
    PosteriorDraws,
    RksbConfig,
    equal_tailed_interval,
    log_approx_likelihood,
    run_rksb,
    sigma2_conditional,
)
from hodeinfer.simulation import SimConfig, generate_dataset

VDP = make_van_der_pol()
NULL = make_linear_null(2, [0.5, -1.0])


def sort_quantile(draws, p):
    """Type-7 quantile from the sorted sample."""
    s = np.sort(draws)
    h = (s.size - 1) * p
    lo = math.floor(h)
    return s[lo] + (h - lo) * (s[min(lo + 1, s.size - 1)] - s[lo])


def test_loglik_zero_residuals():
    x = np.array([0.1, 0.4, 0.6, 0.9])
    y = NULL.exact_solution(x)
    v = log_approx_likelihood(NULL, x, y, [1.0], 1.0, 10)
    assert v == pytest.approx(-2 * math.log(2 * math.pi), abs=1e-12)
    v2 = log_approx_likelihood(NULL, x, y, [1.0], 2.0, 10)
    assert v - v2 == pytest.approx(2 * math.log(2), abs=1e-12)


def test_loglik_against_scipy():
    from scipy.stats import norm
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, 30)
    y = NULL.exact_solution(x) + 0.3 * rng.standard_normal(30)
    ours = log_approx_likelihood(NULL, x, y, [1.0], 0.09, 20)
    ref = norm.logpdf(y, loc=0.5 - x, scale=0.3).sum()
    assert ours == pytest.approx(ref, rel=1e-12)


def test_loglik_rejects_bad_sigma2():
    with pytest.raises(ValueError):
        log_approx_likelihood(NULL, [0.5], [0.0], [1.0], 0.0, 10)


def test_sigma2_conditional_zero_residuals():
    assert sigma2_conditional(40, 0.0, 99.0, 1.0) == (119.0, 1.0)
    assert sigma2_conditional(40, 3.0, 2.0, 1.0) == (22.0, 2.5)


def test_interval_degenerate():
    assert equal_tailed_interval(np.full(50, 2.5)) == (2.5, 2.5)


def test_interval_sort_oracle():
    d = np.arange(1.0, 1001.0)
    lo, hi = equal_tailed_interval(d, 0.95)
    assert lo == pytest.approx(sort_quantile(d, 0.025), abs=1e-12)
    assert hi == pytest.approx(sort_quantile(d, 0.975), abs=1e-12)
    rng = np.random.default_rng(1)
    for _ in range(20):
        d = rng.standard_normal(rng.integers(2, 500))
        lvl = rng.uniform(0.05, 0.99)
        lo, hi = equal_tailed_interval(d, lvl)
        assert lo == pytest.approx(sort_quantile(d, (1 - lvl) / 2), abs=1e-12)
        assert hi == pytest.approx(sort_quantile(d, 1 - (1 - lvl) / 2), abs=1e-12)


def test_interval_symmetric():
    rng = np.random.default_rng(2)
    half = rng.standard_normal(500)
    d = np.concatenate([half, -half]) + 3.0
    lo, hi = equal_tailed_interval(d, 0.5)
    med = np.median(d)
    assert abs((med - lo) - (hi - med)) < 1e-12


def test_interval_validation():
    with pytest.raises(ValueError):
        equal_tailed_interval([])
    with pytest.raises(ValueError):
        equal_tailed_interval([1.0])
    with pytest.raises(ValueError):
        equal_tailed_interval([1.0, 2.0], 1.0)


def test_posterior_draws_container(tmp_path):
    pd = PosteriorDraws(np.arange(6.0).reshape(3, 2), np.ones(3), "RKSB", 0.4)
    assert pd.n_draws == 3
    pd.to_csv(tmp_path / "d.csv")
    back = np.genfromtxt(tmp_path / "d.csv", delimiter=",", names=True)
    assert back.dtype.names == ("theta_1", "theta_2", "sigma2")
    with pytest.raises(ValueError):
        PosteriorDraws(np.zeros((2, 1)), None, "MLE")


def test_config_validation():
    with pytest.raises(ValueError):
        RksbConfig(chain_length=100, burn_in=100)
    with pytest.raises(ValueError):
        RksbConfig(proposal_sd=(0.0,))
    with pytest.raises(ValueError):
        RksbConfig(ig_a=0.0)


@pytest.fixture(scope="module")
def vdp_chain(vdp_data_100):
    x, y = vdp_data_100
    return run_rksb(VDP, x, y, RksbConfig(), np.random.default_rng(11))


def test_vdp_posterior_covers_truth(vdp_chain):
    th = vdp_chain.theta_draws[:, 0]
    assert abs(th.mean() - 1.0) < 3 * th.std()
    assert vdp_chain.n_draws == 2000
    assert np.all((th >= 0.1) & (th <= 10))
    assert 0.1 < vdp_chain.acceptance_rate < 0.7
    assert np.all(vdp_chain.sigma2_draws > 0)
    lo, hi = vdp_chain.interval(0.95)
    assert 0.15 < hi - lo < 0.6


def test_sigma2_posterior_near_truth(vdp_chain):
    # data noise sd 0.1 with IG(99, 1) prior pulling toward 1/98
    assert 0.006 < np.median(vdp_chain.sigma2_draws) < 0.014


def test_chain_reproducible(vdp_data_100):
    x, y = vdp_data_100
    cfg = RksbConfig(chain_length=300, burn_in=100)
    a = run_rksb(VDP, x, y, cfg, np.random.default_rng(5))
    b = run_rksb(VDP, x, y, cfg, np.random.default_rng(5))
    assert np.array_equal(a.theta_draws, b.theta_draws)
    assert np.array_equal(a.sigma2_draws, b.sigma2_draws)


def test_mixing_failure_is_flagged(vdp_data_100):
    x, y = vdp_data_100
    cfg = RksbConfig(chain_length=60, burn_in=10, proposal_sd=(1e6,), adapt=False)
    with pytest.warns(RuntimeWarning, match="did not mix"):
        out = run_rksb(VDP, x, y, cfg, np.random.default_rng(0))
    assert out.acceptance_rate == 0.0
    assert "mixing_failure" in out.diagnostics


def test_contraction_when_doubling_n(capsys):
    lengths = {}
    for n in (100, 200):
        cfg = SimConfig(n=n, replications=1, seed=7)
        ls = []
        for idx in range(10):
            x, y, _ = generate_dataset(cfg, idx)
            d = run_rksb(VDP, x, y, RksbConfig(chain_length=2000, burn_in=500),
                         np.random.default_rng(idx))
            lo, hi = d.interval()
            ls.append(hi - lo)
        lengths[n] = np.mean(ls)
    ratio = lengths[100] / lengths[200]
    with capsys.disabled():
        print(f"\nRKSB length ratio n=100/n=200: {ratio:.3f}")
    assert 1.2 <= ratio <= 1.7
