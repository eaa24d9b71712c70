import math

import numpy as np
import pytest
from scipy import stats as sps

from idacf.samplers import (RngStream, darling_kac_limit, mittag_leffler, ml_moment, poisson_arrivals,
                            positive_stable, positive_stable_W, rademacher, sas_cms, v_beta)
from idacf.stats import stable_tail_constant


def gen(seed=0):
    return RngStream(1234, seed).generator()


def test_stream_reproducible_and_distinct():
    a = RngStream(7, 3).generator().random(5)
    b = RngStream(7, 3).generator().random(5)
    c = RngStream(7, 4).generator().random(5)
    d = RngStream(7, 3).child(1).generator().random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    assert np.array_equal(d, RngStream(7, 3, (1,)).generator().random(5))


@pytest.mark.parametrize("sampler", [
    lambda g: sas_cms(g, 1.5, 2.0, 10), lambda g: positive_stable_W(g, 1.2, 10),
    lambda g: mittag_leffler(g, 0.4, 10), lambda g: v_beta(g, 0.3, 10),
    lambda g: poisson_arrivals(g, 10), lambda g: rademacher(g, 10), lambda g: darling_kac_limit(g, 0.5, 10)])
def test_every_sampler_bitwise_reproducible(sampler):
    assert np.array_equal(sampler(RngStream(5, 9).generator()), sampler(RngStream(5, 9).generator()))


def test_poisson_arrivals():
    g = gen()
    gam = poisson_arrivals(g, 10 ** 6)
    assert np.all(np.diff(gam) > 0) and gam[0] > 0
    assert 0.995 <= np.diff(gam).mean() <= 1.005
    k = 10 ** 5
    assert abs(gam[k - 1] / k - 1) <= 0.02
    shifted = poisson_arrivals(gen(1), 5, start=10.0)
    assert shifted[0] > 10.0
    with pytest.raises(ValueError):
        poisson_arrivals(g, 0)


def test_rademacher():
    x = rademacher(gen(), 10 ** 6)
    assert set(np.unique(x)) == {-1.0, 1.0}
    assert abs(x.mean()) <= 0.004
    assert abs(np.corrcoef(x[:-1], x[1:])[0, 1]) <= 0.004


def test_sas_cauchy_median_and_symmetry():
    x = sas_cms(gen(), 1.0, 1.0, 10 ** 6)
    assert np.median(np.abs(x)) == pytest.approx(1.0, rel=0.02)
    assert abs(np.sign(x).mean()) <= 0.004


def test_sas_tail_constant():
    alpha, sigma = 1.5, 1.0
    x = np.abs(sas_cms(gen(2), alpha, sigma, 10 ** 6))
    lam = np.quantile(x, 0.999)
    ratio = np.mean(x > lam) * lam ** alpha / (stable_tail_constant(alpha) * sigma ** alpha)
    assert ratio == pytest.approx(1.0, rel=0.1)


@pytest.mark.parametrize("alpha", [0.7, 1.3, 1.5])
def test_sas_against_scipy_levy_stable(alpha):
    # scipy's S1 parametrization with beta=0 has characteristic function exp(-|t|^alpha)
    x = sas_cms(gen(3), alpha, 1.0, 20_000)
    assert sps.kstest(x, sps.levy_stable(alpha, 0.0).cdf).pvalue > 1e-3


def test_sas_domain():
    with pytest.raises(ValueError):
        sas_cms(gen(), 2.0)
    with pytest.raises(ValueError):
        sas_cms(gen(), 0.0)


def test_positive_stable_laplace_index():
    g = gen(4)
    for index in (0.3, 0.75):
        s = positive_stable(g, index, 10 ** 6)
        for theta in (0.5, 1.0, 2.0):
            assert np.mean(np.exp(-theta * s)) == pytest.approx(math.exp(-theta ** index), abs=0.005)


def test_W_laplace_example_and_positivity():
    w = positive_stable_W(gen(5), 1.5, 10 ** 6)
    assert np.all(w > 0)
    assert abs(np.mean(np.exp(-w)) - math.exp(-1 / math.cos(3 * math.pi / 8))) <= 0.01


def test_W_levy_measure_matches_laplace_closed_form():
    # int (1 - e^{-theta x}) rho*(dx) with rho*(dx) = (alpha/2) C_{alpha/2} x^{-1-alpha/2} dx
    from scipy import integrate
    for alpha in (0.8, 1.5):
        g = alpha / 2
        dens = lambda x: g * stable_tail_constant(g) * x ** (-1 - g)
        for theta in (0.5, 2.0):
            val = sum(integrate.quad(lambda x: (1 - math.exp(-theta * x)) * dens(x), a, b, limit=200)[0]
                      for a, b in ((0, 1), (1, np.inf)))
            assert val == pytest.approx(theta ** g / math.cos(math.pi * alpha / 4), rel=1e-7)


def test_W_infinite_mean_grows():
    w = positive_stable_W(gen(6), 1.0, 10 ** 6)
    means = [w[:k].mean() for k in (10 ** 4, 10 ** 5, 10 ** 6)]
    assert means[0] < means[1] < means[2]


def test_mittag_leffler_examples():
    g = gen(7)
    assert mittag_leffler(g, 0.5, 10 ** 6).mean() == pytest.approx(2 / math.sqrt(math.pi), rel=0.01)
    assert np.all(mittag_leffler(g, 1.0, 10) == 1.0)
    assert mittag_leffler(g, 0.0, 10 ** 6).mean() == pytest.approx(1.0, rel=0.01)
    with pytest.raises(ValueError):
        mittag_leffler(g, 1.5)


def test_v_beta():
    g = gen(8)
    u = v_beta(g, 0.0, 10 ** 6)
    assert sps.kstest(u, "uniform").statistic <= 0.002
    v = v_beta(g, 0.5, 10 ** 6)
    assert v.mean() == pytest.approx(1 / 3, rel=0.01)
    assert np.all((v > 0) & (v <= 1))
    with pytest.raises(ValueError):
        v_beta(g, 1.0)


def test_ml_moment_examples():
    assert ml_moment(0.5, 1) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-14)
    assert ml_moment(0.5, 2) == pytest.approx(4 / 3, rel=1e-14)
    for beta in (0.0, 0.3, 0.5, 0.9):
        for r in (1, 2, 3, 4):
            expected = math.factorial(r) * math.gamma(2 - beta) / math.gamma(r * beta + 2 - beta)
            assert ml_moment(beta, r) == pytest.approx(expected, rel=1e-12)


def test_ml_moment_fractional_mc():
    g = gen(9)
    beta, s = 0.5, 0.75
    x = (1 - v_beta(g, beta, 2 * 10 ** 6)) ** (s * beta) * mittag_leffler(g, beta, 2 * 10 ** 6) ** s
    assert x.mean() == pytest.approx(ml_moment(beta, s), rel=0.01)


def test_darling_kac_limit_moments():
    x = darling_kac_limit(gen(10), 0.5, 10 ** 6)
    assert x.mean() == pytest.approx(math.pi / 4, rel=0.01)
    assert (x ** 2).mean() == pytest.approx(math.pi / 3, rel=0.02)
