import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from idacf.errors import ConfigurationError
from idacf.levy import LevyTail
from idacf.markov import LazyWalkChain
from idacf.samplers import RngStream, sas_cms
from idacf.series import (SeriesConfig, draw_series, flow_for, pair_counts, simulate_path, simulate_paths,
                          simulate_quadratic_parts, truncation_diagnostic)
from idacf.stats import acf, ks_two_sample, stable_tail_constant


def cfg(N=16, H=0, alpha=1.5, i_max=1000, block=400, seed=0):
    return SeriesConfig(N, H, LevyTail(alpha), LazyWalkChain(band=N + H), i_max, block, seed)


def test_config_errors():
    with pytest.raises(ConfigurationError):
        cfg(i_max=999)
    with pytest.raises(ConfigurationError):
        SeriesConfig(16, 4, LevyTail(1.5), LazyWalkChain(band=19))
    with pytest.raises(ConfigurationError):
        SeriesConfig(0, 0, LevyTail(1.5), LazyWalkChain(band=16))
    c = cfg()
    assert c.m == 16 and 0 < flow_for(c.chain, c.m).q < 1


def test_path_basic_invariants():
    c = cfg(N=50, H=3)
    p = simulate_path(c, RngStream(1, 0))
    assert p.X.shape == (53,) and np.all(np.isfinite(p.X))
    assert p.terms_used == c.i_max and not p.truncation_flag


def test_bitwise_determinism():
    c = cfg(N=40, H=2)
    a = simulate_path(c, RngStream(9, 3)).X
    b = simulate_path(c, RngStream(9, 3)).X
    assert np.array_equal(a, b)
    assert not np.array_equal(a, simulate_path(c, RngStream(9, 4)).X)


def test_term_magnitudes_decreasing():
    d = draw_series(cfg(i_max=2000), RngStream(2, 0))
    assert np.all(np.diff(np.abs(d.coef)) < 0)
    assert d.coef.size == 2000


def test_every_term_visits_A():
    d = draw_series(cfg(N=30, H=5, i_max=3000), RngStream(2, 1))
    assert np.array_equal(np.unique(d.term), np.arange(3000))
    assert d.time.min() >= 1 and d.time.max() <= 35


def test_coupled_draws_identical_on_shared_indices():
    c = cfg(N=20, i_max=1000, block=300)
    short = draw_series(c, RngStream(4, 0))
    long = draw_series(c, RngStream(4, 0), n_terms=2000)
    assert np.array_equal(long.coef[:1000], short.coef)
    keep = long.term < 1000
    assert np.array_equal(long.term[keep], short.term)
    assert np.array_equal(long.time[keep], short.time)


def test_assembly_against_direct_sum():
    c = cfg(N=12, H=2, i_max=1000)
    d = draw_series(c, RngStream(5, 0))
    X = simulate_path(c, RngStream(5, 0)).X
    direct = np.zeros(c.m)
    for i, t in zip(d.term, d.time):
        direct[t - 1] += d.coef[i]
    np.testing.assert_allclose(X, direct, rtol=1e-12, atol=1e-12)


def _brute_quadratic(d, N, h, n_terms, m):
    """Y' and Y'' straight from the definitions, O(I^2)."""
    ind = np.zeros((n_terms, m + 1))
    ind[d.term, d.time] = 1.0
    f0 = ind[:, 1:N + 1]
    fh = ind[:, 1 + h:N + 1 + h]
    M = f0 @ fh.T  # M[i, j] = sum_k f_k(V_i) f_{k+h}(V_j)
    outer = np.outer(d.coef, d.coef) * M
    diag = float(np.trace(outer))
    return diag, float(outer.sum() - diag)


@pytest.mark.parametrize("h", [0, 1, 3])
def test_quadratic_parts_against_brute_force(h):
    c = cfg(N=10, H=3, i_max=1000)
    q = simulate_quadratic_parts(c, RngStream(6, h), h)
    d = draw_series(c, RngStream(6, h))
    diag, off = _brute_quadratic(d, c.N, h, c.i_max, c.m)
    assert q.diagonal == pytest.approx(diag, rel=1e-10)
    assert q.off_diagonal == pytest.approx(off, rel=1e-8, abs=1e-8 * abs(diag))


@settings(max_examples=20)
@given(st.integers(1, 40), st.integers(0, 4), st.integers(0, 10 ** 6))
def test_quadratic_reconstruction(N, H, seed):
    c = cfg(N=N, H=H, i_max=1000)
    for h in range(H + 1):
        q = simulate_quadratic_parts(c, RngStream(seed, h), h)
        assert abs(q.diagonal + q.off_diagonal - q.total) <= 1e-9 * (abs(q.diagonal) + abs(q.off_diagonal))
        assert q.total == pytest.approx(c.N * acf(q.X, c.N, H).gamma[h], rel=1e-12, abs=1e-12)
        if h == 0:
            assert q.diagonal >= 0


def test_pair_counts_h0_is_occupation():
    d = draw_series(cfg(N=20, H=4), RngStream(7, 0))
    pc = pair_counts(d.term, d.time, 1000, 24, 20, 0)
    np.testing.assert_array_equal(pc, np.bincount(d.term[d.time <= 20], minlength=1000))


def test_quadratic_lag_range():
    with pytest.raises(ValueError):
        simulate_quadratic_parts(cfg(N=10, H=1), RngStream(0, 0), 2)


def test_off_diagonal_ratio_decreases():
    ratios = []
    for N in (2 ** 10, 2 ** 12, 2 ** 14):
        c = SeriesConfig(N, 0, LevyTail(1.5), LazyWalkChain(band=N), 10_000)
        vals = [simulate_quadratic_parts(c, RngStream(8, r).child(N), 0) for r in range(200)]
        ratios.append(np.median([abs(v.off_diagonal) / v.diagonal for v in vals]))
    assert ratios[0] > ratios[1] > ratios[2]


@pytest.fixture(scope="module")
def marginal_paths():
    c = SeriesConfig(16, 0, LevyTail(1.5), LazyWalkChain(band=16), 10_000)
    return simulate_paths(c, RngStream(11, 0), 20_000)


def test_marginal_sas(marginal_paths):
    sigma = (2 / stable_tail_constant(1.5)) ** (1 / 1.5)
    ref = sas_cms(RngStream(11, 1).generator(), 1.5, sigma, 10 ** 5)
    # 2e4 paths here; the full 1e5-path check lives in the acceptance suite
    assert ks_two_sample(marginal_paths[:, 0], ref) <= 0.02


def test_marginal_symmetry_and_stationarity(marginal_paths):
    n = marginal_paths.shape[0]
    assert abs(np.sign(marginal_paths[:, 0]).mean()) <= 4 / np.sqrt(n)
    assert ks_two_sample(marginal_paths[:, 0], marginal_paths[:, 9]) <= 0.02


def test_truncation_diagnostic_small():
    c = SeriesConfig(16, 0, LevyTail(0.8), LazyWalkChain(band=16), 10_000)
    rep = truncation_diagnostic(c, RngStream(12, 0), paths=1000)
    assert rep["ks"] <= 0.01 and not rep["flagged"]
