"""Sample autocovariances, the normalizing sequence c_n, and small estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats as _sps

from .levy import LevyTail
from .markov import ReturnTable, VisitSampler, a_n, wandering_rate
from .samplers import ml_moment


@dataclass
class AcfEstimate:
    n: int
    gamma: np.ndarray
    rho: np.ndarray
    flagged: bool = False


def acf(x, n: int, H: int) -> AcfEstimate:
    """Uncentered sample autocovariance (1/n) sum_{k=1}^n X_k X_{k+h}, h = 0..H.

    ``x[0]`` holds X_1.  ``rho`` is NaN and ``flagged`` set when gamma[0] = 0.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] < n + H:
        raise ValueError(f"need at least n + H = {n + H} observations, got {x.shape[0]}")
    head = x[:n]
    gamma = np.array([np.dot(head, x[h:h + n]) for h in range(H + 1)]) / n
    if gamma[0] > 0:
        return AcfEstimate(n, gamma, gamma / gamma[0])
    return AcfEstimate(n, gamma, np.full(H + 1, np.nan), flagged=True)


def stable_tail_constant(q: float) -> float:
    """C_q = (1 - q) / (Gamma(2 - q) cos(pi q / 2)), so P(|X| > x) ~ C_q sigma^q x^-q."""
    if not 0.0 < q < 2.0 or q == 1.0:
        raise ValueError(f"tail constant implemented for q in (0,1) U (1,2), got {q}")
    return (1.0 - q) / (math.gamma(2.0 - q) * math.cos(math.pi * q / 2.0))


def stable_tail_constant_quad(q: float) -> float:
    """Quadrature oracle: (int_0^inf x^-q sin x dx)^-1, valid for 0 < q < 1."""
    if not 0.0 < q < 1.0:
        raise ValueError("quadrature form converges only for 0 < q < 1")
    head, _ = integrate.quad(lambda x: x ** (-q) * math.sin(x), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    tail, _ = integrate.quad(lambda x: x ** (-q), 1.0, np.inf, weight="sin", wvar=1.0, epsabs=1e-12)
    return 1.0 / (head + tail)


def c_alpha_beta(alpha: float, beta: float) -> float:
    """Gamma(1 + beta) * (E M_beta(1 - V_beta)^(alpha/2))^(2/alpha)."""
    return math.gamma(1.0 + beta) * ml_moment(beta, alpha / 2.0) ** (2.0 / alpha)


def c_n(alpha: float, beta: float, an, wn, levy: LevyTail):
    """c_n = 2^(2/a) C_{a,b} C_{a/2}^(-2/a) a_n (U^<-(1/w_n))^2; vectorized over (a_n, w_n)."""
    const = 2.0 ** (2.0 / alpha) * c_alpha_beta(alpha, beta) * stable_tail_constant(alpha / 2.0) ** (-2.0 / alpha)
    an = np.asarray(an, dtype=float)
    wn = np.asarray(wn, dtype=float)
    out = const * an * np.asarray(levy.inverse_tail(1.0 / wn)) ** 2
    return float(out) if out.ndim == 0 else out


def cn_index(alpha: float, beta: float) -> float:
    """Regular variation index of c_n."""
    return beta + 2.0 * (1.0 - beta) / alpha


@dataclass
class CnSchedule:
    alpha: float
    beta: float
    n: np.ndarray
    a: np.ndarray
    w: np.ndarray
    c: np.ndarray
    c_ab: float
    c_half: float

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.n, self.a, self.w, self.c]), delimiter=",",
                   header="n,a_n,w_n,c_n", comments="", fmt=["%d", "%.17g", "%.17g", "%.17g"])


def cn_schedule(table: ReturnTable, levy: LevyTail, n_grid, beta: float | None = None) -> CnSchedule:
    beta = table.chain.beta if beta is None else beta
    n = np.asarray(list(n_grid), dtype=int)
    a = np.array([a_n(table, int(k)) for k in n])
    w = np.array([wandering_rate(table, int(k)) for k in n])
    c = np.atleast_1d(c_n(levy.alpha, beta, a, w, levy))
    return CnSchedule(levy.alpha, beta, n, a, w, c, c_alpha_beta(levy.alpha, beta),
                      stable_tail_constant(levy.alpha / 2.0))


def rv_index(n, values) -> tuple[float, float]:
    """Least-squares slope of log(values) on log(n), with its standard error."""
    n = np.asarray(n, dtype=float)
    values = np.asarray(values, dtype=float)
    if n.shape[0] < 4:
        raise ValueError("need at least 4 grid points")
    if np.any(values <= 0) or np.any(n <= 0):
        raise ValueError("rv_index needs positive values")
    fit = _sps.linregress(np.log(n), np.log(values))
    return float(fit.slope), float(fit.stderr)


def ks_two_sample(a, b) -> float:
    """Sup distance between the empirical CDFs of ``a`` and ``b``."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_two_sample needs nonempty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


# ---------------------------------------------------------------------------
# asymptotic ratio checks on the Markov flow


def occupation_power_integral(sampler: VisitSampler, rng: np.random.Generator, p: float,
                              count: int, n: int | None = None) -> tuple[float, float]:
    """Estimate int |S_n(1_A)|^p dmu = mu(phi <= n) E_{mu_n} S_n^p by sampling mu_n.

    Returns (estimate, standard error).  ``sampler.m`` must equal n.
    """
    n = sampler.m if n is None else n
    if n != sampler.m:
        raise ValueError("sampler depth must equal n")
    s = sampler.counts(rng, count).astype(float) ** p
    return sampler.mass * s.mean(), sampler.mass * s.std(ddof=1) / math.sqrt(count)


def growth_ratio(table: ReturnTable, sampler: VisitSampler, alpha: float, rng: np.random.Generator,
                 count: int, beta: float | None = None) -> float:
    """(int |S_n(f^2)|^(a/2) dmu)^(2/a) / (mu(f^2) C_{a,b} a_n w_n^(2/a)) with f = 1_A; tends to 1."""
    beta = table.chain.beta if beta is None else beta
    n = sampler.m
    integral, _ = occupation_power_integral(sampler, rng, alpha / 2.0, count)
    denom = c_alpha_beta(alpha, beta) * a_n(table, n) * wandering_rate(table, n) ** (2.0 / alpha)
    return integral ** (2.0 / alpha) / denom


def cn_tail_ratio(table: ReturnTable, sampler: VisitSampler, levy: LevyTail, rng: np.random.Generator,
                  count: int, beta: float | None = None) -> float:
    """rho_a((c_n / a_n)^(1/2), inf) / [C_{a/2} (mu(f^2) a_n)^(a/2) / (2 int |S_n|^(a/2) dmu)]; tends to 1."""
    beta = table.chain.beta if beta is None else beta
    alpha = levy.alpha
    n = sampler.m
    an, wn = a_n(table, n), wandering_rate(table, n)
    cn = c_n(alpha, beta, an, wn, levy)
    integral, _ = occupation_power_integral(sampler, rng, alpha / 2.0, count)
    rhs = 0.5 * stable_tail_constant(alpha / 2.0) * an ** (alpha / 2.0) / integral
    return levy.tail(math.sqrt(cn / an)) / rhs
