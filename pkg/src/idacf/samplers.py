"""Random variates for every law the simulation touches.

All samplers take a ``numpy.random.Generator``; :class:`RngStream` is the
reproducible factory that hands one out per (master_seed, stream_id, keys).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """Named random stream.

    Equal ``(master_seed, stream_id, path)`` give bitwise identical generators;
    distinct ones are independent via ``SeedSequence`` spawn keys.
    """

    master_seed: int
    stream_id: int
    path: tuple[int, ...] = ()

    def child(self, *keys: int) -> "RngStream":
        return RngStream(self.master_seed, self.stream_id, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.PCG64(ss))


def poisson_arrivals(rng: np.random.Generator, count: int, start: float = 0.0) -> np.ndarray:
    """First ``count`` arrival times of a unit-rate Poisson process after ``start``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    return start + np.cumsum(rng.standard_exponential(count))


def rademacher(rng: np.random.Generator, size=None):
    signs = 2.0 * rng.integers(0, 2, size=size) - 1.0
    return signs


def sas_cms(rng: np.random.Generator, alpha: float, sigma: float = 1.0, size=None):
    """Symmetric alpha-stable draws, E exp(itX) = exp(-|sigma t|**alpha).

    Chambers-Mallows-Stuck construction from a uniform angle and a unit
    exponential.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    u = rng.uniform(-np.pi / 2, np.pi / 2, size=size)
    if alpha == 1.0:
        return sigma * np.tan(u)
    e = rng.standard_exponential(size=size)
    x = (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)
         * (np.cos((1.0 - alpha) * u) / e) ** ((1.0 - alpha) / alpha))
    return sigma * x


def positive_stable(rng: np.random.Generator, index: float, size=None):
    """Positive stable draws with Laplace transform exp(-theta**index), 0 < index < 1.

    Uses the one-sided Chambers-Mallows-Stuck (Kanter) form.
    """
    if not 0.0 < index < 1.0:
        raise ValueError(f"index must lie in (0, 1), got {index}")
    u = rng.uniform(0.0, np.pi, size=size)
    e = rng.standard_exponential(size=size)
    return (np.sin(index * u) / np.sin(u) ** (1.0 / index)
            * (np.sin((1.0 - index) * u) / e) ** ((1.0 - index) / index))


def positive_stable_W(rng: np.random.Generator, alpha: float, size=None):
    """Draws of the limit W: positive alpha/2-stable, E exp(-tW) = exp(-t**(alpha/2) / cos(pi alpha / 4))."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    gamma = alpha / 2.0
    scale = (1.0 / math.cos(math.pi * alpha / 4.0)) ** (1.0 / gamma)
    return scale * positive_stable(rng, gamma, size=size)


def mittag_leffler(rng: np.random.Generator, beta: float, size=None):
    """Draws of M_beta(1), the inverse beta-stable subordinator at time one.

    ``beta = 0`` gives a unit exponential and ``beta = 1`` the constant 1.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if beta == 0.0:
        return rng.standard_exponential(size=size)
    if beta == 1.0:
        return np.ones(size) if size is not None else 1.0
    # M(1) = inf{u : S(u) >= 1} and S(u) = u**(1/beta) S(1) in law.
    return positive_stable(rng, beta, size=size) ** (-beta)


def v_beta(rng: np.random.Generator, beta: float, size=None):
    """Draws with density (1 - beta) x**(-beta) on (0, 1]."""
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    u = 1.0 - rng.random(size=size)  # (0, 1]
    return u ** (1.0 / (1.0 - beta))


def ml_moment(beta: float, s: float) -> float:
    """E[M_beta(1 - V_beta)**s] = Gamma(2-beta) Gamma(1+s) / Gamma(s beta + 2 - beta)."""
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    if not s > 0:
        raise ValueError("s must be positive")
    return math.gamma(2.0 - beta) * math.gamma(1.0 + s) / math.gamma(s * beta + 2.0 - beta)


def darling_kac_limit(rng: np.random.Generator, beta: float, size=None, mass: float = 1.0):
    """Draws of mass * Gamma(1+beta) * M_beta(1 - V_beta)."""
    v = v_beta(rng, beta, size=size)
    m = mittag_leffler(rng, beta, size=size)
    return mass * math.gamma(1.0 + beta) * (1.0 - v) ** beta * m
