"""Truncated Poisson series simulation of X_n = int f o T^n dM over the Markov shift.

With f = 1_A and V_i drawn from mu restricted to {phi <= m} (constant density
q = 1 / mu(phi <= m) against mu),

    X_n = sum_i eps_i U^<-(Gamma_i q / 2) 1{(V_i)_n = 0},   n = 1..m.

Terms are drawn in fixed-size blocks, each from its own child stream, so a
run with more terms replays the first terms of a shorter run exactly.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .levy import LevyTail
from .markov import LazyWalkChain, ReturnTable, VisitSampler, return_probs
from .samplers import RngStream, rademacher
from .stats import ks_two_sample


@dataclass(frozen=True)
class SeriesConfig:
    N: int
    H: int
    levy: LevyTail
    chain: LazyWalkChain
    i_max: int = 10_000
    block: int = 5000
    master_seed: int = 0

    def __post_init__(self):
        if self.N < 1 or self.H < 0:
            raise ConfigurationError("need N >= 1 and H >= 0")
        if self.i_max < 1000:
            raise ConfigurationError(f"i_max must be at least 1000, got {self.i_max}")
        if self.block < 1:
            raise ConfigurationError("block must be positive")
        if self.m > self.chain.band:
            raise ConfigurationError(f"m = N + H = {self.m} exceeds chain band {self.chain.band}")

    @property
    def m(self) -> int:
        return self.N + self.H

    def stream(self, stream_id: int) -> RngStream:
        return RngStream(self.master_seed, stream_id)


@dataclass(frozen=True)
class Flow:
    """Read-only flow data shared by every path of a given depth m."""

    table: ReturnTable
    sampler: VisitSampler

    @property
    def q(self) -> float:
        return 1.0 / self.sampler.mass


@functools.lru_cache(maxsize=16)
def flow_for(chain: LazyWalkChain, m: int) -> Flow:
    table = return_probs(chain, m)
    return Flow(table, VisitSampler(table, m))


@dataclass
class PathSample:
    X: np.ndarray  # X[0] is X_1
    terms_used: int
    truncation_flag: bool = False


@dataclass
class SeriesDraw:
    coef: np.ndarray  # eps_i * U^<-(Gamma_i q / 2)
    term: np.ndarray  # one entry per zero visit
    time: np.ndarray


def draw_series(cfg: SeriesConfig, stream: RngStream, n_terms: int | None = None,
                flow: Flow | None = None) -> SeriesDraw:
    n_terms = cfg.i_max if n_terms is None else int(n_terms)
    flow = flow_for(cfg.chain, cfg.m) if flow is None else flow
    n_blocks = -(-n_terms // cfg.block)
    coefs, terms, times = [], [], []
    gamma_end = 0.0
    for b in range(n_blocks):
        g = stream.child(b).generator()
        gam = gamma_end + np.cumsum(g.standard_exponential(cfg.block))
        gamma_end = gam[-1]
        eps = rademacher(g, cfg.block)
        term, time = flow.sampler.sample(g, cfg.block)
        coefs.append(eps * cfg.levy.inverse_tail(gam * (flow.q / 2.0)))
        terms.append(term.astype(np.int64) + b * cfg.block)
        times.append(time)
    coef = np.concatenate(coefs)[:n_terms]
    term = np.concatenate(terms)
    time = np.concatenate(times)
    keep = term < n_terms
    return SeriesDraw(coef, term[keep], time[keep])


def _assemble(draw: SeriesDraw, m: int) -> np.ndarray:
    return np.bincount(draw.time, weights=draw.coef[draw.term], minlength=m + 1)[1:]


def simulate_path(cfg: SeriesConfig, stream: RngStream, flow: Flow | None = None) -> PathSample:
    """One draw of (X_1, ..., X_{N+H})."""
    draw = draw_series(cfg, stream, flow=flow)
    # every V_i visits 0 somewhere in 1..m by construction of the restricted measure
    n_hit = int(np.count_nonzero(np.diff(draw.term))) + 1 if draw.term.size else 0
    assert n_hit == cfg.i_max, "a series term never visited A"
    return PathSample(_assemble(draw, cfg.m), cfg.i_max)


def simulate_paths(cfg: SeriesConfig, stream: RngStream, count: int, flow: Flow | None = None) -> np.ndarray:
    """``count`` independent paths, path p on ``stream.child(p)``; shape (count, N + H)."""
    flow = flow_for(cfg.chain, cfg.m) if flow is None else flow
    out = np.empty((count, cfg.m))
    for p in range(count):
        out[p] = _assemble(draw_series(cfg, stream.child(p), flow=flow), cfg.m)
    return out


@dataclass
class QuadraticParts:
    diagonal: float
    off_diagonal: float
    total: float  # sum_{k=1}^N X_k X_{k+h}
    X: np.ndarray


def pair_counts(term: np.ndarray, time: np.ndarray, n_terms: int, m: int, N: int, h: int) -> np.ndarray:
    """Per term i: #{1 <= k <= N : (V_i)_k = 0 and (V_i)_{k+h} = 0}."""
    keys = term.astype(np.int64) * (m + 1) + time
    sel = time <= N
    target = keys[sel] + h
    pos = np.minimum(np.searchsorted(keys, target), keys.size - 1)
    found = keys[pos] == target
    return np.bincount(term[sel][found], minlength=n_terms)


def simulate_quadratic_parts(cfg: SeriesConfig, stream: RngStream, h: int,
                             flow: Flow | None = None) -> QuadraticParts:
    """Split sum_k X_k X_{k+h} into its diagonal (i = j) and off-diagonal (i != j) series parts."""
    if not 0 <= h <= cfg.H:
        raise ValueError(f"lag {h} outside 0..{cfg.H}")
    draw = draw_series(cfg, stream, flow=flow)
    X = _assemble(draw, cfg.m)
    total = float(np.dot(X[:cfg.N], X[h:h + cfg.N]))
    diag = float(np.dot(draw.coef ** 2, pair_counts(draw.term, draw.time, cfg.i_max, cfg.m, cfg.N, h)))
    return QuadraticParts(diag, total - diag, total, X)


def truncation_diagnostic(cfg: SeriesConfig, stream: RngStream, paths: int = 10_000,
                          threshold: float = 0.01, flow: Flow | None = None) -> dict:
    """KS distance between X_1 laws at i_max and 2 i_max terms on coupled draws."""
    flow = flow_for(cfg.chain, cfg.m) if flow is None else flow
    short = np.empty(paths)
    full = np.empty(paths)
    for p in range(paths):
        draw = draw_series(cfg, stream.child(p), 2 * cfg.i_max, flow)
        at1 = draw.time == 1
        contrib = draw.coef[draw.term[at1]]
        full[p] = contrib.sum()
        short[p] = contrib[draw.term[at1] < cfg.i_max].sum()
    ks = ks_two_sample(short, full)
    return {"ks": ks, "threshold": threshold, "paths": paths, "i_max": cfg.i_max,
            "flagged": bool(ks > threshold)}
