"""Null-recurrent Markov shift built on the lazy simple random walk on Z.

The shift map on Z^N with control measure mu = sum_i pi_i P_i (pi_i = 1) and
the set A = {x_0 = 0}.  Everything the limit theory needs (return
probabilities, first-return law, a_n, w_n, entrance-time identities) is
computed exactly, either by banded dynamic programming or, for long horizons,
by the holonomic recurrences satisfied by the walk's generating functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ConfigurationError

DP_LIMIT = 4096


@dataclass(frozen=True)
class LazyWalkChain:
    """Walk that stays put with ``stay_prob`` and moves +-1 with (1 - stay_prob)/2 each.

    ``band`` is the half-width of the state window used by the dynamic
    programs; it must cover every horizon asked of the chain.
    """

    stay_prob: float = 0.5
    band: int = 1024

    def __post_init__(self):
        if not 0.0 < self.stay_prob < 1.0:
            raise ValueError(f"stay_prob must lie in (0, 1), got {self.stay_prob}")
        if self.band < 1:
            raise ValueError("band must be a positive integer")

    @property
    def step_prob(self) -> float:
        return (1.0 - self.stay_prob) / 2.0

    @property
    def beta(self) -> float:
        # any aperiodic symmetric walk with finite variance: a_n ~ const * sqrt(n)
        return 0.5

    def transition_row(self) -> dict[int, float]:
        return {-1: self.step_prob, 0: self.stay_prob, 1: self.step_prob}

    def step(self, v: np.ndarray) -> np.ndarray:
        """Push a measure on the window one step forward (mass leaving the window is lost)."""
        s, t = self.stay_prob, self.step_prob
        out = s * v
        out[1:] += t * v[:-1]
        out[:-1] += t * v[1:]
        return out

    def with_band(self, band: int) -> "LazyWalkChain":
        return LazyWalkChain(self.stay_prob, band)


@dataclass(frozen=True, eq=False)
class ReturnTable:
    """Exact return quantities of the chain from state 0 up to ``horizon``.

    ``p0[k] = P_0(x_k = 0)``, ``fret[k] = P_0(first return at k)`` (``fret[0] = 0``),
    ``survival[k] = P_0(first return > k)``.  ``hitprob[j + hit_depth, r]`` is
    ``P_j(x_t = 0 for some 1 <= t <= r)`` for ``|j| <= hit_depth``.
    """

    chain: LazyWalkChain
    horizon: int
    p0: np.ndarray
    fret: np.ndarray
    hitprob: np.ndarray | None = None
    hit_depth: int = 0
    survival: np.ndarray = field(init=False, repr=False)
    _w: np.ndarray = field(init=False, repr=False)
    _a: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        survival = 1.0 - np.cumsum(self.fret)
        object.__setattr__(self, "survival", survival)
        # _w[n] = sum_{k<n} survival[k];  _a[n] = sum_{1<=k<=n} p0[k]
        object.__setattr__(self, "_w", np.concatenate(([0.0], np.cumsum(survival))))
        object.__setattr__(self, "_a", np.concatenate(([0.0], np.cumsum(self.p0[1:]))))

    def _check(self, n: int):
        if not 1 <= n <= self.horizon:
            raise ValueError(f"n={n} outside the table horizon 1..{self.horizon}")

    def hit(self, j, r):
        return self.hitprob[np.asarray(j) + self.hit_depth, r]

    def to_csv(self, path) -> None:
        k = np.arange(self.horizon + 1)
        np.savetxt(path, np.column_stack([k, self.p0, self.fret]), delimiter=",",
                   header="k,p0,fret", comments="", fmt=["%d", "%.17g", "%.17g"])

    @classmethod
    def from_csv(cls, path, chain: LazyWalkChain) -> "ReturnTable":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(chain=chain, horizon=int(data[-1, 0]), p0=data[:, 1].copy(), fret=data[:, 2].copy())


def _walk_dp(chain: LazyWalkChain, n: int, band: int):
    v = np.zeros(2 * band + 1)
    v[band] = 1.0
    p0 = np.empty(n + 1)
    p0[0] = 1.0
    for k in range(1, n + 1):
        v = chain.step(v)
        p0[k] = v[band]
    return p0


def _taboo_dp(chain: LazyWalkChain, start: np.ndarray, n: int, band: int):
    """Mass first arriving at 0 at steps 1..n from an initial measure kept off 0 after time 0."""
    v = start.copy()
    arrivals = np.zeros(n + 1)
    for k in range(1, n + 1):
        v = chain.step(v)
        arrivals[k] = v[band]
        v[band] = 0.0
    return arrivals


def _recurrences(chain: LazyWalkChain, n: int):
    """p0 and fret from the generating functions 1/sqrt(Q) and 1 - sqrt(Q).

    Q(z) = (1 - s z)**2 - (1 - s)**2 z**2 = 1 - 2 s z + e z**2 with e = 2 s - 1.
    Both coefficient sequences obey three-term recurrences; the competing
    solution decays like |e|**k so forward evaluation is stable.
    """
    s = chain.stay_prob
    e = 2.0 * s - 1.0
    p0 = np.empty(n + 1)
    g = np.empty(n + 1)  # coefficients of sqrt(Q)
    p0[0], g[0] = 1.0, 1.0
    if n >= 1:
        p0[1], g[1] = s, -s
    for k in range(2, n + 1):
        p0[k] = ((2 * k - 1) * s * p0[k - 1] - (k - 1) * e * p0[k - 2]) / k
        g[k] = ((2 * k - 3) * s * g[k - 1] - (k - 3) * e * g[k - 2]) / k
    fret = -g
    fret[0] = 0.0
    return p0, fret


def _hitprob_dp(chain: LazyWalkChain, depth: int) -> np.ndarray:
    s, t = chain.stay_prob, chain.step_prob
    width = 2 * depth + 1
    g = np.zeros((width, depth + 1))
    prev = np.zeros(width + 2)  # padded with zero-probability states at -depth-1, depth+1
    zero = depth + 1
    for r in range(1, depth + 1):
        nxt = prev.copy()
        nxt[zero] = 1.0  # stepping onto 0 counts as a hit
        cur = s * nxt[1:-1] + t * nxt[:-2] + t * nxt[2:]
        g[:, r] = cur
        prev[1:-1] = cur
    return g


def return_probs(chain: LazyWalkChain, n: int, hit_depth: int = 0, method: str = "auto") -> ReturnTable:
    """Exact return-probability table of ``chain`` from state 0 up to horizon ``n``.

    ``method="dp"`` runs the banded convolution DP (cost n * band), ``"recurrence"``
    the closed recurrences (cost n); ``"auto"`` uses the DP up to
    ``DP_LIMIT`` steps.  ``hit_depth`` > 0 also fills the hitting table needed
    by :func:`sample_restricted_path`.
    """
    if n < 1:
        raise ValueError("horizon must be at least 1")
    if chain.band < n:
        raise ConfigurationError(f"band {chain.band} < horizon {n}: DP would truncate probability mass")
    if hit_depth > chain.band:
        raise ConfigurationError(f"hit_depth {hit_depth} exceeds band {chain.band}")
    if method == "auto":
        method = "dp" if n <= DP_LIMIT else "recurrence"
    if method == "dp":
        band = n + 1
        p0 = _walk_dp(chain, n, band)
        start = np.zeros(2 * band + 1)
        start[band] = 1.0
        fret = _taboo_dp(chain, start, n, band)
    elif method == "recurrence":
        p0, fret = _recurrences(chain, n)
    else:
        raise ValueError(f"unknown method {method!r}")
    hitprob = _hitprob_dp(chain, hit_depth) if hit_depth > 0 else None
    return ReturnTable(chain=chain, horizon=n, p0=p0, fret=fret, hitprob=hitprob, hit_depth=hit_depth)


def renewal_residual(table: ReturnTable, kmax: int) -> float:
    """max_k |p0[k] - sum_j fret[j] p0[k-j]| over 1 <= k <= kmax."""
    kmax = min(kmax, table.horizon)
    worst = 0.0
    for k in range(1, kmax + 1):
        conv = np.dot(table.fret[1:k + 1], table.p0[k - 1::-1][:k])
        worst = max(worst, abs(table.p0[k] - conv))
    return worst


def a_n(table: ReturnTable, n: int) -> float:
    """Normalizing sequence sum_{k=1}^n P_0(x_k = 0)."""
    table._check(n)
    return float(table._a[n])


def wandering_rate(table: ReturnTable, n: int) -> float:
    """w_n = sum_{k<n} mu(A and {phi > k}) = sum_{k<n} P_0(first return > k)."""
    table._check(n)
    return float(table._w[n])


def mu_phi_le(table: ReturnTable, n: int) -> float:
    """mu(phi <= n) = sum_{k=1}^n mu(phi = k), with mu(phi = k) = P_0(first return >= k)."""
    table._check(n)
    return float(np.sum(table.survival[:n]))


def identity_check(table: ReturnTable, kmax: int) -> dict:
    """Compare mu(A, phi > k) with mu(A^c, phi = k) for k = 1..kmax.

    The left side comes from the return table, the right side from an
    independent taboo DP started from the invariant measure off state 0.
    """
    if kmax > table.horizon:
        raise ValueError("kmax exceeds table horizon")
    band = kmax + 1
    start = np.ones(2 * band + 1)
    start[band] = 0.0
    rhs = _taboo_dp(table.chain, start, kmax, band)[1:]
    lhs = table.survival[1:kmax + 1]
    diff = np.abs(lhs - rhs)
    return {"kmax": kmax, "lhs": lhs, "rhs": rhs, "max_abs_diff": float(diff.max()),
            "passed": bool(diff.max() <= 1e-12)}


def dual_sum_bound(table: ReturnTable, n: int) -> float:
    """(1 / mu(phi <= n)) * sum_{k=1}^n mu(A^c and {phi = k})."""
    table._check(n)
    return float(np.sum(table.survival[1:n + 1]) / mu_phi_le(table, n))


def uniformly_returning_check(table: ReturnTable, n: int, beta: float = 0.5) -> float:
    """b_n * P_0(x_n = 0) with b_n = Gamma(beta) Gamma(2 - beta) w_n; tends to mu(A) = 1."""
    table._check(n)
    b_n = math.gamma(beta) * math.gamma(2.0 - beta) * wandering_rate(table, n)
    return float(b_n * table.p0[n])


# ---------------------------------------------------------------------------
# path sampling under mu restricted to {phi <= m}


def h_transform_row(table: ReturnTable, m: int, k: int, i: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Conditioned one-step law at time k from state i, before the first visit to 0.

    Returns ``(offsets, probs, h)`` where ``h = P_i(hit 0 within m - k)`` and
    ``probs`` are p(i, i') h_{k+1}(i') / h with h_{k+1}(0) = 1.
    """
    r = m - k
    row = table.chain.transition_row()
    offsets = np.array(sorted(row))
    nxt = np.array([1.0 if i + d == 0 else (table.hit(i + d, r - 1) if abs(i + d) <= table.hit_depth else 0.0)
                    for d in offsets])
    num = np.array([row[d] for d in offsets]) * nxt
    return offsets, num / num.sum(), float(table.hit(i, r))


def sample_restricted_path(chain: LazyWalkChain, table: ReturnTable, rng: np.random.Generator,
                           m: int, horizon: int, size: int | None = None) -> np.ndarray:
    """Paths x_0..x_horizon drawn from mu(. and {phi <= m}) / mu(phi <= m).

    Start j has weight P_j(hit 0 within m); until the first visit the walk
    moves by the Doob h-transform with h_k(i) = P_i(hit 0 within m - k),
    afterwards by the plain kernel.
    """
    if m > chain.band:
        raise ConfigurationError(f"m={m} exceeds band {chain.band}")
    if table.hitprob is None or table.hit_depth < m:
        raise ConfigurationError(f"table hitting probabilities only reach depth {table.hit_depth} < m={m}")
    if not 1 <= horizon <= m:
        raise ValueError("need 1 <= horizon <= m")
    count = 1 if size is None else int(size)
    D = table.hit_depth
    g = table.hitprob
    states = np.arange(-m, m + 1)
    w = g[states + D, m]
    start = rng.choice(states, size=count, p=w / w.sum())

    s, t = chain.stay_prob, chain.step_prob
    paths = np.empty((count, horizon + 1), dtype=np.int64)
    paths[:, 0] = start
    hit = np.zeros(count, dtype=bool)
    gpad = np.zeros((2 * D + 3, D + 1))  # states -D-1..D+1, zero hitting mass off the table
    gpad[1:-1] = g
    for k in range(horizon):
        x = paths[:, k]
        r = m - k
        cand = np.stack([x - 1, x, x + 1], axis=1)
        h_next = gpad[np.clip(cand + D + 1, 0, 2 * D + 2), r - 1]
        h_next[cand == 0] = 1.0
        base = np.array([t, s, t])
        num = np.where(hit[:, None], base, base * h_next)
        cum = np.cumsum(num, axis=1)
        u = rng.random(count) * cum[:, -1]
        choice = (u[:, None] >= cum[:, :-1]).sum(axis=1)
        nxt = x + choice - 1
        paths[:, k + 1] = nxt
        hit |= nxt == 0
    return paths[0] if size is None else paths


@numba.njit(cache=True)
def _build_alias(p):
    n = p.shape[0]
    prob = np.zeros(n)
    alias = np.zeros(n, dtype=np.int64)
    scaled = p * (n / p.sum())
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        a = small[ns]
        g = large[nl - 1]
        prob[a] = scaled[a]
        alias[a] = g
        scaled[g] = (scaled[g] + scaled[a]) - 1.0
        if scaled[g] < 1.0:
            nl -= 1
            small[ns] = g
            ns += 1
    for i in range(nl):
        prob[large[i]] = 1.0
    for i in range(ns):
        prob[small[i]] = 1.0
    return prob, alias


@numba.njit(cache=True)
def _alias_draw(rng, prob, alias):
    u = rng.random() * prob.shape[0]
    j = int(u)
    if j >= prob.shape[0]:
        j = prob.shape[0] - 1
    if u - j < prob[j]:
        return j
    return alias[j]


@numba.njit(cache=True)
def _sample_visits(rng, fprob, falias, gprob, galias, m, count):
    cap = max(16, count * 4)
    terms = np.empty(cap, dtype=np.int32)
    times = np.empty(cap, dtype=np.int32)
    nv = 0
    for i in range(count):
        t = _alias_draw(rng, fprob, falias) + 1
        while t <= m:
            if nv == cap:
                cap *= 2
                nt = np.empty(cap, dtype=np.int32)
                nx = np.empty(cap, dtype=np.int32)
                nt[:nv] = terms[:nv]
                nx[:nv] = times[:nv]
                terms = nt
                times = nx
            terms[nv] = i
            times[nv] = t
            nv += 1
            gap = _alias_draw(rng, gprob, galias)
            if gap == m:  # no return within m steps
                break
            t += gap + 1
    return terms[:nv], times[:nv]


class VisitSampler:
    """Zero-visit times in 1..m of paths drawn from mu restricted to {phi <= m}.

    Under the restricted measure the first entrance time has law
    mu(phi = k) / mu(phi <= m) = P_0(first return >= k) / mu(phi <= m), and by the
    strong Markov property later visits form a renewal process with the
    first-return law.  Only these times enter the series for f = 1_A, so this
    is an O(number of visits) route to the same law as
    :func:`sample_restricted_path`.
    """

    def __init__(self, table: ReturnTable, m: int):
        if not 1 <= m <= table.horizon:
            raise ConfigurationError(f"m={m} outside table horizon {table.horizon}")
        self.m = m
        self.mass = mu_phi_le(table, m)
        first = table.survival[:m] / self.mass
        gaps = np.concatenate((table.fret[1:m + 1], [table.survival[m]]))
        self.first_law = first
        self.gap_law = gaps
        self._f = _build_alias(first)
        self._g = _build_alias(np.maximum(gaps, 0.0))

    def sample(self, rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(term, time)`` arrays, one entry per visit, sorted by term then time."""
        return _sample_visits(rng, self._f[0], self._f[1], self._g[0], self._g[1], self.m, int(count))

    def counts(self, rng: np.random.Generator, count: int, upto: int | None = None) -> np.ndarray:
        """Occupation times S(1_A) over 1..upto for ``count`` independent paths."""
        term, time = self.sample(rng, count)
        if upto is not None:
            term = term[time <= upto]
        return np.bincount(term, minlength=count)
