"""Boole's map on (0,1): orbits, invariant density, and orbit-based ratio diagnostics.

T(x) = x(1-x)/(1-x-x^2) on (0,1/2) and T(x) = 1 - T(1-x) on (1/2,1), with
invariant density h(x) = 1/x^2 + 1/(1-x)^2 and indifferent fixed points at 0, 1.

Orbits are iterated in folded coordinates: y = min(x, 1-x) in (0, 1/2] plus a
side bit.  Because T commutes with x -> 1-x, one branch formula serves both
sides and points near 1 keep full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import integrate

from .stats import rv_index

OK, HIT_HALF, LEFT_DOMAIN = 0, 1, 2


@njit(cache=True)
def _step(y, side):
    d = 1.0 - y - y * y
    t = y * (1.0 - y) / d
    if t <= 0.5:
        return t, side
    return (1.0 - 2.0 * y) / d, 1 - side


@njit(cache=True)
def _bad(y):
    return y == 0.5 or not (y > 0.0)


@njit(cache=True)
def _iterate(y, side, n, out_y, out_side):
    out_y[0] = y
    out_side[0] = side
    for k in range(1, n + 1):
        y, side = _step(y, side)
        out_y[k] = y
        out_side[k] = side
        if _bad(y):
            return k, (HIT_HALF if y == 0.5 else LEFT_DOMAIN)
    return n, OK


@njit(cache=True)
def _ratio_sums(ys, sides, n, eps, fgrid):
    """Per start: (S_n(f), S_n(1_A), status) with f read off a uniform grid on (0,1)."""
    m = ys.shape[0]
    K = fgrid.shape[0]
    sf = np.zeros(m)
    sa = np.zeros(m)
    status = np.zeros(m, dtype=np.int64)
    for i in range(m):
        y = ys[i]
        side = sides[i]
        for _ in range(n):
            if y >= eps:
                x = y if side == 0 else 1.0 - y
                j = min(int(x * K), K - 1)
                sf[i] += fgrid[j]
                sa[i] += 1.0
            y, side = _step(y, side)
            if _bad(y):
                status[i] = HIT_HALF if y == 0.5 else LEFT_DOMAIN
                break
    return sf, sa, status


@njit(cache=True)
def _occupation(ys, sides, checkpoints, eps):
    """S_n(1_A) at each checkpoint n (increasing) for every start."""
    m = ys.shape[0]
    out = np.zeros((m, checkpoints.shape[0]), dtype=np.int64)
    status = np.zeros(m, dtype=np.int64)
    for i in range(m):
        y = ys[i]
        side = sides[i]
        count = 0
        c = 0
        n_total = checkpoints[-1]
        for k in range(n_total):
            if y >= eps:
                count += 1
            if k + 1 == checkpoints[c]:
                out[i, c] = count
                c += 1
            y, side = _step(y, side)
            if _bad(y):
                status[i] = HIT_HALF if y == 0.5 else LEFT_DOMAIN
                break
    return out, status


def _fold(x):
    x = np.asarray(x, dtype=float)
    side = (x > 0.5).astype(np.int64)
    y = np.where(side == 1, 1.0 - x, x)
    return y, side


def boole_map(x):
    """T(x), vectorized."""
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0) | (x >= 1) | (x == 0.5)):
        raise ValueError("Boole map defined on (0,1/2) U (1/2,1)")
    y = np.minimum(x, 1.0 - x)
    t = y * (1.0 - y) / (1.0 - y - y * y)
    out = np.where(x < 0.5, t, 1.0 - t)
    return float(out) if out.ndim == 0 else out


def boole_derivative(x):
    """|T'(x)|; the right branch mirrors the left."""
    x = np.asarray(x, dtype=float)
    y = np.minimum(x, 1.0 - x)
    return (1.0 - 2.0 * y + 2.0 * y * y) / (1.0 - y - y * y) ** 2


def density(x):
    x = np.asarray(x, dtype=float)
    return 1.0 / x ** 2 + 1.0 / (1.0 - x) ** 2


@dataclass(frozen=True)
class BooleMap:
    epsilon: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")

    def in_A(self, x):
        x = np.asarray(x, dtype=float)
        return (x >= self.epsilon) & (x <= 1.0 - self.epsilon) & (x != 0.5)

    def sample_A(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Uniform starts on A, returned folded as (y, side)."""
        y = rng.uniform(self.epsilon, 0.5, size)
        y[y == 0.5] = self.epsilon
        side = rng.integers(0, 2, size).astype(np.int64)
        return y, side

    def measure(self, lo: float, hi: float) -> float:
        """mu((lo, hi)) = int h dx by adaptive quadrature."""
        val, _ = integrate.quad(lambda t: 1.0 / t ** 2 + 1.0 / (1.0 - t) ** 2, lo, hi, epsabs=0.0, epsrel=1e-12)
        return val

    def measure_A(self) -> float:
        return self.measure(self.epsilon, 0.5) + self.measure(0.5, 1.0 - self.epsilon)


@dataclass
class Orbit:
    x: np.ndarray
    status: int
    steps: int

    @property
    def flagged(self) -> bool:
        return self.status != OK


def iterate(bmap: BooleMap | None, x: float, n: int) -> Orbit:
    """Orbit x, T(x), ..., T^n(x); truncated and flagged if it hits 1/2 or leaves (0,1)."""
    if not (0.0 < x < 1.0) or x == 0.5:
        raise ValueError(f"start {x} outside (0,1/2) U (1/2,1)")
    y0, s0 = _fold(x)
    ys = np.empty(n + 1)
    sides = np.empty(n + 1, dtype=np.int64)
    steps, status = _iterate(float(y0), int(s0), n, ys, sides)
    ys, sides = ys[:steps + 1], sides[:steps + 1]
    if status != OK:
        ys, sides = ys[:-1], sides[:-1]
    return Orbit(np.where(sides == 1, 1.0 - ys, ys), int(status), steps)


def local_expansion(xs) -> np.ndarray:
    """(T(x) - x)/x^3 near the fixed point 0."""
    xs = np.asarray(xs, dtype=float)
    return (boole_map(xs) - xs) / xs ** 3


# ---------------------------------------------------------------------------
# transfer operator


def _bisect(g, lo, hi, target, tol=1e-14):
    """Root of increasing g on [lo, hi] with g = target."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if g(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def preimages(x: float) -> tuple[float, float]:
    """The two preimages of x under T, one per monotone branch."""
    left = _bisect(lambda t: t * (1 - t) / (1 - t - t * t), 0.0, 0.5, x)
    right = 1.0 - _bisect(lambda t: t * (1 - t) / (1 - t - t * t), 0.0, 0.5, 1.0 - x)
    return left, right


def transfer_residual(grid=None) -> float:
    """max |sum_{T y = x} h(y)/|T'(y)| - h(x)| / h(x) over the grid."""
    grid = (np.arange(1000) + 0.5) / 1000 if grid is None else np.asarray(grid, dtype=float)
    worst = 0.0
    for x in grid:
        ys = np.array(preimages(float(x)))
        lhs = float(np.sum(density(ys) / boole_derivative(ys)))
        worst = max(worst, abs(lhs - float(density(x))) / float(density(x)))
    return worst


# ---------------------------------------------------------------------------
# orbit diagnostics


@dataclass
class HopfReport:
    n: int
    target: float
    ratios: np.ndarray
    excluded: int
    median: float = field(init=False)
    spread: float = field(init=False)

    def __post_init__(self):
        self.median = float(np.median(self.ratios)) if self.ratios.size else math.nan
        q = np.quantile(self.ratios, [0.25, 0.75]) if self.ratios.size else (math.nan, math.nan)
        self.spread = float(q[1] - q[0])

    @property
    def relative_error(self) -> float:
        return abs(self.median - self.target) / self.target


def grid_function(bmap: BooleMap, fn, cells: int = 4096) -> np.ndarray:
    """Cell-midpoint values of fn on a uniform partition of (0,1)."""
    mid = (np.arange(cells) + 0.5) / cells
    return np.asarray(fn(mid), dtype=float)


def grid_measure(bmap: BooleMap, fgrid: np.ndarray) -> float:
    """mu(f 1_A) for the piecewise-constant grid function by quadrature over each cell."""
    K = fgrid.shape[0]
    total = 0.0
    for j in np.flatnonzero(fgrid):
        lo = max(j / K, bmap.epsilon)
        hi = min((j + 1) / K, 1.0 - bmap.epsilon)
        if hi > lo:
            total += fgrid[j] * bmap.measure(lo, hi)
    return total


def hopf_ratio_check(bmap: BooleMap, fgrid: np.ndarray, n: int, starts: int,
                     rng: np.random.Generator) -> HopfReport:
    """S_n(f)/S_n(1_A) along orbits from uniform starts on A, against mu(f)/mu(A)."""
    fgrid = np.asarray(fgrid, dtype=float)
    ys, sides = bmap.sample_A(rng, starts)
    sf, sa, status = _ratio_sums(ys, sides, n, bmap.epsilon, fgrid)
    ok = (status == OK) & (sa > 0)
    target = grid_measure(bmap, fgrid) / bmap.measure_A()
    return HopfReport(n, target, sf[ok] / sa[ok], int(np.count_nonzero(~ok)))


@dataclass
class OccupationReport:
    n_grid: np.ndarray
    counts: np.ndarray  # starts x grid
    medians: np.ndarray
    slope: float
    stderr: float
    excluded: int

    def doubling_ratios(self) -> np.ndarray:
        return self.medians[1:] / self.medians[:-1]

    def mean_doubling_ratio(self) -> float:
        """Geometric mean of the median ratio per doubling of n (grid assumed dyadic)."""
        steps = np.log2(self.n_grid[-1] / self.n_grid[0])
        return float((self.medians[-1] / self.medians[0]) ** (1.0 / steps))

    def to_csv(self, path) -> None:
        rows = [(s, int(n), int(c)) for s in range(self.counts.shape[0])
                for n, c in zip(self.n_grid, self.counts[s])]
        np.savetxt(path, np.array(rows), delimiter=",", header="start,n,occupation", comments="", fmt="%d")


def occupation_scaling(bmap: BooleMap, n_grid, starts: int, rng: np.random.Generator) -> OccupationReport:
    """Log-log slope of median S_n(1_A) over a geometric n grid."""
    n_grid = np.asarray(list(n_grid), dtype=np.int64)
    if np.any(np.diff(n_grid) <= 0):
        raise ValueError("n_grid must be strictly increasing")
    ys, sides = bmap.sample_A(rng, starts)
    counts, status = _occupation(ys, sides, n_grid, bmap.epsilon)
    ok = status == OK
    counts = counts[ok]
    medians = np.median(counts, axis=0)
    slope, stderr = rv_index(n_grid, medians)
    return OccupationReport(n_grid, counts, medians, slope, stderr, int(np.count_nonzero(~ok)))


def hopf_csv(report: HopfReport, path) -> None:
    np.savetxt(path, np.column_stack([np.arange(report.ratios.size), report.ratios]), delimiter=",",
               header="start,hopf_ratio", comments="", fmt=["%d", "%.17g"])
