"""Seeded multi-replicate experiments and their pass/fail reports.

Replicate r at sample size n always draws from ``RngStream(master_seed, r).child(n)``,
so any single row can be recomputed in isolation.  Reference draws (W, the
Darling-Kac limit, SaS) come from a reserved stream id.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boole import BooleMap, grid_function, hopf_ratio_check, occupation_scaling, transfer_residual
from .config import ExperimentConfig
from .levy import LevyTail
from .markov import (LazyWalkChain, a_n, dual_sum_bound, identity_check, renewal_residual,
                     return_probs, uniformly_returning_check, wandering_rate)
from .samplers import RngStream, darling_kac_limit, positive_stable_W, sas_cms
from .series import SeriesConfig, flow_for, simulate_path, simulate_paths, truncation_diagnostic
from .stats import (acf, c_n, cn_index, cn_schedule, cn_tail_ratio, growth_ratio, ks_two_sample,
                    rv_index, stable_tail_constant)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
REFERENCE_STREAM = 2 ** 63 - 1


@dataclass
class Check:
    name: str
    estimate: float
    target: float | str
    band: str
    passed: bool

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name}: estimate={self.estimate:.6g} target={self.target} band={self.band}"


def within(name, estimate, target, lo, hi) -> Check:
    return Check(name, float(estimate), target, f"[{lo:.6g}, {hi:.6g}]", bool(lo <= estimate <= hi))


def at_most(name, estimate, bound, target=0.0) -> Check:
    return Check(name, float(estimate), target, f"<= {bound:.6g}", bool(estimate <= bound))


@dataclass
class ReplicateResult:
    replicate: int
    n: int
    values: dict
    flagged: bool = False


@dataclass
class Report:
    kind: str
    checks: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    plotdata: dict = field(default_factory=dict)  # name -> (header, 2-d array)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]

    def summary(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "passed": self.passed,
            "checks": [{"name": c.name, "estimate": c.estimate, "target": c.target, "band": c.band,
                        "passed": c.passed} for c in self.checks],
            "info": self.info,
        }


# ---------------------------------------------------------------------------
# execution


def _pool_map(fn, args: list, workers: int) -> list:
    if workers <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, *zip(*args), chunksize=max(1, len(args) // (8 * workers))))


def _chain(cfg: ExperimentConfig, band: int) -> LazyWalkChain:
    return LazyWalkChain(stay_prob=cfg.stay_prob, band=band)


@dataclass(frozen=True)
class _SeriesJob:
    n: int
    H: int
    alpha: float
    scale: float
    stay_prob: float
    i_max: int
    block: int
    master_seed: int
    cn: float


def _series_job(cfg: ExperimentConfig, n: int) -> _SeriesJob:
    chain = _chain(cfg, n + cfg.H)
    levy = cfg.levy()
    table = flow_for(chain, n + cfg.H).table
    cn = c_n(cfg.alpha, chain.beta, a_n(table, n), wandering_rate(table, n), levy)
    return _SeriesJob(n, cfg.H, cfg.alpha, cfg.scale, cfg.stay_prob, cfg.i_max, cfg.block, cfg.master_seed, cn)


def series_replicate(job: _SeriesJob, rep: int) -> ReplicateResult:
    """(n/c_n) gamma_n(h), rho_n(h) for h = 0..H on one simulated path."""
    cfg = SeriesConfig(job.n, job.H, LevyTail(job.alpha, job.scale),
                       LazyWalkChain(job.stay_prob, band=job.n + job.H), job.i_max, job.block, job.master_seed)
    X = simulate_path(cfg, RngStream(job.master_seed, rep).child(job.n)).X
    est = acf(X, job.n, job.H)
    values = {"sum_sq": job.n * est.gamma[0]}
    for h in range(job.H + 1):
        values[f"g{h}"] = job.n / job.cn * est.gamma[h]
        values[f"rho{h}"] = est.rho[h]
    return ReplicateResult(rep, job.n, values, est.flagged)


def _series_rows(cfg: ExperimentConfig) -> list[ReplicateResult]:
    rows = []
    for n in cfg.n_grid:
        t0 = time.perf_counter()
        job = _series_job(cfg, n)
        rows += _pool_map(series_replicate, [(job, r) for r in range(cfg.replicates)], cfg.effective_workers())
        log.info("n=%d: %d replicates in %.1fs", n, cfg.replicates, time.perf_counter() - t0)
    return sorted(rows, key=lambda r: (r.n, r.replicate))


def _column(rows, n, key, include_flagged=False) -> np.ndarray:
    return np.array([r.values[key] for r in rows if r.n == n and (include_flagged or not r.flagged)])


def _accounting(report: Report, rows, cfg: ExperimentConfig) -> None:
    per_n = {}
    for n in cfg.n_grid:
        excluded = sum(1 for r in rows if r.n == n and r.flagged)
        included = sum(1 for r in rows if r.n == n and not r.flagged)
        assert excluded + included == cfg.replicates
        per_n[str(n)] = {"included": included, "excluded": excluded}
    report.info["accounting"] = per_n


def _reference(cfg: ExperimentConfig, *keys: int) -> np.random.Generator:
    return RngStream(cfg.master_seed, REFERENCE_STREAM, keys).generator()


# ---------------------------------------------------------------------------
# experiments


def run_limit_law(cfg: ExperimentConfig) -> Report:
    """KS of (n/c_n) gamma_n(0) against W across n, plus the lag-1 / lag-0 median ratio."""
    tol = cfg.tolerances
    rows = _series_rows(cfg)
    report = Report("limit-law", rows=rows)
    _accounting(report, rows, cfg)
    w = positive_stable_W(_reference(cfg, 0), cfg.alpha, cfg.reference_draws)
    ks = np.array([ks_two_sample(_column(rows, n, "g0"), w) for n in cfg.n_grid])
    report.info["ks"] = dict(zip(map(str, cfg.n_grid), ks.tolist()))
    report.info["median_W"] = float(np.median(w))
    report.info["median_scaled_gamma0"] = {str(n): float(np.median(_column(rows, n, "g0"))) for n in cfg.n_grid}

    g0_all = np.concatenate([_column(rows, n, "g0", True) for n in cfg.n_grid])
    report.checks.append(Check("sign (n/c_n)gamma_n(0) >= 0", float(g0_all.min()), ">= 0", ">= 0",
                               bool(np.all(g0_all >= 0))))
    rises = np.diff(ks)
    inversions = rises[rises > 0]
    trend_ok = inversions.size <= 1 and (inversions.size == 0 or inversions.max() <= tol["ks_inversion"])
    report.checks.append(Check("KS nonincreasing over n_grid (one inversion allowed)",
                               float(inversions.max()) if inversions.size else 0.0, "nonincreasing",
                               f"<= 1 inversion of <= {tol['ks_inversion']:.6g}", bool(trend_ok)))
    report.checks.append(at_most(f"KS vs W at n={cfg.n_grid[-1]}", ks[-1], tol["ks_final"]))
    if cfg.H >= 1:
        target = float(flow_for(_chain(cfg, cfg.n_grid[-1] + cfg.H), cfg.n_grid[-1] + cfg.H).table.p0[1])
        n = cfg.n_grid[-1]
        ratio = np.median(_column(rows, n, "g1")) / np.median(_column(rows, n, "g0"))
        report.checks.append(within(f"median lag1/lag0 at n={n}", ratio, target,
                                    target - tol["lag_ratio"], target + tol["lag_ratio"]))
    report.plotdata["ks_vs_n"] = (["n", "ks"], np.column_stack([cfg.n_grid, ks]))
    probs = np.linspace(0.01, 0.99, 99)
    report.plotdata["qq_largest_n"] = (["W_quantile", "sample_quantile"], np.column_stack(
        [np.quantile(w, probs), np.quantile(_column(rows, cfg.n_grid[-1], "g0"), probs)]))
    return report


def run_acorr(cfg: ExperimentConfig) -> Report:
    """Medians and interquartile widths of rho_n(h) against P_0(x_h = 0)."""
    tol = cfg.tolerances
    rows = _series_rows(cfg)
    report = Report("acorr", rows=rows)
    _accounting(report, rows, cfg)
    p0 = return_probs(_chain(cfg, cfg.H + 1), cfg.H + 1).p0
    table = []
    for n in cfg.n_grid:
        for h in range(cfg.H + 1):
            q25, q50, q75 = np.quantile(_column(rows, n, f"rho{h}"), [0.25, 0.5, 0.75])
            table.append((n, h, q50, q25, q75, q75 - q25, p0[h]))
    table = np.array(table)
    report.plotdata["rho_quantiles"] = (["n", "h", "median", "q25", "q75", "iqr", "target"], table)
    n_last = cfg.n_grid[-1]
    for h in (1, 2):
        if h <= cfg.H:
            med = table[(table[:, 0] == n_last) & (table[:, 1] == h), 2][0]
            report.checks.append(within(f"median rho({h}) at n={n_last}", med, float(p0[h]),
                                        p0[h] - tol["rho"], p0[h] + tol["rho"]))
    if cfg.H >= 1:
        iqr = table[table[:, 1] == 1, 5]
        report.info["iqr_rho1"] = dict(zip(map(str, cfg.n_grid), iqr.tolist()))
        report.checks.append(Check("IQR of rho(1) strictly decreasing over n_grid", float(iqr[-1]), "decreasing",
                                   "strict", bool(np.all(np.diff(iqr) < 0))))
    return report


def run_rate(cfg: ExperimentConfig) -> Report:
    """Log-log slope of median n gamma_n(0) against the index of c_n."""
    tol = cfg.tolerances
    rows = _series_rows(cfg)
    report = Report("rate", rows=rows)
    _accounting(report, rows, cfg)
    chain = _chain(cfg, cfg.n_grid[-1])
    levy = cfg.levy()
    target = cn_index(cfg.alpha, chain.beta)
    med = np.array([np.median(_column(rows, n, "sum_sq")) for n in cfg.n_grid])
    slope, se = rv_index(cfg.n_grid, med)
    sched = cn_schedule(return_probs(chain, cfg.n_grid[-1]), levy, cfg.n_grid)
    cn_slope, _ = rv_index(sched.n, sched.c)
    report.info.update(target=target, slope=slope, slope_stderr=se, cn_slope=cn_slope)
    report.checks.append(within("slope of log median n*gamma_n(0)", slope, round(target, 4),
                                target - tol["slope"], target + tol["slope"]))
    report.checks.append(within("slope of log c_n", cn_slope, round(target, 4),
                                target - tol["cn_slope"], target + tol["cn_slope"]))
    report.plotdata["rate"] = (["n", "median_n_gamma0", "c_n"], np.column_stack([cfg.n_grid, med, sched.c]))
    return report


def dk_replicate(chain: LazyWalkChain, n: int, an: float, master_seed: int, rep: int) -> ReplicateResult:
    sampler = flow_for(chain, n).sampler
    s = sampler.counts(RngStream(master_seed, rep).child(n).generator(), 1)[0]
    return ReplicateResult(rep, n, {"occupation": float(s), "scaled": s / an})


def run_dk(cfg: ExperimentConfig) -> Report:
    """S_n(1_A)/a_n under mu_n against the Darling-Kac limit."""
    tol = cfg.tolerances
    n = cfg.n_grid[-1]
    chain = _chain(cfg, n)
    beta = chain.beta
    an = a_n(flow_for(chain, n).table, n)
    rows = _pool_map(dk_replicate, [(chain, n, an, cfg.master_seed, r) for r in range(cfg.replicates)],
                     cfg.effective_workers())
    rows.sort(key=lambda r: r.replicate)
    report = Report("dk", rows=rows)
    x = np.array([r.values["scaled"] for r in rows])
    ref = darling_kac_limit(_reference(cfg, 1), beta, cfg.reference_draws)
    for r, key in ((1, "dk_m1"), (2, "dk_m2")):
        target = math.gamma(1 + beta) ** r * math.factorial(r) * math.gamma(2 - beta) / math.gamma(r * beta + 2 - beta)
        est = float(np.mean(x ** r))
        report.checks.append(within(f"E[(S_n/a_n)^{r}] at n={n}", est, round(target, 6),
                                    target * (1 - tol[key]), target * (1 + tol[key])))
    report.checks.append(at_most(f"KS vs Darling-Kac limit at n={n}", ks_two_sample(x, ref), tol["dk_ks"]))
    probs = np.linspace(0.01, 0.99, 99)
    report.plotdata["dk_qq"] = (["limit_quantile", "sample_quantile"],
                                np.column_stack([np.quantile(ref, probs), np.quantile(x, probs)]))
    return report


def _asymptotic_constants(stay_prob: float) -> tuple[float, float]:
    """(a_n, w_n) ~ (A sqrt(n), B sqrt(n)) for the lazy walk with step variance 1 - s."""
    var = 1.0 - stay_prob
    A = 2.0 / math.sqrt(2.0 * math.pi * var)
    B = 4.0 / (math.pi * A)  # a_n w_n ~ n / (Gamma(1+b) Gamma(2-b)) at b = 1/2
    return A, B


def run_selftest(cfg: ExperimentConfig) -> Report:
    """Deterministic DP suites: ergodic identity, renewal identity, uniform-return ratio."""
    tol = cfg.tolerances
    report = Report("selftest")
    t0 = time.perf_counter()
    chain = _chain(cfg, 1024)
    table = return_probs(chain, 1000)
    ident = identity_check(table, 1000)
    report.checks.append(at_most("identity mu(A, phi>k) = mu(A^c, phi=k), k<=1000", ident["max_abs_diff"],
                                 tol["identity"]))
    report.checks.append(at_most("renewal identity, k<=1000", renewal_residual(table, 1000), tol["identity"]))
    big = return_probs(_chain(cfg, cfg.asym_n), cfg.asym_n)
    bn = uniformly_returning_check(big, cfg.asym_n, chain.beta)
    report.checks.append(within(f"b_n P_0(x_n=0) at n={cfg.asym_n}", bn, 1.0, tol["asym_lo"], tol["asym_hi"]))
    report.info["seconds"] = time.perf_counter() - t0
    return report


def run_markov_diag(cfg: ExperimentConfig) -> Report:
    """Deterministic asymptotics of a_n, w_n plus the Monte Carlo ratio checks at diag_n."""
    tol = cfg.tolerances
    report = run_selftest(cfg)
    report.kind = "markov-diag"
    n = cfg.asym_n
    grid = [2 ** k for k in range(10, 18)]
    chain = _chain(cfg, max(n, cfg.diag_n, grid[-1]))
    table = return_probs(chain, max(n, grid[-1]))
    A, B = _asymptotic_constants(cfg.stay_prob)
    report.checks.append(within(f"a_n/(A sqrt n) at n={n}", a_n(table, n) / (A * math.sqrt(n)), 1.0,
                                tol["asym_lo"], tol["asym_hi"]))
    report.checks.append(within(f"w_n/(B sqrt n) at n={n}", wandering_rate(table, n) / (B * math.sqrt(n)), 1.0,
                                tol["asym_lo"], tol["asym_hi"]))
    slope_a, _ = rv_index(grid, [a_n(table, k) for k in grid])
    report.checks.append(within("rv_index(a_n) on 2^10..17", slope_a, chain.beta, 0.48, 0.52))
    report.info["dual_sum_bound"] = {str(k): dual_sum_bound(table, k) for k in (1, 10, 100, 1000, n)}

    levy = cfg.levy()
    flow = flow_for(chain.with_band(cfg.diag_n), cfg.diag_n)
    g1 = RngStream(cfg.master_seed, REFERENCE_STREAM, (2,)).generator()
    g2 = RngStream(cfg.master_seed, REFERENCE_STREAM, (3,)).generator()
    gr = growth_ratio(flow.table, flow.sampler, cfg.alpha, g1, cfg.mc_samples)
    tr = cn_tail_ratio(flow.table, flow.sampler, levy, g2, cfg.mc_samples)
    report.checks.append(within(f"growth ratio at n={cfg.diag_n}", gr, 1.0, tol["ratio_lo"], tol["ratio_hi"]))
    report.checks.append(within(f"c_n tail ratio at n={cfg.diag_n}", tr, 1.0, tol["ratio_lo"], tol["ratio_hi"]))
    sched = cn_schedule(table, levy, grid)
    report.plotdata["cn_schedule"] = (["n", "a_n", "w_n", "c_n"], np.column_stack([sched.n, sched.a, sched.w, sched.c]))
    return report


def run_boole_diag(cfg: ExperimentConfig) -> Report:
    tol = cfg.tolerances
    report = Report("boole-diag")
    bmap = BooleMap(cfg.epsilon)
    resid = transfer_residual()
    report.checks.append(at_most("transfer operator relative residual of h", resid, tol["transfer"]))
    fgrid = grid_function(bmap, lambda x: (x < 0.5).astype(float), cfg.cells)
    hopf = hopf_ratio_check(bmap, fgrid, cfg.hopf_n, cfg.hopf_starts, RngStream(cfg.master_seed, REFERENCE_STREAM, (4,)).generator())
    t = hopf.target
    report.checks.append(within(f"Hopf ratio median, f = 1 on left half of A, n={cfg.hopf_n}", hopf.median, round(t, 6),
                                t * (1 - tol["hopf"]), t * (1 + tol["hopf"])))
    occ = occupation_scaling(bmap, cfg.occ_grid, cfg.occ_starts, RngStream(cfg.master_seed, REFERENCE_STREAM, (5,)).generator())
    report.checks.append(within("occupation-time slope", occ.slope, 0.5, tol["occ_lo"], tol["occ_hi"]))
    report.info.update(hopf_excluded=hopf.excluded, hopf_spread=hopf.spread, occ_excluded=occ.excluded,
                       occ_slope_stderr=occ.stderr, doubling_ratio=occ.mean_doubling_ratio())
    report.plotdata["occupation_median"] = (["n", "median_occupation"], np.column_stack([occ.n_grid, occ.medians]))
    report.plotdata["hopf_ratios"] = (["start", "ratio"], np.column_stack([np.arange(hopf.ratios.size), hopf.ratios]))
    return report


def run_simulate(cfg: ExperimentConfig) -> Report:
    """Simulate paths; check the X_1 marginal against SaS and the truncation doubling test."""
    tol = cfg.tolerances
    N = cfg.n_grid[-1]
    levy = cfg.levy()
    scfg = SeriesConfig(N, cfg.H, levy, _chain(cfg, N + cfg.H), cfg.i_max, cfg.block, cfg.master_seed)
    X = simulate_paths(scfg, RngStream(cfg.master_seed, 0), cfg.replicates)
    report = Report("simulate")
    report.rows = [ReplicateResult(r, N, {"X1": X[r, 0], "XN": X[r, N - 1]}) for r in range(cfg.replicates)]
    report.info["paths"] = X
    sigma = (2.0 * cfg.scale / stable_tail_constant(cfg.alpha)) ** (1.0 / cfg.alpha)
    ref = sas_cms(_reference(cfg, 6), cfg.alpha, sigma, max(cfg.replicates, cfg.reference_draws))
    report.checks.append(at_most("KS of X_1 vs SaS marginal", ks_two_sample(X[:, 0], ref), tol["marginal_ks"]))
    if cfg.truncation_paths > 0:
        diag = truncation_diagnostic(scfg, RngStream(cfg.master_seed, REFERENCE_STREAM, (7,)), cfg.truncation_paths,
                                     tol["truncation_ks"])
        report.checks.append(at_most(f"truncation doubling KS, i_max={cfg.i_max}", diag["ks"], tol["truncation_ks"]))
        report.info["truncation_flag"] = diag["flagged"]
    return report


RUNNERS = {
    "limit-law": run_limit_law,
    "acorr": run_acorr,
    "rate": run_rate,
    "dk": run_dk,
    "markov-diag": run_markov_diag,
    "boole-diag": run_boole_diag,
    "simulate": run_simulate,
    "selftest": run_selftest,
}


def run(cfg: ExperimentConfig) -> Report:
    return RUNNERS[cfg.kind](cfg.validate())


# ---------------------------------------------------------------------------
# output


def write_outputs(report: Report, cfg: ExperimentConfig, out_dir) -> Path:
    """results.csv, summary.json, plotdata/*.csv, effective_config.ini (and paths.csv if requested)."""
    out = Path(out_dir)
    (out / "plotdata").mkdir(parents=True, exist_ok=True)
    keys = sorted({k for r in report.rows for k in r.values})
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replicate", "n", "flagged", *keys])
        for r in report.rows:
            w.writerow([r.replicate, r.n, int(r.flagged), *(repr(float(r.values.get(k, math.nan))) for k in keys)])
    summary = report.summary()
    summary["info"] = {k: v for k, v in summary["info"].items() if not isinstance(v, np.ndarray)}
    summary["config"] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.to_dict().items()}
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, default=float)
    for name, (header, data) in report.plotdata.items():
        np.savetxt(out / "plotdata" / f"{name}.csv", np.atleast_2d(data), delimiter=",",
                   header=",".join(header), comments="", fmt="%.17g")
    (out / "effective_config.ini").write_text(cfg.to_ini())
    paths = report.info.get("paths")
    if cfg.dump_paths and isinstance(paths, np.ndarray):
        with open(out / "paths.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replicate", "k", "X_k"])
            for r, row in enumerate(paths):
                w.writerows((r, k + 1, repr(float(v))) for k, v in enumerate(row))
    return out
