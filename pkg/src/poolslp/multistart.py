"""Deterministic multistart harness and solution-quality statistics.

Starts are drawn uniformly on the per-bin and per-product proportion
simplices with all derived quantities set consistently, so only the
product-window constraints can be violated at iteration zero.  Run r of a
batch uses seed ``base_seed ^ r``; together with per-run records this makes
every aggregate independent of scheduling, worker count, and run order.

Reported per-run ``time_s`` is a deterministic work-based time (a fixed
price per SLP iteration and per simplex pivot) rather than wall-clock
time, so report files are byte-reproducible; wall time is still measured
for time budgets and exposed separately as ``wall_s``.
"""

from __future__ import annotations

import concurrent.futures
import math
import multiprocessing
import time
import weakref
from dataclasses import dataclass, field

import numpy as np

from .formulations import NlpModel
from .slp import SlpOptions, slp_solve

__all__ = [
    "RunRecord",
    "MultistartReport",
    "random_start",
    "run_multistart",
    "etigood",
    "expected_time_curve",
    "write_report_csv",
    "write_curve_csv",
]

# Work-based deterministic timing (seconds per SLP iteration / LP pivot).
ITERATION_SECONDS = 1e-4
PIVOT_SECONDS = 2e-6

GOOD_REL_DEFAULT = 0.002


@dataclass(eq=False)
class RunRecord:
    run: int
    seed: int
    time_s: float
    iters: int
    status: str
    h: float
    f: float
    wall_s: float = 0.0


@dataclass(eq=False)
class MultistartReport:
    records: list[RunRecord]
    n_requested: int
    feas_tol: float = 1e-6
    good_rel: float = GOOD_REL_DEFAULT
    best_known: float | None = None
    truncated: bool = False
    points: list[np.ndarray] | None = None
    stationarity: list[float] | None = None

    @property
    def n_runs(self) -> int:
        return len(self.records)

    @property
    def ti_mean(self) -> float:
        return float(np.mean([r.time_s for r in self.records])) if self.records else 0.0

    @property
    def it_mean(self) -> float:
        return float(np.mean([r.iters for r in self.records])) if self.records else 0.0

    def feasible_mask(self) -> np.ndarray:
        return np.array([r.h < self.feas_tol for r in self.records], dtype=bool)

    @property
    def best_feasible(self) -> float:
        feas = [r.f for r in self.records if r.h < self.feas_tol]
        return min(feas) if feas else math.inf

    def good_threshold(self) -> float:
        base = self.best_known if self.best_known is not None else self.best_feasible
        if not math.isfinite(base):
            return -math.inf
        return base + self.good_rel * abs(base)

    @property
    def pct_feas(self) -> float:
        if not self.records:
            return 0.0
        return 100.0 * float(self.feasible_mask().sum()) / len(self.records)

    @property
    def pct_good(self) -> float:
        if not self.records:
            return 0.0
        thr = self.good_threshold()
        good = sum(1 for r in self.records if r.h < self.feas_tol and r.f <= thr)
        return 100.0 * good / len(self.records)

    @property
    def etigood(self) -> float:
        return etigood(self.ti_mean, self.pct_good)


class _StartCache:
    """Arc index arrays used to vectorize start generation for one model."""

    def __init__(self, model: NlpModel):
        inst = model.instance
        if inst is None:
            raise ValueError("model carries no instance reference")
        self.bin_of_arc = np.array([j for (_, j) in inst.bin_arcs], dtype=np.int64)
        self.raw_of_arc = np.array([i for (i, _) in inst.bin_arcs], dtype=np.int64)
        self.prod_of_out = np.array([k for (_, k) in inst.product_arcs], dtype=np.int64)
        self.bin_of_out = np.array([j for (j, _) in inst.product_arcs], dtype=np.int64)
        self.prod_of_str = np.array([k for (_, k) in inst.straight_arcs], dtype=np.int64)
        self.raw_of_str = np.array([i for (i, _) in inst.straight_arcs], dtype=np.int64)
        self.comp = inst.composition_matrix()
        self.cost = np.array([r.cost for r in inst.raws])
        self.straight_cost = np.array([r.straight_cost for r in inst.raws])
        self.demand = inst.demands()
        self.n_bins = len(inst.bins)
        self.n_prods = len(inst.products)


_start_caches: "weakref.WeakKeyDictionary[NlpModel, _StartCache]" = weakref.WeakKeyDictionary()


def _cache(model: NlpModel) -> _StartCache:
    sc = _start_caches.get(model)
    if sc is None:
        sc = _StartCache(model)
        _start_caches[model] = sc
    return sc


def random_start(model: NlpModel, rng: np.random.Generator) -> np.ndarray:
    """A start with proportions uniform on their simplices and consistent
    derived values: convexity, linkage and price rows hold to roundoff."""
    sc = _cache(model)
    g = model.groups
    x = np.zeros(model.n_vars)

    lam_draw = rng.exponential(size=len(sc.bin_of_arc))
    lam = lam_draw / np.bincount(sc.bin_of_arc, weights=lam_draw, minlength=sc.n_bins)[sc.bin_of_arc]
    x[g["lam"]] = lam

    e_out = rng.exponential(size=len(sc.prod_of_out))
    e_str = rng.exponential(size=len(sc.prod_of_str))
    tot = (np.bincount(sc.prod_of_out, weights=e_out, minlength=sc.n_prods)
           + np.bincount(sc.prod_of_str, weights=e_str, minlength=sc.n_prods))
    mu_out = e_out / tot[sc.prod_of_out]
    mu_str = e_str / tot[sc.prod_of_str] if len(e_str) else e_str

    m_comp = np.zeros((sc.n_bins, sc.comp.shape[1]))
    for l in range(sc.comp.shape[1]):
        m_comp[:, l] = np.bincount(sc.bin_of_arc, weights=lam * sc.comp[sc.raw_of_arc, l],
                                   minlength=sc.n_bins)

    if model.kind.uses_flows:
        x[g["f_out"]] = mu_out * sc.demand[sc.prod_of_out]
        if len(mu_str):
            x[g["f_str"]] = mu_str * sc.demand[sc.prod_of_str]
        if "m" in g:
            m_idx = g["m"].reshape(sc.n_bins, -1)
            for j in range(sc.n_bins):
                for l in range(m_comp.shape[1]):
                    if m_idx[j, l] >= 0:
                        x[m_idx[j, l]] = m_comp[j, l]
        if "d" in g:
            d = np.zeros((sc.n_prods, m_comp.shape[1]))
            for l in range(m_comp.shape[1]):
                d[:, l] = (np.bincount(sc.prod_of_out, weights=mu_out * m_comp[sc.bin_of_out, l], minlength=sc.n_prods)
                           + np.bincount(sc.prod_of_str, weights=mu_str * sc.comp[sc.raw_of_str, l], minlength=sc.n_prods))
            x[g["d"]] = d.ravel()
        return x

    x[g["mu_bin"]] = mu_out
    if len(mu_str):
        x[g["mu_str"]] = mu_str
    x[g["m"]] = m_comp.ravel()
    m_cost = np.bincount(sc.bin_of_arc, weights=lam * sc.cost[sc.raw_of_arc], minlength=sc.n_bins)
    x[g["cm"]] = m_cost
    d = np.zeros((sc.n_prods, m_comp.shape[1]))
    for l in range(m_comp.shape[1]):
        d[:, l] = (np.bincount(sc.prod_of_out, weights=mu_out * m_comp[sc.bin_of_out, l], minlength=sc.n_prods)
                   + np.bincount(sc.prod_of_str, weights=mu_str * sc.comp[sc.raw_of_str, l], minlength=sc.n_prods))
    x[g["d"]] = d.ravel()
    c_d = (np.bincount(sc.prod_of_out, weights=mu_out * m_cost[sc.bin_of_out], minlength=sc.n_prods)
           + np.bincount(sc.prod_of_str, weights=mu_str * sc.straight_cost[sc.raw_of_str], minlength=sc.n_prods))
    x[g["cd"]] = c_d
    return x


def _det_time(iters: int, pivots: int) -> float:
    return ITERATION_SECONDS * iters + PIVOT_SECONDS * pivots


_worker_model: NlpModel | None = None
_worker_opts: SlpOptions | None = None
_worker_seed: int = 0
_worker_keep: bool = False


def _worker_init(model, opts, base_seed, keep_points):
    global _worker_model, _worker_opts, _worker_seed, _worker_keep
    _worker_model = model
    _worker_opts = opts
    _worker_seed = base_seed
    _worker_keep = keep_points


def _run_one(args):
    model, opts, base_seed, keep, r = args
    seed = base_seed ^ r
    rng = np.random.default_rng(seed)
    x0 = random_start(model, rng)
    t0 = time.perf_counter()
    res = slp_solve(model, x0, opts)
    wall = time.perf_counter() - t0
    rec = RunRecord(run=r, seed=seed, time_s=_det_time(res.iterations, res.lp_pivots),
                    iters=res.iterations, status=res.status, h=res.h, f=res.f, wall_s=wall)
    if keep:
        return rec, res.x, res.kkt[0]
    return rec, None, None


def _run_one_pooled(r):
    return _run_one((_worker_model, _worker_opts, _worker_seed, _worker_keep, r))


def run_multistart(
    model: NlpModel,
    n_runs: int,
    base_seed: int,
    best_known: float | None = None,
    budget: float | None = None,
    options: SlpOptions | None = None,
    workers: int = 1,
    good_rel: float = GOOD_REL_DEFAULT,
    keep_points: bool = False,
) -> MultistartReport:
    """Run SLP from ``n_runs`` seeded random starts and aggregate statistics.

    ``budget`` is a wall-clock cap in seconds: remaining runs are dropped
    once it is exceeded and the report is flagged truncated.  Aggregates
    depend only on (model, n_runs, base_seed, options), not on workers.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    opts = options or SlpOptions()
    t0 = time.perf_counter()

    results: dict[int, tuple] = {}
    truncated = False
    if workers <= 1:
        for r in range(n_runs):
            if budget is not None and time.perf_counter() - t0 > budget:
                truncated = True
                break
            results[r] = _run_one((model, opts, base_seed, keep_points, r))
    else:
        ctx = multiprocessing.get_context("fork")
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=workers, mp_context=ctx,
            initializer=_worker_init, initargs=(model, opts, base_seed, keep_points),
        ) as pool:
            futures = {pool.submit(_run_one_pooled, r): r for r in range(n_runs)}
            for fut in concurrent.futures.as_completed(futures):
                results[futures[fut]] = fut.result()
                if budget is not None and time.perf_counter() - t0 > budget:
                    truncated = True
                    for other, r in futures.items():
                        if r not in results:
                            other.cancel()
                    break

    order = sorted(results)
    records = [results[r][0] for r in order]
    report = MultistartReport(
        records=records, n_requested=n_runs, feas_tol=opts.feas_tol,
        good_rel=good_rel, best_known=best_known, truncated=truncated,
    )
    if keep_points:
        report.points = [results[r][1] for r in order]
        report.stationarity = [results[r][2] for r in order]
    return report


def etigood(ti: float, pct_good: float) -> float:
    """Expected time to reach a good solution: 100*Ti/%Good (inf at 0%)."""
    if ti < 0:
        raise ValueError("mean time must be nonnegative")
    if pct_good <= 0.0:
        return math.inf
    return 100.0 * ti / pct_good

def expected_time_curve(report: MultistartReport) -> list[tuple[float, float]]:
    """Expected time to beat each feasible objective level.

    Reaching an objective at least as good as v succeeds in k of n runs;
    modelling runs as Bernoulli trials the expected number until success
    is n/k, hence expected time Ti*n/k.  The curve is non-increasing in
    time as the level loosens."""
    feas = sorted(r.f for r in report.records if r.h < report.feas_tol)
    if not feas:
        return []
    n = report.n_runs
    ti = report.ti_mean
    curve = []
    values = sorted(set(feas))
    fs = np.array(feas)
    for v in values:
        k = int((fs <= v).sum())
        curve.append((v, ti * n / k))
    return curve


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def summary_lines(report: MultistartReport) -> list[str]:
    best = report.best_feasible
    return [
        f"n_runs={report.n_runs}",
        f"truncated={int(report.truncated)}",
        f"pct_feas={_fmt(report.pct_feas)}",
        f"pct_good={_fmt(report.pct_good)}",
        f"ti_mean={_fmt(report.ti_mean)}",
        f"it_mean={_fmt(report.it_mean)}",
        f"best_f={_fmt(best)}",
        f"etigood={_fmt(report.etigood)}",
    ]


def write_report_csv(report: MultistartReport, path) -> None:
    """One row per run plus a '#'-prefixed summary block; byte-reproducible."""
    with open(path, "w") as out:
        out.write("run,seed,time_s,iters,status,h,f\n")
        for r in report.records:
            out.write(f"{r.run},{r.seed},{_fmt(r.time_s)},{r.iters},{r.status},{_fmt(r.h)},{_fmt(r.f)}\n")
        for line in summary_lines(report):
            out.write(f"# {line}\n")


def write_curve_csv(curve: list[tuple[float, float]], path) -> None:
    with open(path, "w") as out:
        out.write("objective,expected_time_s\n")
        for v, t in curve:
            out.write(f"{_fmt(v)},{_fmt(t)}\n")
