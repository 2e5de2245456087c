"""Filter trust-region sequential linear programming.

Each iteration solves the boxed linearization of the bilinear model around
the current iterate with the simplex kernel (warm-started from the previous
basis), then accepts or rejects the candidate using a sloping-envelope
filter on (infeasibility, objective) pairs combined with an
actual-versus-predicted ratio test.  An infeasible subproblem triggers an
elastic restoration solve that minimizes the scaled linearized violation
inside the same box.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .formulations import EQ, GE, LE, NlpModel
from .lp import Basis, LinearProgram, LpSolution, SolveLimits
from .lp import solve as lp_solve
from .nlpeval import EvalPoint, evaluate, jacobian, kkt_error, objective_gradient

__all__ = ["Filter", "SlpOptions", "SlpState", "SolveResult", "filter_acceptable", "step", "slp_solve"]


@dataclass
class SlpOptions:
    feas_tol: float = 1e-6
    opt_tol: float = 1e-6
    rho0: float = 1.0
    rho_min: float = 1e-10
    rho_max: float = 10.0
    gamma_h: float = 1e-4
    gamma_f: float = 1e-4
    ratio_accept: float = 0.1
    ratio_expand: float = 0.75
    step_tol: float = 1e-8
    max_iter: int = 500
    time_limit: float | None = None
    h_norm: str = "inf"
    h_weight: float = 1.0
    trace: str | None = None


@dataclass
class Filter:
    """Non-dominated (h, f) pairs with sloping envelope margins."""

    gamma_h: float = 1e-4
    gamma_f: float = 1e-4
    entries: list[tuple[float, float]] = field(default_factory=list)

    def acceptable(self, h: float, f: float) -> bool:
        for (he, fe) in self.entries:
            if not (h <= (1.0 - self.gamma_h) * he or f <= fe - self.gamma_f * h):
                return False
        return True

    def add(self, h: float, f: float) -> None:
        """Insert a pair, dropping entries it dominates."""
        self.entries = [(he, fe) for (he, fe) in self.entries if he < h or fe < f]
        self.entries.append((h, f))


def filter_acceptable(filt: Filter, h: float, f: float) -> bool:
    return filt.acceptable(h, f)


@dataclass(eq=False)
class SlpState:
    x: np.ndarray
    rho: float
    iteration: int = 0
    filter: Filter = field(default_factory=Filter)
    basis: Basis | None = None
    best_feasible: tuple[np.ndarray, float] | None = None
    point: EvalPoint | None = None
    duals: np.ndarray | None = None
    lp_pivots: int = 0
    # derivative cache at the current iterate (dropped when x moves)
    _grad: np.ndarray | None = None
    _jac: sp.csr_matrix | None = None


@dataclass(eq=False)
class SolveResult:
    status: str  # optimal-local | feasible-stalled | infeasible-stall | iteration-limit | time-limit
    x: np.ndarray
    f: float
    h: float
    iterations: int
    wall_time: float
    kkt: tuple[float, float, float]
    lp_pivots: int = 0

    @property
    def feasible(self) -> bool:
        return self.h < 1e-6


def _derivatives(model: NlpModel, state: SlpState):
    if state._grad is None:
        state._grad = objective_gradient(model, state.x)
        state._jac = jacobian(model, state.x)
    return state._grad, state._jac


def _subproblem(model: NlpModel, state: SlpState) -> LinearProgram:
    g, jac = _derivatives(model, state)
    step_lo = np.maximum(model.lo - state.x, -state.rho)
    step_hi = np.minimum(model.hi - state.x, state.rho)
    return LinearProgram(c=g, A=jac, sense=model.sense, rhs=-state.point.residuals,
                         lo=step_lo, hi=step_hi)


def _elastic(lp: LinearProgram, weights: np.ndarray) -> LinearProgram:
    """Relax every row with penalized violation columns (always feasible)."""
    m, n = lp.shape
    cols_i: list[int] = []
    cols_j: list[int] = []
    vals: list[float] = []
    costs: list[float] = []
    col = n
    for i in range(m):
        s = int(lp.sense[i])
        if s in (LE, EQ):
            cols_i.append(i); cols_j.append(col); vals.append(-1.0); costs.append(weights[i]); col += 1
        if s in (GE, EQ):
            cols_i.append(i); cols_j.append(col); vals.append(1.0); costs.append(weights[i]); col += 1
    extra = col - n
    pmat = sp.coo_matrix((vals, (cols_i, np.array(cols_j) - n)), shape=(m, extra))
    return LinearProgram(
        c=np.concatenate([np.zeros(n), np.array(costs)]),
        A=sp.hstack([lp.A, pmat]).tocsr(),
        sense=lp.sense,
        rhs=lp.rhs,
        lo=np.concatenate([lp.lo, np.zeros(extra)]),
        hi=np.concatenate([lp.hi, np.full(extra, np.inf)]),
    )


@dataclass(eq=False)
class StepInfo:
    accepted: bool
    step_norm: float
    lp_status: str
    restoration: bool = False
    converged: bool = False
    stalled_infeasible: bool = False


def step(model: NlpModel, state: SlpState, options: SlpOptions | None = None) -> tuple[SlpState, bool]:
    """Advance one SLP iteration in place; returns (state, accepted)."""
    info = _step(model, state, options or SlpOptions())
    return state, info.accepted


def _step(model: NlpModel, state: SlpState, opts: SlpOptions) -> StepInfo:
    if state.point is None:
        state.x = np.clip(state.x, model.lo, model.hi)
        state.point = evaluate(model, state.x, opts.h_norm)
    pt = state.point
    n = model.n_vars

    lp = _subproblem(model, state)
    sol = lp_solve(lp, warm_basis=state.basis)
    state.lp_pivots += sol.iterations
    restoration = False

    if sol.status == "infeasible":
        restoration = True
        sol = lp_solve(_elastic(lp, 1.0 / model.row_scale))
        state.lp_pivots += sol.iterations
    if sol.status == "unbounded":
        raise RuntimeError("trust-region subproblem unbounded: step box is not finite")
    if not sol.optimal:
        # LP trouble: treat as a rejected step and tighten the region
        state.rho *= 0.5
        state.iteration += 1
        return StepInfo(False, 0.0, sol.status)

    dx = sol.x[:n]
    step_norm = float(np.abs(dx).max(initial=0.0))

    if restoration:
        if step_norm <= opts.step_tol and pt.h > opts.feas_tol:
            state.iteration += 1
            return StepInfo(False, step_norm, sol.status, restoration=True, stalled_infeasible=True)
    elif step_norm <= opts.step_tol and pt.h <= opts.feas_tol:
        state.duals = sol.duals
        state.basis = sol.basis or state.basis
        state.iteration += 1
        return StepInfo(False, step_norm, sol.status, converged=True)

    cand = np.clip(state.x + dx, model.lo, model.hi)
    pt2 = evaluate(model, cand, opts.h_norm)

    filter_ok = state.filter.acceptable(pt2.h, pt2.objective)
    if restoration:
        # restoration only needs infeasibility progress; the filter gets a
        # say again once the subproblems turn consistent
        accepted = pt2.h < (1.0 - opts.gamma_h) * pt.h
        ratio = 1.0 if accepted else 0.0
    else:
        pred = -float(lp.c @ dx) + opts.h_weight * pt.h
        act = (pt.objective - pt2.objective) + opts.h_weight * (pt.h - pt2.h)
        floor = 1e-14 * (1.0 + abs(pt.objective))
        if pred > floor:
            ratio = act / pred
            accepted = filter_ok and ratio >= opts.ratio_accept
        else:
            # h-type step (the model predicts no composite improvement, e.g.
            # feasibility must be bought with objective): require acceptability
            # to the current pair as well, no ratio test
            ratio = 1.0
            accepted = filter_ok and (
                pt2.h <= (1.0 - opts.gamma_h) * pt.h
                or pt2.objective <= pt.objective - opts.gamma_f * pt2.h
            )

    state.iteration += 1
    if accepted:
        if pt2.h > pt.h:
            state.filter.add(pt2.h, pt2.objective)
        state.x = cand
        state.point = pt2
        state._grad = None
        state._jac = None
        state.duals = sol.duals
        if sol.basis is not None:
            state.basis = sol.basis
        if pt2.h < opts.feas_tol and (state.best_feasible is None or pt2.objective < state.best_feasible[1]):
            state.best_feasible = (cand.copy(), pt2.objective)
        hit_box = step_norm >= state.rho * (1.0 - 1e-9)
        if ratio >= opts.ratio_expand and hit_box:
            state.rho = min(opts.rho_max, 2.0 * state.rho)
    else:
        state.rho *= 0.5
    return StepInfo(accepted, step_norm, sol.status, restoration=restoration)


def slp_solve(model: NlpModel, x0: np.ndarray, options: SlpOptions | None = None) -> SolveResult:
    """Run filter trust-region SLP from a starting point until a classified
    termination.  Deterministic given (model, x0, options)."""
    opts = options or SlpOptions()
    t0 = time.perf_counter()
    x0 = np.clip(np.asarray(x0, dtype=float), model.lo, model.hi)
    state = SlpState(x=x0, rho=opts.rho0, filter=Filter(opts.gamma_h, opts.gamma_f))
    state.point = evaluate(model, state.x, opts.h_norm)

    trace_file = open(opts.trace, "w") if opts.trace else None
    if trace_file:
        trace_file.write("iteration,h,f,rho,accepted,lp_pivots\n")

    status = "iteration-limit"
    try:
        while state.iteration < opts.max_iter:
            if opts.time_limit and time.perf_counter() - t0 > opts.time_limit:
                status = "time-limit"
                break
            pivots_before = state.lp_pivots
            rho_before = state.rho
            info = _step(model, state, opts)
            if trace_file:
                trace_file.write(
                    f"{state.iteration},{state.point.h:.17g},{state.point.objective:.17g},"
                    f"{rho_before:.6g},{int(info.accepted)},{state.lp_pivots - pivots_before}\n"
                )
            if info.converged:
                stat, comp, feas = kkt_error(model, state.x, state.duals)
                if stat <= opts.opt_tol:
                    status = "optimal-local"
                    break
                state.rho *= 0.5  # degenerate duals: keep tightening
            if info.stalled_infeasible:
                status = "infeasible-stall"
                break
            if state.rho < opts.rho_min:
                status = "feasible-stalled" if state.point.h < opts.feas_tol else "infeasible-stall"
                break
    finally:
        if trace_file:
            trace_file.close()

    pt = state.point
    if state.duals is not None:
        kkt = kkt_error(model, state.x, state.duals)
    else:
        kkt = kkt_error(model, state.x, np.zeros(model.n_rows))
    return SolveResult(
        status=status,
        x=state.x,
        f=pt.objective,
        h=pt.h,
        iterations=state.iteration,
        wall_time=time.perf_counter() - t0,
        kkt=kkt,
        lp_pivots=state.lp_pivots,
    )
