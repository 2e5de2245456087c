"""Bounded-variable primal simplex driver.

Standard form is A x + s = rhs with one slack per row (bounds encode the
sense).  A cold start uses the slack basis plus explicit artificial columns
for rows whose slack cannot host the initial residual; phase one minimizes
the total artificial mass, giving exact infeasibility detection.  A warm
basis is used directly when its vertex is primal feasible for the new data,
which is what makes repeated solves of neighbouring subproblems cheap.

The pivot loop itself lives in a kernel module (compiled or pure Python);
this driver owns phase logic, dense refactorization of the basis inverse,
and solution extraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernel as _kernel
from .model import AT_HI, AT_LO, BASIC, EQ, FREE, GE, LE, Basis, LinearProgram, LpSolution
from .presolve import presolve as _presolve
from .presolve import unscale_solution

__all__ = ["SolveLimits", "solve"]

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
BLAND_AFTER = 1000
REFACTOR_EVERY = 50


@dataclass
class SolveLimits:
    max_iter: int = 0  # 0 = automatic: 200 + 25 * (rows + cols)

    def resolve(self, m: int, n: int) -> int:
        return self.max_iter if self.max_iter > 0 else 200 + 25 * (m + n)


class _Workspace:
    """Standard-form arrays with room for slacks and artificials."""

    def __init__(self, lp: LinearProgram):
        m, n = lp.shape
        self.m, self.n = m, n
        a = lp.A.tocsc().copy()
        a.data[np.abs(a.data) < 1e-12] = 0.0  # drop numerical noise
        a.eliminate_zeros()
        a.sort_indices()
        nnz = a.nnz
        cap = n + 2 * m
        self.indptr = np.zeros(cap + 1, dtype=np.int32)
        self.indices = np.zeros(nnz + 2 * m, dtype=np.int32)
        self.data = np.zeros(nnz + 2 * m, dtype=float)
        self.indptr[: n + 1] = a.indptr
        self.indices[:nnz] = a.indices
        self.data[:nnz] = a.data
        for i in range(m):
            p = nnz + i
            self.indptr[n + 1 + i] = p + 1
            self.indices[p] = i
            self.data[p] = 1.0
        self.ncols = n + m

        self.lo = np.empty(cap)
        self.hi = np.empty(cap)
        self.lo[:n] = lp.lo
        self.hi[:n] = lp.hi
        # slack bounds encode the row sense: Ax + s = rhs
        self.lo[n: n + m] = np.where(lp.sense == GE, -np.inf, 0.0)
        self.hi[n: n + m] = np.where(lp.sense == LE, np.inf, 0.0)

        self.cost = np.zeros(cap)
        self.cost[:n] = lp.c
        self.rhs = lp.rhs.astype(float).copy()

        self.status = np.zeros(cap, dtype=np.int8)
        self.head = np.zeros(m, dtype=np.int32)
        self.x = np.zeros(cap)
        self.binv = np.eye(m)
        self.state = np.zeros(3, dtype=np.int64)
        self.n_art = 0
        self.pivots_at_refactor = -1
        self._mat: sp.csc_matrix | None = None

    def matrix(self) -> sp.csc_matrix:
        if self._mat is None or self._mat.shape[1] != self.ncols:
            nnz = self.indptr[self.ncols]
            self._mat = sp.csc_matrix(
                (self.data[:nnz], self.indices[:nnz], self.indptr[: self.ncols + 1]),
                shape=(self.m, self.ncols),
            )
        return self._mat

    def add_artificial(self, row: int, value: float) -> int:
        col = self.ncols
        p = self.indptr[col]
        self.indices[p] = row
        self.data[p] = 1.0
        self.indptr[col + 1] = p + 1
        if value > 0:
            self.lo[col], self.hi[col] = 0.0, np.inf
        else:
            self.lo[col], self.hi[col] = -np.inf, 0.0
        self.cost[col] = 0.0
        self.x[col] = value
        self.status[col] = BASIC
        self.ncols += 1
        self.n_art += 1
        self._mat = None
        return col

    def nonbasic_to_bounds(self, upto: int) -> None:
        st = self.status[:upto]
        x = self.x[:upto]
        np.copyto(x, self.lo[:upto], where=st == AT_LO)
        np.copyto(x, self.hi[:upto], where=st == AT_HI)
        np.copyto(x, 0.0, where=st == FREE)

    def refactor(self) -> bool:
        """Rebuild the basis inverse and basic values from scratch."""
        m = self.m
        starts = self.indptr[self.head]
        lens = self.indptr[self.head + 1] - starts
        total = int(lens.sum())
        flat = np.repeat(starts - np.concatenate([[0], np.cumsum(lens[:-1])]), lens) + np.arange(total)
        b = np.zeros((m, m))
        b[self.indices[flat], np.repeat(np.arange(m), lens)] = self.data[flat]
        try:
            self.binv = np.ascontiguousarray(np.linalg.inv(b))
        except np.linalg.LinAlgError:
            return False
        x_nb = self.x[: self.ncols].copy()
        x_nb[self.status[: self.ncols] == BASIC] = 0.0
        resid = self.rhs - self.matrix() @ x_nb
        self.x[self.head] = self.binv @ resid
        self.pivots_at_refactor = int(self.state[0])
        return True

    def reduced_costs(self, cost: np.ndarray, y: np.ndarray) -> np.ndarray:
        """cost - A^T y over the active columns."""
        nnz = int(self.indptr[self.ncols])
        if nnz == 0:
            return cost[: self.ncols].copy()
        contrib = self.data[:nnz] * y[self.indices[:nnz]]
        starts = np.minimum(self.indptr[: self.ncols], nnz - 1)
        sums = np.add.reduceat(contrib, starts)
        sums[np.diff(self.indptr[: self.ncols + 1]) == 0] = 0.0
        return cost[: self.ncols] - sums

    def duals(self, cost: np.ndarray) -> np.ndarray:
        return self.binv.T @ cost[self.head]

    def basic_infeasibility(self) -> float:
        xb = self.x[self.head]
        return float(np.maximum(np.maximum(self.lo[self.head] - xb, xb - self.hi[self.head]), 0.0).max(initial=0.0))


def _run_phase(ws: _Workspace, core, cost: np.ndarray, budget: int) -> int:
    """Drive the pivot kernel to a terminal code, refactorizing as needed."""
    suspect_rounds = 0
    while True:
        code = core.pivot_loop(
            ws.indptr, ws.indices, ws.data, int(ws.ncols), cost, ws.lo, ws.hi,
            ws.status, ws.head, ws.x, ws.binv,
            OPT_TOL, int(budget), BLAND_AFTER, REFACTOR_EVERY, ws.state,
        )
        if code == core.REFRESH:
            if not ws.refactor():
                return core.SUSPECT
            continue
        if code == core.SUSPECT:
            suspect_rounds += 1
            if suspect_rounds > 3 or not ws.refactor():
                return core.SUSPECT
            continue
        return code


def _cold_start(ws: _Workspace) -> None:
    """Slack basis; artificials absorb residuals the slacks cannot host."""
    n, m = ws.n, ws.m
    ws.ncols = n + m
    ws.n_art = 0
    ws.state[:] = 0
    ws._mat = None
    ws.status[:n] = np.where(np.isfinite(ws.lo[:n]), AT_LO,
                             np.where(np.isfinite(ws.hi[:n]), AT_HI, FREE))
    ws.nonbasic_to_bounds(n)
    struct = sp.csc_matrix(
        (ws.data[: ws.indptr[n]], ws.indices[: ws.indptr[n]], ws.indptr[: n + 1]), shape=(m, n)
    )
    resid = ws.rhs - struct @ ws.x[:n]
    ws.binv = np.eye(m)

    slods, shis = ws.lo[n: n + m], ws.hi[n: n + m]
    hosted = np.clip(resid, slods, shis)
    leftover = resid - hosted
    ok = np.abs(leftover) <= FEAS_TOL * (1.0 + np.abs(ws.rhs))
    srange = np.arange(n, n + m, dtype=np.int32)
    ws.status[n: n + m] = np.where(ok, BASIC, np.where(slods == 0.0, AT_LO, AT_HI))
    ws.x[n: n + m] = np.where(ok, resid, hosted)
    ws.head[:] = srange
    for i in np.flatnonzero(~ok):
        ws.head[i] = ws.add_artificial(int(i), float(leftover[i]))
    ws.pivots_at_refactor = 0  # slack/artificial basis inverse is exact


def _try_warm_start(ws: _Workspace, basis: Basis) -> bool:
    n, m = ws.n, ws.m
    ws.ncols = n + m
    ws.n_art = 0
    ws.state[:] = 0
    ws._mat = None
    st = ws.status[: n + m]
    st[:n] = basis.col_status
    st[n:] = basis.row_status
    # coerce statuses that no longer match the bounds
    lo_inf = ~np.isfinite(ws.lo[: n + m])
    hi_inf = ~np.isfinite(ws.hi[: n + m])
    bad_lo = (st == AT_LO) & lo_inf
    st[bad_lo] = np.where(hi_inf[bad_lo], FREE, AT_HI)
    bad_hi = (st == AT_HI) & hi_inf
    st[bad_hi] = np.where(lo_inf[bad_hi], FREE, AT_LO)
    basic = np.flatnonzero(st == BASIC)
    if basic.shape[0] != m:
        return False
    ws.head[:] = basic.astype(np.int32)
    ws.nonbasic_to_bounds(n + m)
    if not ws.refactor():
        return False
    scale = 1.0 + float(np.abs(ws.rhs).max(initial=0.0))
    return ws.basic_infeasibility() <= FEAS_TOL * scale


def solve(lp: LinearProgram, warm_basis: Basis | None = None,
          limits: SolveLimits | None = None, presolve: bool = True) -> LpSolution:
    """Solve an LP with the bounded-variable primal simplex.

    A warm basis whose vertex stays primal feasible skips phase one
    entirely; re-solving an LP from its own optimal basis takes 0 pivots.
    On numerical trouble the solve is retried cold once before giving up.
    """
    m, n = lp.shape
    limits = limits or SolveLimits()
    budget = limits.resolve(m, n)

    if presolve:
        scaled, _, transform = _presolve(lp)
        if transform.infeasible:
            return LpSolution("infeasible", np.zeros(n), np.zeros(m), np.zeros(n),
                              0.0, None, 0)
    else:
        scaled, transform = lp, None

    core = _kernel.core
    ws = _Workspace(scaled)

    warm_ok = False
    if warm_basis is not None and warm_basis.valid_for(scaled):
        warm_ok = _try_warm_start(ws, warm_basis)
    if not warm_ok:
        _cold_start(ws)

    sol = _solve_phases(ws, core, budget)
    if sol is None:
        # numerical trouble: retry once from a cold start
        _cold_start(ws)
        sol = _solve_phases(ws, core, budget)
    if sol is None:
        return LpSolution("numerical", np.zeros(n), np.zeros(m), np.zeros(n), 0.0, None,
                          int(ws.state[0]))

    status, p1_iters = sol
    x_scaled = ws.x[:n].copy()
    y_scaled = ws.duals(ws.cost)
    d_scaled = ws.reduced_costs(ws.cost, y_scaled)[:n]

    if transform is not None:
        x0, y0, d0 = unscale_solution(transform, x_scaled, y_scaled, d_scaled)
    else:
        x0, y0, d0 = x_scaled, y_scaled, d_scaled

    basis = None
    if status == "optimal":
        basis = Basis(ws.status[:n].copy(), ws.status[n: n + m].copy())
    objective = float(lp.c @ x0)
    return LpSolution(status, x0, y0, d0, objective, basis, int(ws.state[0]), p1_iters)


def _solve_phases(ws: _Workspace, core, budget: int) -> tuple[str, int] | None:
    """Run phase one (if artificials exist) then phase two.  Returns None on
    numerical failure so the caller can retry cold."""
    p1_iters = 0
    if ws.n_art > 0:
        cost1 = np.zeros_like(ws.cost)
        for col in range(ws.n + ws.m, ws.ncols):
            cost1[col] = 1.0 if ws.hi[col] > 0 else -1.0
        code = _run_phase(ws, core, cost1, budget)
        p1_iters = int(ws.state[0])
        if code == core.SUSPECT:
            return None
        if code == core.BUDGET:
            return "iteration-limit", p1_iters
        if code == core.UNBOUNDED:  # cannot happen: phase-1 objective >= 0
            return None
        infeas = float(np.abs(ws.x[ws.n + ws.m: ws.ncols]).sum())
        if infeas > FEAS_TOL * (1.0 + float(np.abs(ws.rhs).max(initial=0.0))) * max(1, ws.m):
            return "infeasible", p1_iters
        # pin artificials to zero for phase two; a basic artificial (stuck at
        # zero) is swapped for its row's slack, whose column is identical, so
        # the basis matrix and inverse are untouched
        for col in range(ws.n + ws.m, ws.ncols):
            ws.lo[col] = 0.0
            ws.hi[col] = 0.0
            if ws.status[col] == BASIC:
                row = int(ws.indices[ws.indptr[col]])
                slack = ws.n + row
                slot = int(np.flatnonzero(ws.head == col)[0])
                ws.head[slot] = slack
                ws.x[slack] = ws.x[col]
                ws.status[slack] = BASIC
            ws.status[col] = AT_LO
            ws.x[col] = 0.0

    for _ in range(4):
        code = _run_phase(ws, core, ws.cost, budget)
        if code == core.SUSPECT:
            return None
        if code == core.BUDGET:
            return "iteration-limit", p1_iters
        if code == core.UNBOUNDED:
            return "unbounded", p1_iters
        # certify on a freshly refactorized basis: values may have drifted,
        # and repricing can reopen the solve; a few rank-one updates cannot
        # drift a scaled basis meaningfully, so skip the refresh then
        drifted = ws.state[0] - ws.pivots_at_refactor > 8
        if drifted and not ws.refactor():
            return None
        scale = 1.0 + float(np.abs(ws.rhs).max(initial=0.0))
        if ws.basic_infeasibility() > 10.0 * FEAS_TOL * scale:
            return None
        if not drifted:
            return "optimal", p1_iters
    return None
