"""Point evaluation for bilinear NLP models.

Objective, residuals, the scalar infeasibility measure, exact sparse
Jacobians, the (constant) Lagrangian Hessian, first-order optimality
errors, and the boxed linearization handed to the LP kernel.  Everything
here is a pure function of (model, point); a per-model workspace caching
the Jacobian sparsity pattern is built lazily.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .formulations import EQ, GE, LE, NlpModel
from .lp.model import LinearProgram

__all__ = [
    "EvalPoint",
    "LpSubproblem",
    "evaluate",
    "infeasibility",
    "objective_gradient",
    "jacobian",
    "lagrangian_hessian",
    "linearize",
    "kkt_error",
]


@dataclass(eq=False)
class EvalPoint:
    """A point with its cached objective, signed residuals, and infeasibility."""

    x: np.ndarray
    objective: float
    residuals: np.ndarray
    h: float


@dataclass(eq=False)
class LpSubproblem:
    """The trust-region LP: minimize g.dx subject to the linearized rows
    shifted to -residual and the step box max(lo-x, -rho) .. min(hi-x, rho)."""

    lp: LinearProgram
    x: np.ndarray
    rho: float


class _Workspace:
    """Fixed Jacobian sparsity (linear union bilinear incidence) plus data
    offsets so row terms can be scattered without re-sorting."""

    def __init__(self, model: NlpModel):
        m, n = model.rows.shape
        base = model.rows.tocoo()
        row_mask = model.term_row >= 0
        t_rows = model.term_row[row_mask]
        rows = np.concatenate([base.row, t_rows, t_rows])
        cols = np.concatenate([base.col, model.term_u[row_mask], model.term_v[row_mask]])
        data = np.concatenate([base.data, np.zeros(2 * int(row_mask.sum()))])
        pattern = sp.csr_matrix((data, (rows, cols)), shape=(m, n))
        pattern.sum_duplicates()
        pattern.sort_indices()
        self.jac_base = pattern

        pos = {}
        indptr, indices = pattern.indptr, pattern.indices
        for r in range(m):
            for p in range(indptr[r], indptr[r + 1]):
                pos[(r, indices[p])] = p
        self.row_mask = row_mask
        self.obj_mask = ~row_mask
        self.pos_u = np.array([pos[(r, u)] for r, u in zip(t_rows, model.term_u[row_mask])], dtype=np.int64)
        self.pos_v = np.array([pos[(r, v)] for r, v in zip(t_rows, model.term_v[row_mask])], dtype=np.int64)

        self.bound_scale = np.maximum(1.0, np.maximum(np.abs(np.where(np.isfinite(model.lo), model.lo, 0.0)),
                                                      np.abs(np.where(np.isfinite(model.hi), model.hi, 0.0))))


_workspaces: "weakref.WeakKeyDictionary[NlpModel, _Workspace]" = weakref.WeakKeyDictionary()


def _workspace(model: NlpModel) -> _Workspace:
    ws = _workspaces.get(model)
    if ws is None:
        ws = _Workspace(model)
        _workspaces[model] = ws
    return ws


def _row_violations(model: NlpModel, residuals: np.ndarray) -> np.ndarray:
    viol = np.where(model.sense == LE, np.maximum(residuals, 0.0),
                    np.where(model.sense == GE, np.maximum(-residuals, 0.0), np.abs(residuals)))
    return viol / model.row_scale


def infeasibility(model: NlpModel, x: np.ndarray, residuals: np.ndarray, norm: str = "inf") -> float:
    """Scalar constraint violation: scaled row violations plus bound violations."""
    ws = _workspace(model)
    viol = _row_violations(model, residuals)
    bviol = np.maximum(np.maximum(model.lo - x, x - model.hi), 0.0) / ws.bound_scale
    if norm == "one":
        return float(viol.sum() + bviol.sum())
    return float(max(viol.max(initial=0.0), bviol.max(initial=0.0)))


def evaluate(model: NlpModel, x: np.ndarray, h_norm: str = "inf") -> EvalPoint:
    """Objective, signed residuals (activity minus rhs) and infeasibility at x."""
    x = np.asarray(x, dtype=float)
    contrib = model.term_coef * x[model.term_u] * x[model.term_v]
    ws = _workspace(model)
    residuals = model.rows @ x - model.rhs
    if ws.row_mask.any():
        residuals += np.bincount(model.term_row[ws.row_mask], weights=contrib[ws.row_mask],
                                 minlength=model.n_rows)
    obj = float(model.obj @ x + contrib[ws.obj_mask].sum())
    return EvalPoint(x, obj, residuals, infeasibility(model, x, residuals, h_norm))


def objective_gradient(model: NlpModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    ws = _workspace(model)
    g = model.obj.copy()
    u, v, c = model.term_u[ws.obj_mask], model.term_v[ws.obj_mask], model.term_coef[ws.obj_mask]
    np.add.at(g, u, c * x[v])
    np.add.at(g, v, c * x[u])
    return g


def jacobian(model: NlpModel, x: np.ndarray) -> sp.csr_matrix:
    """Exact constraint Jacobian; sparsity is the union of the linear pattern
    and the bilinear incidences, so it is constant across points."""
    x = np.asarray(x, dtype=float)
    ws = _workspace(model)
    jac = ws.jac_base.copy()
    u, v, c = model.term_u[ws.row_mask], model.term_v[ws.row_mask], model.term_coef[ws.row_mask]
    np.add.at(jac.data, ws.pos_u, c * x[v])
    np.add.at(jac.data, ws.pos_v, c * x[u])
    return jac

def lagrangian_hessian(model: NlpModel, multipliers: np.ndarray) -> sp.csr_matrix:
    """Hessian of f - sum(multipliers * rows): constant in x, symmetric, and
    zero on the diagonal since every term is a product of two distinct
    variables."""
    multipliers = np.asarray(multipliers, dtype=float)
    if multipliers.shape[0]:
        row_mult = multipliers[np.maximum(model.term_row, 0)]
    else:
        row_mult = np.zeros(model.term_row.shape[0])
    weight = np.where(model.term_row >= 0, -row_mult, 1.0)
    vals = model.term_coef * weight
    n = model.n_vars
    h = sp.csr_matrix(
        (np.concatenate([vals, vals]),
         (np.concatenate([model.term_u, model.term_v]), np.concatenate([model.term_v, model.term_u]))),
        shape=(n, n),
    )
    h.sum_duplicates()
    return h


def linearize(model: NlpModel, x: np.ndarray, rho: float, point: EvalPoint | None = None) -> LpSubproblem:
    """First-order model of the NLP at x inside an inf-norm box of radius rho.

    x is clipped into the variable bounds first, so the step box is never
    empty."""
    if rho <= 0:
        raise ValueError("trust radius must be positive")
    x = np.clip(np.asarray(x, dtype=float), model.lo, model.hi)
    if point is None or point.x is not x:
        point = evaluate(model, x)
    g = objective_gradient(model, x)
    jac = jacobian(model, x)
    step_lo = np.maximum(model.lo - x, -rho)
    step_hi = np.minimum(model.hi - x, rho)
    lp = LinearProgram(c=g, A=jac, sense=model.sense.copy(), rhs=-point.residuals,
                       lo=step_lo, hi=step_hi)
    return LpSubproblem(lp=lp, x=x, rho=rho)


def kkt_error(model: NlpModel, x: np.ndarray, multipliers: np.ndarray,
              bound_tol: float = 1e-9) -> tuple[float, float, float]:
    """(stationarity, complementarity, feasibility) at a primal-dual point.

    Bound multipliers are recovered by projecting the dual residual
    grad f - J^T y onto the cone allowed by the active bounds: nonnegative
    at a lower bound, nonpositive at an upper bound, free on fixed
    variables."""
    x = np.asarray(x, dtype=float)
    multipliers = np.asarray(multipliers, dtype=float)
    point = evaluate(model, x)
    w = objective_gradient(model, x) - jacobian(model, x).T @ multipliers

    at_lo = x <= model.lo + bound_tol
    at_hi = x >= model.hi - bound_tol
    stat = np.abs(w)
    stat[at_lo & ~at_hi] = np.maximum(-w[at_lo & ~at_hi], 0.0)
    stat[at_hi & ~at_lo] = np.maximum(w[at_hi & ~at_lo], 0.0)
    stat[at_lo & at_hi] = 0.0
    stationarity = float(stat.max(initial=0.0))

    ineq = model.sense != EQ
    comp = float(np.abs(multipliers[ineq] * point.residuals[ineq]).max(initial=0.0))
    return stationarity, comp, point.h
