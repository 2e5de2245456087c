"""LP presolve: singleton-row bound tightening and geometric-mean scaling.

Scaling factors are rounded to powers of two so applying and undoing them
is exact in binary floating point.  The transform record carries enough to
map a scaled solution back and to repair duals for bounds introduced by
singleton rows.  Everything operates on raw CSR arrays; this sits on the
hot path of every trust-region subproblem.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .model import EQ, GE, LE, LinearProgram

__all__ = ["PresolveTransform", "presolve", "unscale_solution"]

DROP_TOL = 1e-12  # matrix entries below this are numerical noise
_LOG2_CAP = 20.0


@dataclass(eq=False)
class PresolveTransform:
    row_scale: np.ndarray
    col_scale: np.ndarray
    # var -> (row, coef) of the singleton row that produced the binding bound
    lo_source: dict[int, tuple[int, float]] = field(default_factory=dict)
    hi_source: dict[int, tuple[int, float]] = field(default_factory=dict)
    # bounds after tightening, in original units (for dual repair)
    tight_lo: np.ndarray | None = None
    tight_hi: np.ndarray | None = None
    infeasible: bool = False


def _pow2(raw: np.ndarray) -> np.ndarray:
    """Round positive factors to powers of two (exact to apply and undo)."""
    out = np.ones_like(raw)
    ok = (raw > 0) & np.isfinite(raw)
    out[ok] = np.exp2(np.clip(np.round(np.log2(raw[ok])), -_LOG2_CAP, _LOG2_CAP))
    return out


def _segment_scales(absdata: np.ndarray, seg_ptr: np.ndarray) -> np.ndarray:
    """Geometric-mean equilibration factors for CSR-layout segments."""
    n_seg = seg_ptr.shape[0] - 1
    out = np.ones(n_seg)
    if absdata.shape[0] == 0:
        return out
    nonempty = np.flatnonzero(np.diff(seg_ptr) > 0)
    starts = seg_ptr[nonempty]
    mx = np.maximum.reduceat(absdata, starts)
    mn = np.minimum.reduceat(absdata, starts)
    out[nonempty] = _pow2(1.0 / np.sqrt(mx * mn))
    return out


def presolve(lp: LinearProgram, passes: int = 2) -> tuple[LinearProgram, tuple[np.ndarray, np.ndarray], PresolveTransform]:
    """Tighten bounds from singleton rows, then equilibrate rows and columns.

    Returns the transformed LP, the (row, column) scaling vectors, and a
    transform record.  Crossed bounds after tightening mark the record
    infeasible and short-circuit solving.
    """
    m, n = lp.shape
    lo, hi = lp.lo.copy(), lp.hi.copy()
    transform = PresolveTransform(np.ones(m), np.ones(n))

    a = lp.A.tocsr().copy()
    if np.any(np.abs(a.data) < DROP_TOL):
        a.data[np.abs(a.data) < DROP_TOL] = 0.0
        a.eliminate_zeros()
    data, indices, indptr = a.data, a.indices, a.indptr
    nnz_per_row = np.diff(indptr)

    for i in np.flatnonzero(nnz_per_row == 1):
        p = indptr[i]
        j, coef = int(indices[p]), float(data[p])
        val = lp.rhs[i] / coef
        sense = int(lp.sense[i])
        if sense == EQ:
            up = down = True
        else:
            # coef*x <= b caps x from above when coef > 0, from below when < 0
            up = (sense == LE) == (coef > 0)
            down = not up
        if up and val < hi[j]:
            hi[j] = val
            transform.hi_source[j] = (i, coef)
        if down and val > lo[j]:
            lo[j] = val
            transform.lo_source[j] = (i, coef)

    transform.tight_lo, transform.tight_hi = lo, hi
    crossed = lo > hi + 1e-12 * np.maximum(1.0, np.where(np.isfinite(lo), np.abs(lo), 1.0))
    if np.any(crossed & np.isfinite(lo)):
        transform.infeasible = True
        return lp, (transform.row_scale, transform.col_scale), transform

    data = data.astype(float, copy=True)
    rows_of_entry = np.repeat(np.arange(m), nnz_per_row)
    r_scale = np.ones(m)
    c_scale = np.ones(n)
    absdata = np.abs(data)
    for _ in range(passes):
        rs = _segment_scales(absdata, indptr)
        data *= rs[rows_of_entry]
        r_scale *= rs

        absdata = np.abs(data)
        colmax = np.zeros(n)
        colmin = np.full(n, np.inf)
        np.maximum.at(colmax, indices, absdata)
        np.minimum.at(colmin, indices, absdata)
        cs = np.ones(n)
        ok = colmax > 0
        cs[ok] = _pow2(1.0 / np.sqrt(colmax[ok] * colmin[ok]))
        data *= cs[indices]
        c_scale *= cs
        absdata = np.abs(data)

    scaled = LinearProgram(
        c=lp.c * c_scale,
        A=sp.csr_matrix((data, indices, indptr), shape=(m, n)),
        sense=lp.sense,
        rhs=lp.rhs * r_scale,
        lo=lo / c_scale,
        hi=hi / c_scale,
    )
    transform.row_scale = r_scale
    transform.col_scale = c_scale
    return scaled, (r_scale, c_scale), transform


def unscale_solution(transform: PresolveTransform, x: np.ndarray, duals: np.ndarray,
                     reduced: np.ndarray, bound_tol: float = 1e-9):
    """Map a scaled solution back to original units and repair duals for
    bounds that presolve created from singleton rows."""
    x0 = x * transform.col_scale
    y0 = duals * transform.row_scale
    d0 = reduced / transform.col_scale

    hi, lo = transform.tight_hi, transform.tight_lo
    for j, (i, coef) in transform.hi_source.items():
        if x0[j] >= hi[j] - bound_tol * max(1.0, abs(hi[j])) and d0[j] != 0.0:
            y0[i] += d0[j] / coef
            d0[j] = 0.0
    for j, (i, coef) in transform.lo_source.items():
        if x0[j] <= lo[j] + bound_tol * max(1.0, abs(lo[j])) and d0[j] != 0.0:
            y0[i] += d0[j] / coef
            d0[j] = 0.0
    return x0, y0, d0
