"""LP problem/solution containers shared by the simplex driver and presolve."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = -1, 0, 1

# Variable / slack statuses, shared with the pivot kernels.
AT_LO, AT_HI, BASIC, FREE = 0, 1, 2, 3

_SENSE_TEXT = {LE: "<=", EQ: "=", GE: ">="}


@dataclass(eq=False)
class LinearProgram:
    """min c.x subject to A x (sense) rhs and lo <= x <= hi."""

    c: np.ndarray
    A: sp.spmatrix
    sense: np.ndarray
    rhs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def copy(self) -> "LinearProgram":
        return LinearProgram(self.c.copy(), self.A.copy(), self.sense.copy(),
                             self.rhs.copy(), self.lo.copy(), self.hi.copy())


@dataclass(eq=False)
class Basis:
    """Simplex basis snapshot: statuses for structural columns and row slacks."""

    col_status: np.ndarray
    row_status: np.ndarray

    def valid_for(self, lp: LinearProgram) -> bool:
        m, n = lp.shape
        if self.col_status.shape[0] != n or self.row_status.shape[0] != m:
            return False
        basics = int(np.sum(self.col_status == BASIC)) + int(np.sum(self.row_status == BASIC))
        if basics != m:
            return False
        if np.any((self.col_status == AT_HI) & ~np.isfinite(lp.hi)):
            return False
        if np.any((self.col_status == AT_LO) & ~np.isfinite(lp.lo)):
            return False
        return True


@dataclass(eq=False)
class LpSolution:
    status: str  # optimal | infeasible | unbounded | iteration-limit | numerical
    x: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    objective: float
    basis: Basis | None
    iterations: int
    phase1_iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def dump_lp(lp: LinearProgram, name: str = "lp") -> str:
    """Plain-text rendering of an LP (rows, senses, bounds) for external
    cross-checking.  The format is stable but not a contract."""
    out = io.StringIO()
    m, n = lp.shape
    out.write(f"# {name}: {n} columns, {m} rows\n")
    out.write("minimize " + " + ".join(f"{lp.c[j]:.17g} x{j}" for j in range(n) if lp.c[j] != 0.0) + "\n")
    csr = lp.A.tocsr()
    for i in range(m):
        lhs = " + ".join(
            f"{csr.data[p]:.17g} x{csr.indices[p]}" for p in range(csr.indptr[i], csr.indptr[i + 1])
        )
        out.write(f"row{i}: {lhs} {_SENSE_TEXT[int(lp.sense[i])]} {lp.rhs[i]:.17g}\n")
    for j in range(n):
        lo = "-inf" if math.isinf(lp.lo[j]) else f"{lp.lo[j]:.17g}"
        hi = "inf" if math.isinf(lp.hi[j]) else f"{lp.hi[j]:.17g}"
        out.write(f"bound x{j}: [{lo}, {hi}]\n")
    return out.getvalue()
