"""Pure-Python bounded-variable primal simplex pivot loop.

Reference implementation of the kernel contract shared with the compiled
extension ``poolslp.lp._core``: one call runs pivots from the current
basis until optimality, unboundedness, an exhausted pivot budget, or a
refactorization request.  All state lives in caller-owned arrays so the
driver can refactorize and re-enter.

Return codes: 0 optimal, 1 unbounded, 2 budget exhausted, 4 refactor due,
5 numerically suspect pivot (driver refactorizes and retries).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .model import AT_HI, AT_LO, BASIC, FREE

IS_COMPILED = False

OPTIMAL, UNBOUNDED, BUDGET, REFRESH, SUSPECT = 0, 1, 2, 4, 5

_RATIO_TIE = 1e-9
_BLOCK_EPS = 1e-10
_DEGEN_STEP = 1e-10
_PIVOT_MIN = 1e-8


def pivot_loop(indptr, indices, data, ncols, c, lo, hi, status, head, x, binv,
               opt_tol, budget, bland_after, refactor_every, state):
    """Run primal simplex pivots in place.  ``state`` is the persistent
    [total_pivots, degenerate_streak, bland_mode] triple."""
    m = head.shape[0]
    a_t = sp.csr_matrix((data[: indptr[ncols]], indices[: indptr[ncols]], indptr[: ncols + 1]),
                        shape=(ncols, m))
    cols = np.arange(ncols)
    done_this_call = 0

    while True:
        if state[0] >= budget:
            return BUDGET
        if done_this_call >= refactor_every:
            return REFRESH

        c_b = c[head]
        y = binv.T @ c_b
        d = c[:ncols] - a_t @ y

        st = status[:ncols]
        elig = ((st == AT_LO) & (d < -opt_tol)) | ((st == AT_HI) & (d > opt_tol)) | \
               ((st == FREE) & (np.abs(d) > opt_tol))
        if not elig.any():
            return OPTIMAL
        if state[2]:
            q = int(cols[elig][0])
        else:
            score = np.where(elig, np.abs(d), -1.0)
            q = int(np.argmax(score))

        direction = 1.0
        if status[q] == AT_HI or (status[q] == FREE and d[q] > 0):
            direction = -1.0

        w = np.zeros(m)
        for p in range(indptr[q], indptr[q + 1]):
            w += data[p] * binv[:, indices[p]]

        rate = -direction * w
        bv = head
        xb = x[bv]
        ratios = np.full(m, np.inf)
        up = rate > _BLOCK_EPS
        dn = rate < -_BLOCK_EPS
        with np.errstate(invalid="ignore"):
            ratios[up] = (hi[bv[up]] - xb[up]) / rate[up]
            ratios[dn] = (lo[bv[dn]] - xb[dn]) / rate[dn]
        np.maximum(ratios, 0.0, out=ratios)

        t_own = hi[q] - lo[q]
        t_block = float(ratios.min()) if m else np.inf
        if not np.isfinite(t_block) and not np.isfinite(t_own):
            return UNBOUNDED
        window = t_block + _RATIO_TIE * (1.0 + t_block) if np.isfinite(t_block) else np.inf

        if t_own <= window:
            # bound flip: no basis change
            t = t_own
            x[bv] = xb + rate * t
            x[q] = hi[q] if direction > 0 else lo[q]
            status[q] = AT_HI if direction > 0 else AT_LO
        else:
            cand = np.flatnonzero(ratios <= window)
            pr = int(cand[np.argmax(np.abs(rate[cand]))])
            if abs(w[pr]) < _PIVOT_MIN:
                return SUSPECT
            t = float(ratios[pr])
            leaving = int(head[pr])
            x[bv] = xb + rate * t
            x[q] = x[q] + direction * t
            x[leaving] = hi[leaving] if rate[pr] > 0 else lo[leaving]
            status[leaving] = AT_HI if rate[pr] > 0 else AT_LO
            status[q] = BASIC
            head[pr] = q

            brow = binv[pr] / w[pr]
            binv -= np.outer(w, brow)
            binv[pr] = brow

        state[0] += 1
        done_this_call += 1
        if t <= _DEGEN_STEP:
            state[1] += 1
            if state[1] >= bland_after:
                state[2] = 1
        else:
            state[1] = 0
            state[2] = 0
