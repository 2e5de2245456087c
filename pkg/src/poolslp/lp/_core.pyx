# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, language_level=3
"""Compiled bounded-variable primal simplex pivot loop.

Same contract as ``poolslp.lp._core_py`` (the pure-Python twin); see that
module for the return-code documentation.  The driver owns refactorization
and phase logic, so this stays a single tight loop over C arrays.
"""

from libc.math cimport fabs, isfinite, INFINITY

IS_COMPILED = True

OPTIMAL, UNBOUNDED, BUDGET, REFRESH, SUSPECT = 0, 1, 2, 4, 5

cdef double _RATIO_TIE = 1e-9
cdef double _BLOCK_EPS = 1e-10
cdef double _DEGEN_STEP = 1e-10
cdef double _PIVOT_MIN = 1e-8


def pivot_loop(int[::1] indptr, int[::1] indices, double[::1] data, int ncols,
               double[::1] c, double[::1] lo, double[::1] hi,
               signed char[::1] status, int[::1] head,
               double[::1] x, double[:, ::1] binv,
               double opt_tol, long budget, long bland_after, long refactor_every,
               long[::1] state):
    cdef int m = head.shape[0]
    cdef long done = 0
    cdef double[::1] y = binv[0].copy()
    cdef double[::1] w = binv[0].copy()
    cdef double[::1] ratios = binv[0].copy()

    cdef int i, j, p, r, q, pr, leaving
    cdef bint eligible
    cdef double cb, dj, acc, best_score, best_dj, direction, rate, bound
    cdef double t_own, t_block, window, best_rate, t, piv
    cdef signed char st

    while True:
        if state[0] >= budget:
            return BUDGET
        if done >= refactor_every:
            return REFRESH

        # duals of the current basis: y = B^-T c_B
        for i in range(m):
            y[i] = 0.0
        for r in range(m):
            cb = c[head[r]]
            if cb != 0.0:
                for i in range(m):
                    y[i] += cb * binv[r, i]

        # pricing: Dantzig (largest |reduced cost|), or Bland once degenerate
        q = -1
        best_score = -1.0
        best_dj = 0.0
        for j in range(ncols):
            st = status[j]
            if st == 2:  # basic
                continue
            dj = c[j]
            for p in range(indptr[j], indptr[j + 1]):
                dj -= data[p] * y[indices[p]]
            if st == 0:
                eligible = dj < -opt_tol
            elif st == 1:
                eligible = dj > opt_tol
            else:  # free
                eligible = fabs(dj) > opt_tol
            if not eligible:
                continue
            if state[2]:
                q = j
                best_dj = dj
                break
            if fabs(dj) > best_score:
                best_score = fabs(dj)
                best_dj = dj
                q = j
        if q < 0:
            return OPTIMAL
        direction = -1.0 if (status[q] == 1 or (status[q] == 3 and best_dj > 0)) else 1.0

        # FTRAN: w = B^-1 A_q
        for i in range(m):
            w[i] = 0.0
        for p in range(indptr[q], indptr[q + 1]):
            acc = data[p]
            j = indices[p]
            for i in range(m):
                w[i] += acc * binv[i, j]

        # two-pass bounded ratio test
        t_block = INFINITY
        for r in range(m):
            rate = -direction * w[r]
            leaving = head[r]
            if rate > _BLOCK_EPS:
                bound = hi[leaving]
                ratios[r] = (bound - x[leaving]) / rate if isfinite(bound) else INFINITY
            elif rate < -_BLOCK_EPS:
                bound = lo[leaving]
                ratios[r] = (bound - x[leaving]) / rate if isfinite(bound) else INFINITY
            else:
                ratios[r] = INFINITY
            if ratios[r] < 0.0:
                ratios[r] = 0.0
            if ratios[r] < t_block:
                t_block = ratios[r]

        t_own = hi[q] - lo[q]
        if not isfinite(t_block) and not isfinite(t_own):
            return UNBOUNDED
        window = (t_block + _RATIO_TIE * (1.0 + t_block)) if isfinite(t_block) else INFINITY

        if t_own <= window:
            t = t_own
            for r in range(m):
                x[head[r]] += (-direction * w[r]) * t
            x[q] = hi[q] if direction > 0 else lo[q]
            status[q] = 1 if direction > 0 else 0
        else:
            pr = -1
            best_rate = -1.0
            for r in range(m):
                if ratios[r] <= window:
                    rate = fabs(w[r])
                    if rate > best_rate:
                        best_rate = rate
                        pr = r
            if pr < 0 or fabs(w[pr]) < _PIVOT_MIN:
                return SUSPECT
            t = ratios[pr]
            leaving = head[pr]
            for r in range(m):
                x[head[r]] += (-direction * w[r]) * t
            x[q] = x[q] + direction * t
            rate = -direction * w[pr]
            x[leaving] = hi[leaving] if rate > 0 else lo[leaving]
            status[leaving] = 1 if rate > 0 else 0
            status[q] = 2
            head[pr] = q

            piv = w[pr]
            for i in range(m):
                binv[pr, i] = binv[pr, i] / piv
            for r in range(m):
                if r != pr and w[r] != 0.0:
                    acc = w[r]
                    for i in range(m):
                        binv[r, i] -= acc * binv[pr, i]

        state[0] += 1
        done += 1
        if t <= _DEGEN_STEP:
            state[1] += 1
            if state[1] >= bland_after:
                state[2] = 1
        else:
            state[1] = 0
            state[2] = 0
