"""Independent brute-force oracles used by the test suite.

These deliberately avoid the library's own solution paths: the LP oracle
enumerates vertices outright, and the derivative oracle uses central
finite differences.
"""

from itertools import combinations

import numpy as np

from poolslp.nlpeval import evaluate


def lp_vertex_oracle(c, A, sense, rhs, lo, hi, tol=1e-9):
    """Exact bounded-LP optimum by enumerating candidate vertices.

    A vertex fixes n - t variables at finite bounds and solves the t
    variables left free from t tight rows; all remaining rows (equalities
    included) are checked by the feasibility filter.  Returns (status,
    objective) with status 'optimal' or 'infeasible'.  All variables must
    be bounded.
    """
    m, n = A.shape
    best = np.inf
    found = False

    for t in range(0, min(m, n) + 1):
        for rows in combinations(range(m), t):
            for free in combinations(range(n), t):
                fixed = [j for j in range(n) if j not in free]
                a_ff = A[np.ix_(rows, free)] if t else np.zeros((0, 0))
                if t and abs(np.linalg.det(a_ff)) < 1e-12:
                    continue
                k = len(fixed)
                # all lo/hi patterns for the fixed variables at once
                if k:
                    bits = (np.arange(1 << k)[:, None] >> np.arange(k)) & 1
                    x_fixed = np.where(bits == 0, lo[fixed], hi[fixed])  # (P, k)
                else:
                    x_fixed = np.zeros((1, 0))
                x = np.empty((x_fixed.shape[0], n))
                x[:, fixed] = x_fixed
                if t:
                    b = rhs[list(rows)][None, :] - x_fixed @ A[np.ix_(rows, fixed)].T
                    x[:, list(free)] = np.linalg.solve(a_ff, b.T).T
                ok = np.all(x >= lo[None, :] - tol, axis=1) & np.all(x <= hi[None, :] + tol, axis=1)
                if not ok.any():
                    continue
                act = x[ok] @ A.T
                res = act - rhs[None, :]
                row_ok = np.ones(act.shape[0], dtype=bool)
                for i in range(m):
                    if sense[i] < 0:
                        row_ok &= res[:, i] <= tol * (1 + abs(rhs[i]))
                    elif sense[i] > 0:
                        row_ok &= res[:, i] >= -tol * (1 + abs(rhs[i]))
                    else:
                        row_ok &= np.abs(res[:, i]) <= tol * (1 + abs(rhs[i]))
                if row_ok.any():
                    found = True
                    best = min(best, float((x[ok][row_ok] @ c).min()))
    return ("optimal", best) if found else ("infeasible", np.inf)


def finite_difference_jacobian(model, x, step=1e-6):
    """Central-difference Jacobian of the row residuals."""
    n = model.n_vars
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        rp = evaluate(model, x + e).residuals
        rm = evaluate(model, x - e).residuals
        cols.append((rp - rm) / (2 * step))
    return np.column_stack(cols)


def random_lp(rng, max_vars=8, max_rows=8, feasible_bias=True):
    """A random bounded LP in the library's container."""
    import scipy.sparse as sp

    from poolslp.lp import LinearProgram

    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(1, max_rows + 1))
    a = rng.normal(size=(m, n)) * (rng.random(size=(m, n)) < rng.uniform(0.5, 1.0))
    c = rng.normal(size=n)
    sense = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=m)
    x_interior = rng.uniform(0.2, 0.8, size=n)
    margin = float(rng.choice([0.0, 0.25])) if feasible_bias else -0.5
    rhs = a @ x_interior + np.where(sense == -1, margin, np.where(sense == 1, -margin, 0.0))
    return LinearProgram(c, sp.csr_matrix(a), sense, rhs, np.zeros(n), np.ones(n))
