import numpy as np
import pytest
import scipy.sparse as sp

from poolslp.formulations import FormulationKind, build_model
from poolslp.multistart import random_start
from poolslp.nlpeval import evaluate, jacobian, kkt_error, lagrangian_hessian, linearize, objective_gradient

from _oracles import finite_difference_jacobian

ALL_KINDS = list(FormulationKind)


def tiny_model(obj_terms=(), row_terms=(), n=2, rows=None, lo=None, hi=None, obj=None):
    """Hand-rolled bilinear model for unit checks."""
    from poolslp.formulations import NlpModel

    rows = rows if rows is not None else []
    term_u, term_v, term_c, term_r = [], [], [], []
    for (u, v, c) in obj_terms:
        term_u.append(u); term_v.append(v); term_c.append(c); term_r.append(-1)
    for (u, v, c, r) in row_terms:
        term_u.append(u); term_v.append(v); term_c.append(c); term_r.append(r)
    mat = sp.csr_matrix(
        (np.array([e[1] for r in rows for e in r[0]]),
         (np.concatenate([[i] * len(r[0]) for i, r in enumerate(rows)]) if rows else np.zeros(0),
          np.array([e[0] for r in rows for e in r[0]]))),
        shape=(len(rows), n),
    ) if rows else sp.csr_matrix((0, n))
    return NlpModel(
        kind=FormulationKind.QQ,
        var_names=[f"x{i}" for i in range(n)],
        var_roles=[("v", i) for i in range(n)],
        lo=np.full(n, -np.inf) if lo is None else np.asarray(lo, dtype=float),
        hi=np.full(n, np.inf) if hi is None else np.asarray(hi, dtype=float),
        obj=np.zeros(n) if obj is None else np.asarray(obj, dtype=float),
        rows=mat,
        sense=np.array([r[1] for r in rows], dtype=np.int8),
        rhs=np.array([r[2] for r in rows], dtype=float),
        row_scale=np.ones(len(rows)),
        row_names=[f"r{i}" for i in range(len(rows))],
        term_u=np.array(term_u, dtype=np.int32),
        term_v=np.array(term_v, dtype=np.int32),
        term_coef=np.array(term_c, dtype=float),
        term_row=np.array(term_r, dtype=np.int32),
    )


def test_bilinear_objective_value():
    m = tiny_model(obj_terms=[(0, 1, 1.0)])
    assert evaluate(m, np.array([2.0, 3.0])).objective == pytest.approx(6.0)


def test_all_zero_point_violates_convexity_by_one(toy_2raw):
    model = build_model(toy_2raw, FormulationKind.QQ)
    pt = evaluate(model, np.zeros(model.n_vars))
    conv = [i for i, nm in enumerate(model.row_names) if nm.startswith("convexity")]
    assert all(pt.residuals[i] == pytest.approx(-1.0) for i in conv)
    assert pt.h >= 1.0


def test_product_rule_jacobian():
    m = tiny_model(row_terms=[(0, 1, 1.0, 0)], rows=[([], -1, 10.0)])
    jac = jacobian(m, np.array([2.0, 3.0])).toarray()
    assert jac[0, 0] == pytest.approx(3.0)
    assert jac[0, 1] == pytest.approx(2.0)


def test_linear_row_jacobian_constant(rng):
    m = tiny_model(rows=[([(0, 2.0), (1, -1.0)], 0, 1.0)])
    for _ in range(3):
        jac = jacobian(m, rng.normal(size=2)).toarray()
        assert jac[0].tolist() == [2.0, -1.0]


@pytest.mark.parametrize("kind", ALL_KINDS, ids=[k.value for k in ALL_KINDS])
def test_jacobian_matches_finite_differences(kind, toy_2raw, rng):
    model = build_model(toy_2raw, kind)
    for _ in range(20):
        x = random_start(model, rng) + rng.normal(scale=0.05, size=model.n_vars)
        jac = jacobian(model, x).toarray()
        fd = finite_difference_jacobian(model, x)
        scale = 1.0 + np.abs(fd).max()
        assert np.abs(jac - fd).max() <= 1e-5 * scale


def test_hessian_single_objective_term():
    m = tiny_model(obj_terms=[(0, 1, 1.0)])
    h = lagrangian_hessian(m, np.zeros(0)).toarray()
    assert h[0, 1] == 1.0 and h[1, 0] == 1.0
    assert h[0, 0] == 0.0 and h[1, 1] == 0.0


def test_hessian_zero_for_linear_objective():
    m = tiny_model(rows=[([(0, 1.0)], -1, 1.0)], obj=[1.0, 0.0])
    h = lagrangian_hessian(m, np.zeros(1)).toarray()
    assert not h.any()


def test_hessian_constraint_sign():
    # L = f - lam * g: term x0*x1 in a row with multiplier 2 contributes -2
    m = tiny_model(row_terms=[(0, 1, 1.0, 0)], rows=[([], -1, 10.0)])
    h = lagrangian_hessian(m, np.array([2.0])).toarray()
    assert h[0, 1] == pytest.approx(-2.0)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=[k.value for k in ALL_KINDS])
def test_hessian_symmetric_zero_diagonal(kind, toy_2raw, rng):
    model = build_model(toy_2raw, kind)
    lam = rng.normal(size=model.n_rows)
    h = lagrangian_hessian(model, lam).toarray()
    assert np.allclose(h, h.T)
    assert np.abs(np.diag(h)).max(initial=0.0) == 0.0


def test_linearize_bilinear_row_expansion():
    # row x0*x1 <= 10 at (2,3): 3 dx0 + 2 dx1 <= 10 - 6
    m = tiny_model(row_terms=[(0, 1, 1.0, 0)], rows=[([], -1, 10.0)],
                   lo=[0.0, 0.0], hi=[5.0, 5.0])
    sub = linearize(m, np.array([2.0, 3.0]), rho=1.0)
    assert sub.lp.A.toarray()[0].tolist() == [3.0, 2.0]
    assert sub.lp.rhs[0] == pytest.approx(4.0)
    assert sub.lp.lo.tolist() == [-1.0, -1.0]
    assert sub.lp.hi.tolist() == [1.0, 1.0]


def test_linearize_zero_step_feasible_at_feasible_point(toy_2raw):
    from poolslp.formulations import from_flows
    from poolslp.instance import FlowSolution

    model = build_model(toy_2raw, FormulationKind.QQ)
    flows = FlowSolution(np.array([7.5, 2.5]), np.array([10.0]), np.array([0.0, 0.0]))
    x = from_flows(toy_2raw, FormulationKind.QQ, flows, model)
    assert evaluate(model, x).h < 1e-9
    sub = linearize(model, x, rho=0.5)
    # at dx = 0 each linearized row must satisfy its sense against -residual
    r = sub.lp.rhs
    assert np.all(np.where(sub.lp.sense == -1, 0.0 <= r + 1e-9,
                           np.where(sub.lp.sense == 1, 0.0 >= r - 1e-9, np.abs(r) <= 1e-7)))


def test_linearize_second_order_remainder(toy_2raw, rng):
    model = build_model(toy_2raw, FormulationKind.QQ)
    x = random_start(model, rng)
    cmax = np.abs(model.term_coef).max()
    for rho in (1e-2, 1e-3):
        sub = linearize(model, x, rho)
        # any box step keeping the linearization exact has h = O(step^2)
        dx = rng.uniform(sub.lp.lo, sub.lp.hi)
        lin_resid = sub.lp.A @ dx - sub.lp.rhs
        # project the step onto the equality rows' null space crudely: just
        # bound the nonlinear remainder of rows the step keeps linearized-tight
        pt2 = evaluate(model, x + dx)
        remainder = np.abs(pt2.residuals - (evaluate(model, x).residuals + sub.lp.A @ dx))
        assert remainder.max() <= cmax * (np.abs(dx).max() ** 2) * model.n_vars + 1e-12


def test_kkt_zero_gradient_unconstrained():
    m = tiny_model(rows=[([(0, 1.0)], -1, 10.0)])
    stat, comp, feas = kkt_error(m, np.array([1.0, 0.0]), np.zeros(1))
    assert (stat, comp, feas) == (0.0, 0.0, 0.0)


def test_kkt_textbook_point():
    # min x s.t. x >= 1 at x = 1 with multiplier 1
    m = tiny_model(rows=[([(0, 1.0)], 1, 1.0)], n=1, obj=[1.0])
    stat, comp, feas = kkt_error(m, np.array([1.0]), np.array([1.0]))
    assert stat == pytest.approx(0.0, abs=1e-12)
    assert comp == pytest.approx(0.0, abs=1e-12)
    assert feas == pytest.approx(0.0, abs=1e-12)


def test_gradient_matches_fd(toy_2raw, rng):
    model = build_model(toy_2raw, FormulationKind.PQ)
    x = random_start(model, rng)
    g = objective_gradient(model, x)
    step = 1e-6
    for j in rng.choice(model.n_vars, size=4, replace=False):
        e = np.zeros(model.n_vars)
        e[j] = step
        fd = (evaluate(model, x + e).objective - evaluate(model, x - e).objective) / (2 * step)
        assert g[j] == pytest.approx(fd, abs=1e-6)
