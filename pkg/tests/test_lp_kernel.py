import numpy as np
import pytest
import scipy.sparse as sp

from poolslp.lp import (
    AT_HI,
    AT_LO,
    BASIC,
    Basis,
    LinearProgram,
    SolveLimits,
    dump_lp,
    presolve,
    solve,
)

from _oracles import lp_vertex_oracle, random_lp


def make_lp(c, a, sense, rhs, lo, hi):
    return LinearProgram(
        np.asarray(c, dtype=float),
        sp.csr_matrix(np.asarray(a, dtype=float)),
        np.asarray(sense, dtype=np.int8),
        np.asarray(rhs, dtype=float),
        np.asarray(lo, dtype=float),
        np.asarray(hi, dtype=float),
    )


class TestKnownProblems:
    def test_box_corner(self):
        lp = make_lp([-1, -1], [[1, 1]], [-1], [1], [0, 0], [1, 1])
        s = solve(lp)
        assert s.status == "optimal"
        assert s.objective == pytest.approx(-1.0)
        assert sorted(s.x) == pytest.approx([0.0, 1.0])

    def test_two_lower_bounds_dual(self):
        lp = make_lp([1], [[1], [1]], [1, 1], [1, 3], [-np.inf], [np.inf])
        s = solve(lp)
        assert s.objective == pytest.approx(3.0)
        assert s.duals[1] == pytest.approx(1.0)
        assert s.duals[0] == pytest.approx(0.0)

    def test_infeasible_crossed_bound_and_row(self):
        lp = make_lp([0.0], [[2.0]], [0], [4.0], [0.0], [1.0])
        assert solve(lp).status == "infeasible"

    def test_unbounded(self):
        lp = make_lp([-1.0], [[1.0]], [1], [0.0], [0.0], [np.inf])
        assert solve(lp).status == "unbounded"

    def test_iteration_limit_status(self):
        lp = random_lp(np.random.default_rng(5))
        s = solve(lp, limits=SolveLimits(max_iter=1))
        assert s.status in ("iteration-limit", "optimal")  # tiny LPs may finish in one

    def test_degenerate_cycling_guard(self):
        # Beale's classic cycling example (unbounded below without bounds;
        # boxed here): must terminate despite heavy degeneracy
        a = [[0.25, -8.0, -1.0, 9.0], [0.5, -12.0, -0.5, 3.0], [0.0, 0.0, 1.0, 0.0]]
        lp = make_lp([-0.75, 150.0, -0.02, 6.0], a, [-1, -1, -1], [0.0, 0.0, 1.0],
                     [0.0] * 4, [10.0] * 4)
        s = solve(lp)
        status, ref = lp_vertex_oracle(lp.c, lp.A.toarray(), lp.sense, lp.rhs, lp.lo, lp.hi)
        assert s.status == "optimal" == status
        assert s.objective == pytest.approx(ref, abs=1e-8)


class TestRandomAgainstVertexOracle:
    def test_twenty_dense_5x5(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            lp = random_lp(rng, max_vars=5, max_rows=5)
            s = solve(lp)
            status, ref = lp_vertex_oracle(lp.c, lp.A.toarray(), lp.sense, lp.rhs, lp.lo, lp.hi)
            assert s.status == status
            if status == "optimal":
                assert abs(s.objective - ref) <= 1e-8 * (1 + abs(ref))

    def test_duality_gap_and_signs(self):
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(40):
            lp = random_lp(rng)
            s = solve(lp)
            if s.status != "optimal":
                continue
            checked += 1
            act = lp.A @ s.x
            viol = np.max(np.where(lp.sense == -1, act - lp.rhs,
                                   np.where(lp.sense == 1, lp.rhs - act, np.abs(act - lp.rhs))),
                          initial=0.0)
            assert viol <= 1e-8 * (1 + np.abs(lp.rhs).max(initial=0.0))
            # duality: c.x = y.b + bound terms
            d = s.reduced_costs
            bound_term = 0.0
            for j in range(lp.shape[1]):
                if d[j] > 1e-9:
                    bound_term += d[j] * lp.lo[j]
                elif d[j] < -1e-9:
                    bound_term += d[j] * lp.hi[j]
            gap = abs(s.objective - (s.duals @ lp.rhs + bound_term))
            assert gap <= 1e-8 * (1 + abs(s.objective))
            # reduced-cost signs vs statuses
            for j in range(lp.shape[1]):
                st = s.basis.col_status[j]
                if st == AT_LO:
                    assert d[j] >= -1e-7
                elif st == AT_HI:
                    assert d[j] <= 1e-7
                elif st == BASIC:
                    assert abs(d[j]) <= 1e-7
        assert checked >= 20

    def test_warm_restart_zero_pivots(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            lp = random_lp(rng)
            s = solve(lp)
            if s.status != "optimal":
                continue
            s2 = solve(lp, warm_basis=s.basis)
            assert s2.status == "optimal"
            assert s2.iterations == 0
            assert s2.objective == pytest.approx(s.objective, abs=1e-12)


class TestPresolve:
    def test_singleton_equality_pins_variable(self):
        lp = make_lp([1.0], [[2.0]], [0], [4.0], [0.0], [10.0])
        red, (rs, cs), tr = presolve(lp)
        assert red.lo[0] * cs[0] == pytest.approx(2.0)
        assert red.hi[0] * cs[0] == pytest.approx(2.0)

    def test_equilibrated_lp_keeps_unit_scales(self):
        lp = make_lp([1.0, 1.0], [[1.0, -1.0], [1.0, 1.0]], [-1, -1], [1.0, 1.0],
                     [0.0, 0.0], [1.0, 1.0])
        _, (rs, cs), _ = presolve(lp)
        assert np.all(rs == 1.0) and np.all(cs == 1.0)

    def test_crossed_bounds_detected(self):
        lp = make_lp([0.0], [[2.0]], [0], [4.0], [0.0], [1.0])
        _, _, tr = presolve(lp)
        assert tr.infeasible

    def test_scaling_roundtrip(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            lp = random_lp(rng, max_vars=6, max_rows=6)
            # make it badly scaled
            lp.A = sp.csr_matrix(lp.A.toarray() * 1e4)
            lp.rhs = lp.rhs * 1e4
            s_plain = solve(lp, presolve=False)
            s_scaled = solve(lp, presolve=True)
            assert s_plain.status == s_scaled.status
            if s_plain.status == "optimal":
                assert s_scaled.objective == pytest.approx(s_plain.objective, abs=1e-9 * (1 + abs(s_plain.objective)))


def test_dump_lp_is_parseable_text():
    lp = make_lp([-1, -1], [[1, 1]], [-1], [1], [0, 0], [1, 1])
    text = dump_lp(lp, "toy")
    assert "minimize" in text
    assert "row0:" in text and "<= 1" in text
    assert "bound x1" in text
