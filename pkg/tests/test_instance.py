import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poolslp.instance import (
    Bin,
    FlowSolution,
    PoolingInstance,
    Product,
    Raw,
    evaluate_flow_solution,
    validate_instance,
)


def test_well_formed_instance_has_no_violations(toy_1x1x1):
    assert validate_instance(toy_1x1x1) == []


def test_straight_cost_below_bin_cost_is_flagged(toy_1x1x1):
    bad = PoolingInstance(
        nutrients=toy_1x1x1.nutrients,
        raws=(Raw("r0", 2.0, 1.0, (0.5,)),),
        bins=toy_1x1x1.bins,
        products=toy_1x1x1.products,
        bin_arcs=toy_1x1x1.bin_arcs,
        product_arcs=toy_1x1x1.product_arcs,
        straight_arcs=toy_1x1x1.straight_arcs,
    )
    violations = validate_instance(bad)
    assert len(violations) == 1
    assert "r0" in violations[0].field
    assert "straight cost" in violations[0].message


def test_unfed_bin_is_flagged(toy_1x1x1):
    bad = PoolingInstance(
        nutrients=toy_1x1x1.nutrients,
        raws=toy_1x1x1.raws,
        bins=(Bin("b0"), Bin("lonely")),
        products=toy_1x1x1.products,
        bin_arcs=((0, 0),),
        product_arcs=((0, 0),),
        straight_arcs=(),
    )
    violations = validate_instance(bad)
    assert len(violations) == 1
    assert "lonely" in violations[0].field


def test_unfed_product_and_bad_demand_flagged(toy_1x1x1):
    bad = PoolingInstance(
        nutrients=("n1",),
        raws=toy_1x1x1.raws,
        bins=toy_1x1x1.bins,
        products=(Product("p0", 0.0, (0.4,), (0.6,)), Product("p1", 5.0, (0.6,), (0.4,))),
        bin_arcs=((0, 0),),
        product_arcs=((0, 0),),
        straight_arcs=(),
    )
    messages = [str(v) for v in validate_instance(bad)]
    assert any("demand" in m for m in messages)
    assert any("crossed" in m for m in messages)
    assert any("no incoming arc" in m for m in messages)


def test_duplicate_names_flagged(toy_1x1x1):
    bad = PoolingInstance(
        nutrients=("n1", "n1"),
        raws=toy_1x1x1.raws,
        bins=toy_1x1x1.bins,
        products=toy_1x1x1.products,
        bin_arcs=toy_1x1x1.bin_arcs,
        product_arcs=toy_1x1x1.product_arcs,
        straight_arcs=toy_1x1x1.straight_arcs,
    )
    assert any("duplicate" in v.message for v in validate_instance(bad))


class TestEvaluateFlowSolution:
    def test_pass_through_chain(self, toy_1x1x1):
        sol = FlowSolution(np.array([10.0]), np.array([10.0]), np.array([0.0]))
        cost, viol = evaluate_flow_solution(toy_1x1x1, sol)
        assert cost == pytest.approx(10.0)
        assert viol == pytest.approx(0.0, abs=1e-12)

    def test_short_demand_shows_scaled_violation(self, toy_1x1x1):
        sol = FlowSolution(np.array([9.0]), np.array([9.0]), np.array([0.0]))
        cost, viol = evaluate_flow_solution(toy_1x1x1, sol)
        assert viol == pytest.approx(0.1)

    def test_zero_inflow_bin_with_outflow(self, toy_1x1x1):
        sol = FlowSolution(np.array([0.0]), np.array([10.0]), np.array([0.0]))
        _, viol = evaluate_flow_solution(toy_1x1x1, sol)
        assert viol >= 10.0

    def test_nutrient_window_violation(self, toy_2raw):
        # pure rich raw: composition 1.0 above the 0.6 ceiling
        sol = FlowSolution(np.array([0.0, 10.0]), np.array([10.0]), np.array([0.0, 0.0]))
        cost, viol = evaluate_flow_solution(toy_2raw, sol)
        assert cost == pytest.approx(30.0)
        # mass excess (1.0 - 0.6) * 10 scaled by demand 10
        assert viol == pytest.approx(0.4)

    def test_cost_linear_in_flows(self, toy_2raw, rng):
        def rand_sol():
            return FlowSolution(rng.uniform(0, 5, 2), rng.uniform(0, 5, 1), rng.uniform(0, 5, 2))

        a, b = rand_sol(), rand_sol()
        combined = FlowSolution(
            a.bin_flows + b.bin_flows,
            a.product_flows + b.product_flows,
            a.straight_flows + b.straight_flows,
        )
        ca, _ = evaluate_flow_solution(toy_2raw, a)
        cb, _ = evaluate_flow_solution(toy_2raw, b)
        cc, _ = evaluate_flow_solution(toy_2raw, combined)
        assert cc == pytest.approx(ca + cb, rel=1e-12)

    @given(alpha=st.floats(min_value=1.0, max_value=50.0))
    @settings(max_examples=30, deadline=None)
    def test_scaling_invariance_of_nutrient_components(self, alpha):
        # infeasible composition so the nutrient violation is active
        inst = PoolingInstance(
            nutrients=("n1",),
            raws=(Raw("a", 1.0, 2.0, (1.0,)),),
            bins=(Bin("b0"),),
            products=(Product("p0", 2.0, (0.0,), (0.5,)),),
            bin_arcs=((0, 0),),
            product_arcs=((0, 0),),
            straight_arcs=(),
        )
        scaled = PoolingInstance(
            nutrients=inst.nutrients,
            raws=inst.raws,
            bins=inst.bins,
            products=(Product("p0", 2.0 * alpha, (0.0,), (0.5,)),),
            bin_arcs=inst.bin_arcs,
            product_arcs=inst.product_arcs,
            straight_arcs=inst.straight_arcs,
        )
        base = FlowSolution(np.array([2.0]), np.array([2.0]), np.zeros(0))
        big = FlowSolution(np.array([2.0 * alpha]), np.array([2.0 * alpha]), np.zeros(0))
        cost1, viol1 = evaluate_flow_solution(inst, base)
        cost2, viol2 = evaluate_flow_solution(scaled, big)
        assert cost2 == pytest.approx(alpha * cost1, rel=1e-9)
        assert viol2 == pytest.approx(viol1, rel=1e-9)
