import numpy as np
import pytest

from poolslp.formulations import (
    FormulationKind,
    build_model,
    formulation_size,
    from_flows,
    lift_solution,
    pq_cut_residual,
    to_flows,
)
from poolslp.generator import GeneratorSpec, generate_instance, generate_with_reference
from poolslp.instance import evaluate_flow_solution
from poolslp.multistart import random_start
from poolslp.nlpeval import evaluate

ALL_KINDS = list(FormulationKind)


def test_af1_qq_size_matches_table():
    assert formulation_size((8, 16, 6, 25, 16), FormulationKind.QQ) == (925, 310)


def test_qqplus_adds_mp_rows():
    n, m = formulation_size((8, 16, 6, 25, 16), FormulationKind.QQPLUS)
    assert (n, m) == (925, 310 + 6 * 25)


def test_degenerate_dims():
    assert formulation_size((1, 1, 0, 1, 1), FormulationKind.QQ) == (3, 3)


def test_kind_parsing():
    assert FormulationKind.parse("qq+") is FormulationKind.QQPLUS
    assert FormulationKind.parse("PQ") is FormulationKind.PQ
    with pytest.raises(ValueError):
        FormulationKind.parse("quux")


@pytest.mark.parametrize("kind", ALL_KINDS, ids=[k.value for k in ALL_KINDS])
def test_counts_match_formula_on_dense_instances(kind, rng):
    for _ in range(6):
        dims = (
            int(rng.integers(1, 4)),
            int(rng.integers(1, 5)),
            int(rng.integers(1, 4)),
            int(rng.integers(1, 4)),
            0,
        )
        n_, i_, m_, p_, _ = dims
        s_ = int(rng.integers(1, i_ + 1))
        dims = (n_, i_, m_, p_, s_)
        inst = generate_instance(GeneratorSpec(dims=dims, seed=int(rng.integers(1 << 30))))
        model = build_model(inst, kind)
        assert (model.n_vars, model.n_rows) == formulation_size(dims, kind)


def test_single_raw_qq_model_forces_unique_point(toy_1x1x1):
    model = build_model(toy_1x1x1, FormulationKind.QQ)
    x = np.zeros(model.n_vars)
    x[model.groups["lam"]] = 1.0
    x[model.groups["mu_bin"]] = 1.0
    x[model.groups["mu_str"]] = 0.0
    x[model.groups["m"]] = 0.5
    x[model.groups["d"]] = 0.5
    x[model.groups["cm"]] = 1.0
    x[model.groups["cd"]] = 1.0
    pt = evaluate(model, x)
    assert pt.h <= 1e-12
    assert pt.objective == pytest.approx(10.0)  # demand * bin cost


@pytest.mark.parametrize("kind", ALL_KINDS, ids=[k.value for k in ALL_KINDS])
def test_lift_roundtrip_preserves_flows(kind, toy_2raw, rng):
    qq = build_model(toy_2raw, FormulationKind.QQ)
    other = build_model(toy_2raw, kind)
    x = random_start(qq, rng)
    lifted = lift_solution(toy_2raw, FormulationKind.QQ, kind, x, qq, other)
    back = lift_solution(toy_2raw, kind, FormulationKind.QQ, lifted, other, qq)
    f0 = to_flows(toy_2raw, FormulationKind.QQ, x, qq)
    f1 = to_flows(toy_2raw, FormulationKind.QQ, back, qq)
    for a, b in ((f0.bin_flows, f1.bin_flows), (f0.product_flows, f1.product_flows),
                 (f0.straight_flows, f1.straight_flows)):
        assert np.max(np.abs(a - b), initial=0.0) < 1e-12


@pytest.mark.parametrize("kind", ALL_KINDS, ids=[k.value for k in ALL_KINDS])
def test_lift_preserves_objective_of_consistent_points(kind, toy_2raw, rng):
    qq = build_model(toy_2raw, FormulationKind.QQ)
    other = build_model(toy_2raw, kind)
    for _ in range(10):
        x = random_start(qq, rng)
        lifted = lift_solution(toy_2raw, FormulationKind.QQ, kind, x, qq, other)
        assert evaluate(other, lifted).objective == pytest.approx(evaluate(qq, x).objective, rel=1e-12)


def test_demand_violation_becomes_scaled_convexity_residual(toy_2raw):
    pq = build_model(toy_2raw, FormulationKind.PQ)
    qq = build_model(toy_2raw, FormulationKind.QQ)
    x = np.zeros(pq.n_vars)
    x[pq.groups["lam"]] = [0.75, 0.25]
    x[pq.groups["f_out"]] = 9.0  # demand is 10: short by 1
    lifted = lift_solution(toy_2raw, FormulationKind.PQ, FormulationKind.QQ, x, pq, qq)
    pt = evaluate(qq, lifted)
    conv_rows = [i for i, name in enumerate(qq.row_names) if name == "convexity[p0]"]
    assert abs(pt.residuals[conv_rows[0]]) == pytest.approx(0.1, rel=1e-9)


def test_pq_cut_residual_zero_on_convexity_consistent_points(toy_2raw, rng):
    for kind in (FormulationKind.Q, FormulationKind.QQ):
        model = build_model(toy_2raw, kind)
        for _ in range(50):
            x = random_start(model, rng)
            assert pq_cut_residual(model, x) <= 1e-9


def test_pq_cut_residual_arithmetic(toy_2raw):
    q = build_model(toy_2raw, FormulationKind.Q)
    x = np.zeros(q.n_vars)
    x[q.groups["lam"]] = [0.45, 0.45]  # sums to 0.9
    x[q.groups["f_out"]] = 10.0
    assert pq_cut_residual(q, x) == pytest.approx(1.0)


def test_reference_point_feasible_in_every_formulation():
    spec = GeneratorSpec(dims=(2, 3, 2, 2, 2), seed=7)
    inst, ref = generate_with_reference(spec)
    cost, viol = evaluate_flow_solution(inst, ref)
    assert viol < 1e-9
    for kind in ALL_KINDS:
        model = build_model(inst, kind)
        x = from_flows(inst, kind, ref, model)
        pt = evaluate(model, x)
        assert pt.h < 1e-9, kind
        assert pt.objective == pytest.approx(cost, rel=1e-9)
