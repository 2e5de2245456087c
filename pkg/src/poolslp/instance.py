"""Pooling instance data model, validation, and flow-space evaluation.

An instance describes raw materials (with per-nutrient compositions and two
unit costs: via mixing bins, or direct to product as a "straight"), mixing
bins, products with firm demands and nutrient-composition windows, and the
sparse arc structure connecting them.  All masses share one unit, all costs
are currency per unit mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Raw",
    "Bin",
    "Product",
    "PoolingInstance",
    "FlowSolution",
    "Violation",
    "validate_instance",
    "evaluate_flow_solution",
]

INF = math.inf


@dataclass(frozen=True)
class Raw:
    """A raw material: bin-route cost, straight cost, and composition per nutrient."""

    name: str
    cost: float
    straight_cost: float
    composition: tuple[float, ...]


@dataclass(frozen=True)
class Bin:
    """A mixing bin with optional per-nutrient composition bounds (-inf/inf = free)."""

    name: str
    comp_lo: tuple[float, ...] | None = None
    comp_hi: tuple[float, ...] | None = None

    def has_bounds(self) -> bool:
        lo_set = self.comp_lo is not None and any(v > -INF for v in self.comp_lo)
        hi_set = self.comp_hi is not None and any(v < INF for v in self.comp_hi)
        return lo_set or hi_set


@dataclass(frozen=True)
class Product:
    """A product with a firm demanded tonnage and a composition window per nutrient.

    ``price`` is carried for completeness but does not enter the objective:
    with firm demands the revenue term is a constant.
    """

    name: str
    demand: float
    comp_lo: tuple[float, ...]
    comp_hi: tuple[float, ...]
    price: float = 0.0


@dataclass(frozen=True)
class PoolingInstance:
    """Immutable pooling problem data.

    Arcs are stored as index pairs into the ordered ``raws``/``bins``/
    ``products`` lists, in a canonical sorted order so downstream variable
    indexing is reproducible:

    * ``bin_arcs``      -- (raw, bin): raw may feed the bin,
    * ``product_arcs``  -- (bin, product): bin may feed the product,
    * ``straight_arcs`` -- (raw, product): raw may feed the product directly.
    """

    nutrients: tuple[str, ...]
    raws: tuple[Raw, ...]
    bins: tuple[Bin, ...]
    products: tuple[Product, ...]
    bin_arcs: tuple[tuple[int, int], ...]
    product_arcs: tuple[tuple[int, int], ...]
    straight_arcs: tuple[tuple[int, int], ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "bin_arcs", tuple(sorted(self.bin_arcs)))
        object.__setattr__(self, "product_arcs", tuple(sorted(self.product_arcs)))
        object.__setattr__(self, "straight_arcs", tuple(sorted(self.straight_arcs)))

    @property
    def n_nutrients(self) -> int:
        return len(self.nutrients)

    def composition_matrix(self) -> np.ndarray:
        """Raw compositions as an (n_raws, n_nutrients) array."""
        return np.array([r.composition for r in self.raws], dtype=float)

    def demands(self) -> np.ndarray:
        return np.array([p.demand for p in self.products], dtype=float)


@dataclass(frozen=True, eq=False)
class FlowSolution:
    """Physical mass flows, aligned with the instance arc tuples."""

    bin_flows: np.ndarray
    product_flows: np.ndarray
    straight_flows: np.ndarray

    @staticmethod
    def zeros(instance: PoolingInstance) -> "FlowSolution":
        return FlowSolution(
            np.zeros(len(instance.bin_arcs)),
            np.zeros(len(instance.product_arcs)),
            np.zeros(len(instance.straight_arcs)),
        )


@dataclass(frozen=True)
class Violation:
    """One broken invariant: the offending field and the rule it breaks."""

    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


def validate_instance(instance: PoolingInstance) -> list[Violation]:
    """Check all instance invariants; an empty list means the data is sound.

    Violations are data, not exceptions: callers decide whether to abort.
    """
    out: list[Violation] = []
    nn = instance.n_nutrients

    def dup_check(names, label):
        seen = set()
        for name in names:
            if name in seen:
                out.append(Violation(label, f"duplicate identifier {name!r}"))
            seen.add(name)

    dup_check(instance.nutrients, "nutrients")
    dup_check([r.name for r in instance.raws], "raws")
    dup_check([b.name for b in instance.bins], "bins")
    dup_check([p.name for p in instance.products], "products")

    for i, raw in enumerate(instance.raws):
        fld = f"raws[{i}] {raw.name!r}"
        if len(raw.composition) != nn:
            out.append(Violation(fld, f"composition has {len(raw.composition)} entries, expected {nn}"))
        if any(v < 0 for v in raw.composition):
            out.append(Violation(fld, "negative nutrient composition"))
        if raw.straight_cost < raw.cost:
            out.append(Violation(fld, f"straight cost {raw.straight_cost} below bin cost {raw.cost}"))

    for j, b in enumerate(instance.bins):
        fld = f"bins[{j}] {b.name!r}"
        for side in (b.comp_lo, b.comp_hi):
            if side is not None and len(side) != nn:
                out.append(Violation(fld, "composition bound length mismatch"))
        if b.comp_lo is not None and b.comp_hi is not None and len(b.comp_lo) == len(b.comp_hi):
            for l, (lo, hi) in enumerate(zip(b.comp_lo, b.comp_hi)):
                if lo > hi:
                    out.append(Violation(fld, f"crossed bounds for nutrient {instance.nutrients[l]!r}"))

    for k, p in enumerate(instance.products):
        fld = f"products[{k}] {p.name!r}"
        if not p.demand > 0:
            out.append(Violation(fld, f"demand {p.demand} is not positive"))
        if len(p.comp_lo) != nn or len(p.comp_hi) != nn:
            out.append(Violation(fld, "composition bound length mismatch"))
        else:
            for l, (lo, hi) in enumerate(zip(p.comp_lo, p.comp_hi)):
                if lo > hi:
                    out.append(Violation(fld, f"crossed bounds for nutrient {instance.nutrients[l]!r}"))

    ni, nj, nk = len(instance.raws), len(instance.bins), len(instance.products)
    for (i, j) in instance.bin_arcs:
        if not (0 <= i < ni and 0 <= j < nj):
            out.append(Violation("bin_arcs", f"arc ({i},{j}) out of range"))
    for (j, k) in instance.product_arcs:
        if not (0 <= j < nj and 0 <= k < nk):
            out.append(Violation("product_arcs", f"arc ({j},{k}) out of range"))
    for (i, k) in instance.straight_arcs:
        if not (0 <= i < ni and 0 <= k < nk):
            out.append(Violation("straight_arcs", f"arc ({i},{k}) out of range"))

    fed_bins = {j for (_, j) in instance.bin_arcs}
    for j, b in enumerate(instance.bins):
        if j not in fed_bins:
            out.append(Violation(f"bins[{j}] {b.name!r}", "no incoming arc from any raw"))
    fed_products = {k for (_, k) in instance.product_arcs} | {k for (_, k) in instance.straight_arcs}
    for k, p in enumerate(instance.products):
        if k not in fed_products:
            out.append(Violation(f"products[{k}] {p.name!r}", "no incoming arc (bin or straight)"))

    return out


def evaluate_flow_solution(
    instance: PoolingInstance, sol: FlowSolution
) -> tuple[float, float]:
    """Cost and worst scaled constraint violation of a flow-space solution.

    Cost is the bin-route raw spend plus the straight spend.  The violation
    is the max over: product demand balance and nutrient-window residuals
    (scaled by max(1, demand)), bin composition-window and mass-balance
    residuals (scaled by max(1, bin inflow)), and flow nonnegativity.  A bin
    with outflow but no inflow has undefined composition and contributes a
    violation equal to its outflow.
    """
    r = instance.composition_matrix()
    nj, nk = len(instance.bins), len(instance.products)
    nn = instance.n_nutrients

    fij = np.asarray(sol.bin_flows, dtype=float)
    fjk = np.asarray(sol.product_flows, dtype=float)
    fik = np.asarray(sol.straight_flows, dtype=float)

    cost = 0.0
    for (i, _), f in zip(instance.bin_arcs, fij):
        cost += instance.raws[i].cost * f
    for (i, _), f in zip(instance.straight_arcs, fik):
        cost += instance.raws[i].straight_cost * f

    worst = 0.0
    for arr in (fij, fjk, fik):
        if arr.size:
            worst = max(worst, float(np.max(-arr, initial=0.0)))

    # Bin inflows, outflows and inflow-implied compositions.
    inflow = np.zeros(nj)
    nutrient_in = np.zeros((nj, nn))
    for (i, j), f in zip(instance.bin_arcs, fij):
        inflow[j] += f
        nutrient_in[j] += f * r[i]
    outflow = np.zeros(nj)
    for (j, _), f in zip(instance.product_arcs, fjk):
        outflow[j] += f

    comp = np.zeros((nj, nn))
    for j in range(nj):
        scale = max(1.0, inflow[j])
        if inflow[j] > 0:
            comp[j] = nutrient_in[j] / inflow[j]
            worst = max(worst, abs(inflow[j] - outflow[j]) / scale)
            b = instance.bins[j]
            if b.comp_lo is not None:
                for l in range(nn):
                    worst = max(worst, (b.comp_lo[l] - comp[j, l]) * inflow[j] / scale)
            if b.comp_hi is not None:
                for l in range(nn):
                    worst = max(worst, (comp[j, l] - b.comp_hi[l]) * inflow[j] / scale)
        elif outflow[j] > 0:
            worst = max(worst, outflow[j])

    # Product balances and nutrient windows against inflow-implied compositions.
    p_inflow = np.zeros(nk)
    p_nutrient = np.zeros((nk, nn))
    for (j, k), f in zip(instance.product_arcs, fjk):
        p_inflow[k] += f
        p_nutrient[k] += f * comp[j]
    for (i, k), f in zip(instance.straight_arcs, fik):
        p_inflow[k] += f
        p_nutrient[k] += f * r[i]

    for k, p in enumerate(instance.products):
        scale = max(1.0, p.demand)
        worst = max(worst, abs(p_inflow[k] - p.demand) / scale)
        if p_inflow[k] > 0:
            d = p_nutrient[k] / p_inflow[k]
            for l in range(nn):
                worst = max(worst, (p.comp_lo[l] - d[l]) * p_inflow[k] / scale)
                worst = max(worst, (d[l] - p.comp_hi[l]) * p_inflow[k] / scale)

    return float(cost), float(worst)
