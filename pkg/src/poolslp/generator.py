"""Synthetic instance generator with feasibility by construction.

A hidden reference operating point (bin blends and product recipes) is
drawn first; product windows are then centred on the compositions that
point produces, so every generated instance contains at least one interior
feasible solution of known cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import Bin, FlowSolution, PoolingInstance, Product, Raw

__all__ = ["GeneratorSpec", "generate_instance", "generate_with_reference"]


@dataclass(frozen=True)
class GeneratorSpec:
    """Dimensions and knobs for a synthetic instance.

    dims = (nutrients, raws, bins, products, straight-capable raws); the
    product windows get relative width ``bound_width`` around the hidden
    reference composition, and straight costs are ``straight_premium``
    times the bin-route costs."""

    dims: tuple[int, int, int, int, int]
    seed: int = 0
    nutrient_range: float = 2.0
    bound_width: float = 0.1
    straight_premium: float = 2.0

    def validate(self) -> None:
        n_, i_, m_, p_, s_ = self.dims
        if n_ < 1 or i_ < 1 or p_ < 1 or m_ < 0:
            raise ValueError("need at least one nutrient, raw and product")
        if s_ > i_:
            raise ValueError("straight-capable raws cannot exceed raw count")
        if m_ == 0 and s_ == 0:
            raise ValueError("products need bins or straights to be fed")
        if self.straight_premium <= 1.0:
            raise ValueError("straight premium must exceed 1")
        if self.bound_width < 0:
            raise ValueError("bound width must be nonnegative")


def generate_with_reference(spec: GeneratorSpec) -> tuple[PoolingInstance, FlowSolution]:
    """Generate an instance plus the hidden reference flow solution that is
    feasible by construction (violation at roundoff for any bound width)."""
    spec.validate()
    n_, i_, m_, p_, s_ = spec.dims
    rng = np.random.default_rng(spec.seed)

    comp = rng.uniform(0.0, spec.nutrient_range, size=(i_, n_))
    cost = rng.uniform(1.0, 10.0, size=i_)
    straight_raws = np.sort(rng.choice(i_, size=s_, replace=False))

    nutrients = tuple(f"n{l}" for l in range(n_))
    raws = tuple(
        Raw(f"r{i}", float(cost[i]), float(spec.straight_premium * cost[i]), tuple(comp[i]))
        for i in range(i_)
    )
    bins = tuple(Bin(f"b{j}") for j in range(m_))

    bin_arcs = tuple((i, j) for i in range(i_) for j in range(m_))
    straight_arcs = tuple((int(i), k) for i in straight_raws for k in range(p_))
    product_arcs = tuple((j, k) for j in range(m_) for k in range(p_))

    # hidden reference: one blend per bin, one recipe per product
    lam = rng.dirichlet(np.ones(i_), size=m_) if m_ else np.zeros((0, i_))
    m_comp = lam @ comp
    demand = rng.uniform(1.0, 10.0, size=p_)

    n_sources = m_ + s_
    mu = rng.dirichlet(np.ones(n_sources), size=p_)
    d_ref = np.zeros((p_, n_))
    f_out = np.zeros(len(product_arcs))
    f_str = np.zeros(len(straight_arcs))
    for k in range(p_):
        for j in range(m_):
            share = mu[k, j]
            d_ref[k] += share * m_comp[j]
            f_out[j * p_ + k] = share * demand[k]
        for a, i in enumerate(straight_raws):
            share = mu[k, m_ + a]
            d_ref[k] += share * comp[i]
            f_str[a * p_ + k] = share * demand[k]

    half = 0.5 * spec.bound_width
    products = tuple(
        Product(
            f"p{k}",
            float(demand[k]),
            tuple(float(v * (1.0 - half)) for v in d_ref[k]),
            tuple(float(v * (1.0 + half)) for v in d_ref[k]),
        )
        for k in range(p_)
    )

    instance = PoolingInstance(
        nutrients=nutrients,
        raws=raws,
        bins=bins,
        products=products,
        bin_arcs=bin_arcs,
        product_arcs=product_arcs,
        straight_arcs=straight_arcs,
        meta={"generator_seed": spec.seed, "dims": list(spec.dims)},
    )

    outflow = np.zeros(m_)
    for (j, k), f in zip(product_arcs, f_out):
        outflow[j] += f
    f_in = np.array([lam[j, i] * outflow[j] for (i, j) in bin_arcs]) if m_ else np.zeros(0)
    reference = FlowSolution(f_in, f_out, f_str)
    return instance, reference


def generate_instance(spec: GeneratorSpec) -> PoolingInstance:
    """Deterministic synthetic instance; see generate_with_reference."""
    return generate_with_reference(spec)[0]
