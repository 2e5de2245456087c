"""Bilinear NLP builders for the pooling formulations.

Five closely related formulations are supported.  The flow family keeps
mass flows as variables (Q without cuts, PQ with the redundant
convexity-times-flow cuts, PQS with explicit product compositions); the
proportion family (QQ, QQPLUS) replaces all flows by per-product fractions
and prices pools and products explicitly, so the objective becomes linear
and every nonlinearity lives in the constraints.

All demand rows are equalities: demands are firm orders, and the revenue
half of the objective (a constant under firm orders) is dropped.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .instance import PoolingInstance, FlowSolution, validate_instance

__all__ = [
    "FormulationKind",
    "NlpModel",
    "build_model",
    "formulation_size",
    "lift_solution",
    "to_flows",
    "from_flows",
    "pq_cut_residual",
]

LE, EQ, GE = -1, 0, 1

INF = math.inf


class FormulationKind(enum.Enum):
    Q = "q"
    PQ = "pq"
    PQS = "pqs"
    QQ = "qq"
    QQPLUS = "qq+"

    @classmethod
    def parse(cls, text: str) -> "FormulationKind":
        try:
            return cls(text.strip().lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown formulation {text!r} (expected one of {names})") from None

    @property
    def uses_flows(self) -> bool:
        return self in (FormulationKind.Q, FormulationKind.PQ, FormulationKind.PQS)


@dataclass(eq=False)
class NlpModel:
    """A bilinear NLP: bounded variables, sparse linear rows, and a list of
    rank-one bilinear contributions attached to rows or to the objective.

    Row activity is ``rows @ x`` plus the bilinear terms targeting the row;
    the objective is ``obj @ x`` plus terms with target -1.  ``row_scale``
    holds the denominator used when folding a row residual into the scalar
    infeasibility measure.
    """

    kind: FormulationKind
    var_names: list[str]
    var_roles: list[tuple]
    lo: np.ndarray
    hi: np.ndarray
    obj: np.ndarray
    rows: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    row_scale: np.ndarray
    row_names: list[str]
    term_u: np.ndarray
    term_v: np.ndarray
    term_coef: np.ndarray
    term_row: np.ndarray
    groups: dict[str, np.ndarray] = field(default_factory=dict)
    instance: PoolingInstance | None = None

    @property
    def n_vars(self) -> int:
        return self.lo.shape[0]

    @property
    def n_rows(self) -> int:
        return self.rhs.shape[0]

    def check_consistent(self) -> None:
        """Raise if structural invariants are broken (debug aid for builders)."""
        n = self.n_vars
        if np.any(self.term_u == self.term_v):
            raise ValueError("bilinear term with identical variables")
        for arr in (self.term_u, self.term_v):
            if arr.size and (arr.min() < 0 or arr.max() >= n):
                raise ValueError("bilinear term references unknown variable")
        if np.any(self.lo > self.hi):
            raise ValueError("crossed variable bounds")
        if len(self.var_roles) != n:
            raise ValueError("var_roles does not cover every variable")
        touched = np.zeros(self.n_rows, dtype=bool)
        touched[np.diff(self.rows.indptr) > 0] = True
        touched[self.term_row[self.term_row >= 0]] = True
        if not touched.all():
            raise ValueError("row with no linear entry and no bilinear term")


class _Builder:
    def __init__(self):
        self.names: list[str] = []
        self.roles: list[tuple] = []
        self.lo: list[float] = []
        self.hi: list[float] = []
        self.obj: dict[int, float] = {}
        self.r_data: list[list] = []  # (cols, coefs) per row
        self.sense: list[int] = []
        self.rhs: list[float] = []
        self.scale: list[float] = []
        self.row_names: list[str] = []
        self.terms: list[tuple[int, int, float, int]] = []

    def var(self, name: str, role: tuple, lo: float, hi: float) -> int:
        self.names.append(name)
        self.roles.append(role)
        self.lo.append(lo)
        self.hi.append(hi)
        return len(self.names) - 1

    def row(self, name: str, entries: dict[int, float], sense: int, rhs: float, scale: float = 1.0) -> int:
        self.r_data.append(entries)
        self.sense.append(sense)
        self.rhs.append(rhs)
        self.scale.append(scale)
        self.row_names.append(name)
        return len(self.rhs) - 1

    def bilinear(self, u: int, v: int, coef: float, row: int = -1) -> None:
        self.terms.append((u, v, coef, row))

    def finish(self, kind, groups, instance) -> NlpModel:
        n = len(self.names)
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for entries in self.r_data:
            for col in sorted(entries):
                indices.append(col)
                data.append(entries[col])
            indptr.append(len(indices))
        rows = sp.csr_matrix(
            (np.array(data, dtype=float), np.array(indices, dtype=np.int32), np.array(indptr, dtype=np.int32)),
            shape=(len(self.rhs), n),
        )
        obj = np.zeros(n)
        for col, coef in self.obj.items():
            obj[col] = coef
        terms = self.terms or [(0, 0, 0.0, -1)][:0]
        model = NlpModel(
            kind=kind,
            var_names=self.names,
            var_roles=self.roles,
            lo=np.array(self.lo, dtype=float),
            hi=np.array(self.hi, dtype=float),
            obj=obj,
            rows=rows,
            sense=np.array(self.sense, dtype=np.int8),
            rhs=np.array(self.rhs, dtype=float),
            row_scale=np.array(self.scale, dtype=float),
            row_names=self.row_names,
            term_u=np.array([t[0] for t in terms], dtype=np.int32),
            term_v=np.array([t[1] for t in terms], dtype=np.int32),
            term_coef=np.array([t[2] for t in terms], dtype=float),
            term_row=np.array([t[3] for t in terms], dtype=np.int32),
            groups={k: np.asarray(v, dtype=np.int64) for k, v in groups.items()},
            instance=instance,
        )
        model.check_consistent()
        return model


def _incidence(instance: PoolingInstance):
    """Arc adjacency helpers: per-bin raw arcs, per-bin product arcs, etc."""
    into_bin: list[list[int]] = [[] for _ in instance.bins]       # arc positions in bin_arcs
    out_of_bin: list[list[int]] = [[] for _ in instance.bins]     # positions in product_arcs
    into_prod_bins: list[list[int]] = [[] for _ in instance.products]
    into_prod_straights: list[list[int]] = [[] for _ in instance.products]
    for a, (i, j) in enumerate(instance.bin_arcs):
        into_bin[j].append(a)
    for a, (j, k) in enumerate(instance.product_arcs):
        out_of_bin[j].append(a)
        into_prod_bins[k].append(a)
    for a, (i, k) in enumerate(instance.straight_arcs):
        into_prod_straights[k].append(a)
    return into_bin, out_of_bin, into_prod_bins, into_prod_straights


def _bin_comp_bounds(instance: PoolingInstance, j: int, l: int, into_bin) -> tuple[float, float]:
    """Bounds for a bin composition variable: the range spanned by incident
    raws, intersected with any explicit bin window."""
    r = [instance.raws[instance.bin_arcs[a][0]].composition[l] for a in into_bin[j]]
    lo = min(r) if r else 0.0
    hi = max(r) if r else 0.0
    b = instance.bins[j]
    if b.comp_lo is not None:
        lo = max(lo, b.comp_lo[l])
    if b.comp_hi is not None:
        hi = min(hi, b.comp_hi[l])
    return lo, hi


def build_model(instance: PoolingInstance, kind: FormulationKind) -> NlpModel:
    """Construct the bilinear NLP of the requested formulation.

    The feasible set equals the formulation restricted to the instance's
    arc structure.  Proportions live in [0,1], flows in [0, demand], and
    derived quantities carry the tightest bounds implied by the data.

    Raises ``ValueError`` if the instance fails validation.
    """
    bad = validate_instance(instance)
    if bad:
        raise ValueError("invalid instance: " + "; ".join(str(v) for v in bad))

    if kind.uses_flows:
        return _build_flow_model(instance, kind)
    return _build_proportion_model(instance, kind)


def _build_flow_model(instance: PoolingInstance, kind: FormulationKind) -> NlpModel:
    b = _Builder()
    into_bin, out_of_bin, into_prod_bins, into_prod_straights = _incidence(instance)
    raws, bins, prods = instance.raws, instance.bins, instance.products
    nn = instance.n_nutrients

    f_out = [
        b.var(f"flow[{bins[j].name}->{prods[k].name}]", ("bin_to_product", j, k), 0.0, prods[k].demand)
        for (j, k) in instance.product_arcs
    ]
    f_str = [
        b.var(f"flow[{raws[i].name}->{prods[k].name}]", ("raw_to_product", i, k), 0.0, prods[k].demand)
        for (i, k) in instance.straight_arcs
    ]
    lam = [
        b.var(f"frac[{raws[i].name}@{bins[j].name}]", ("bin_frac", j, i), 0.0, 1.0)
        for (i, j) in instance.bin_arcs
    ]
    groups = {"f_out": f_out, "f_str": f_str, "lam": lam}

    d_idx = np.full((len(prods), nn), -1, dtype=np.int64)
    if kind is FormulationKind.PQS:
        for k, p in enumerate(prods):
            for l in range(nn):
                d_idx[k, l] = b.var(
                    f"comp[{p.name}:{instance.nutrients[l]}]", ("product_comp", k, l), p.comp_lo[l], p.comp_hi[l]
                )
        groups["d"] = d_idx.ravel()

    # Explicit bin compositions are only needed to express bin windows here;
    # the proportion formulations carry them natively.
    bounded_bins = [j for j, bn in enumerate(bins) if bn.has_bounds()]
    m_idx = np.full((len(bins), nn), -1, dtype=np.int64)
    for j in bounded_bins:
        for l in range(nn):
            lo, hi = _bin_comp_bounds(instance, j, l, into_bin)
            m_idx[j, l] = b.var(f"comp[{bins[j].name}:{instance.nutrients[l]}]", ("bin_comp", j, l), lo, hi)
    if bounded_bins:
        groups["m"] = m_idx.ravel()

    # Objective: bin-route cost is bilinear in (fraction, outgoing flow);
    # straights are linear.
    for a, (i, j) in enumerate(instance.bin_arcs):
        for pa in out_of_bin[j]:
            b.bilinear(lam[a], f_out[pa], raws[i].cost, -1)
    for a, (i, k) in enumerate(instance.straight_arcs):
        b.obj[f_str[a]] = raws[i].straight_cost

    for k, p in enumerate(prods):
        entries = {f_out[a]: 1.0 for a in into_prod_bins[k]}
        entries.update({f_str[a]: 1.0 for a in into_prod_straights[k]})
        b.row(f"demand[{p.name}]", entries, EQ, p.demand, max(1.0, p.demand))

    # Product quality in mass units.  PQS keeps an explicit composition
    # variable; Q/PQ bound the nutrient mass between window*demand.
    for k, p in enumerate(prods):
        for l in range(nn):
            base = {f_str[a]: raws[instance.straight_arcs[a][0]].composition[l] for a in into_prod_straights[k]}

            def add_terms(row):
                for pa in into_prod_bins[k]:
                    j = instance.product_arcs[pa][0]
                    for ba in into_bin[j]:
                        i = instance.bin_arcs[ba][0]
                        c = raws[i].composition[l]
                        if c != 0.0:
                            b.bilinear(lam[ba], f_out[pa], c, row)

            nut = instance.nutrients[l]
            if kind is FormulationKind.PQS:
                entries = dict(base)
                entries[d_idx[k, l]] = -p.demand
                row = b.row(f"quality[{p.name}:{nut}]", entries, EQ, 0.0, max(1.0, p.demand))
                add_terms(row)
            else:
                if p.comp_hi[l] < INF:
                    row = b.row(f"quality_hi[{p.name}:{nut}]", dict(base), LE, p.comp_hi[l] * p.demand, max(1.0, p.demand))
                    add_terms(row)
                if p.comp_lo[l] > -INF:
                    row = b.row(f"quality_lo[{p.name}:{nut}]", dict(base), GE, p.comp_lo[l] * p.demand, max(1.0, p.demand))
                    add_terms(row)

    for j, bn in enumerate(bins):
        b.row(f"convexity[{bn.name}]", {lam[a]: 1.0 for a in into_bin[j]}, EQ, 1.0)

    if kind in (FormulationKind.PQ, FormulationKind.PQS):
        for pa, (j, k) in enumerate(instance.product_arcs):
            row = b.row(
                f"cut[{bins[j].name}->{prods[k].name}]",
                {f_out[pa]: -1.0},
                EQ,
                0.0,
                max(1.0, prods[k].demand),
            )
            for ba in into_bin[j]:
                b.bilinear(lam[ba], f_out[pa], 1.0, row)

    for j in bounded_bins:
        for l in range(nn):
            entries = {m_idx[j, l]: 1.0}
            for ba in into_bin[j]:
                i = instance.bin_arcs[ba][0]
                entries[lam[ba]] = entries.get(lam[ba], 0.0) - raws[i].composition[l]
            b.row(f"comp_link[{bins[j].name}:{instance.nutrients[l]}]", entries, EQ, 0.0)

    return b.finish(kind, groups, instance)


def _build_proportion_model(instance: PoolingInstance, kind: FormulationKind) -> NlpModel:
    b = _Builder()
    into_bin, out_of_bin, into_prod_bins, into_prod_straights = _incidence(instance)
    raws, bins, prods = instance.raws, instance.bins, instance.products
    nn = instance.n_nutrients

    mu_str = [
        b.var(f"frac[{raws[i].name}@{prods[k].name}]", ("straight_frac", k, i), 0.0, 1.0)
        for (i, k) in instance.straight_arcs
    ]
    mu_bin = [
        b.var(f"frac[{bins[j].name}@{prods[k].name}]", ("product_frac", k, j), 0.0, 1.0)
        for (j, k) in instance.product_arcs
    ]
    lam = [
        b.var(f"frac[{raws[i].name}@{bins[j].name}]", ("bin_frac", j, i), 0.0, 1.0)
        for (i, j) in instance.bin_arcs
    ]

    m_idx = np.zeros((len(bins), nn), dtype=np.int64)
    for j, bn in enumerate(bins):
        for l in range(nn):
            lo, hi = _bin_comp_bounds(instance, j, l, into_bin)
            m_idx[j, l] = b.var(f"comp[{bn.name}:{instance.nutrients[l]}]", ("bin_comp", j, l), lo, hi)

    d_idx = np.zeros((len(prods), nn), dtype=np.int64)
    for k, p in enumerate(prods):
        for l in range(nn):
            d_idx[k, l] = b.var(
                f"comp[{p.name}:{instance.nutrients[l]}]", ("product_comp", k, l), p.comp_lo[l], p.comp_hi[l]
            )

    cm = []
    for j, bn in enumerate(bins):
        costs = [raws[instance.bin_arcs[a][0]].cost for a in into_bin[j]]
        cm.append(b.var(f"price[{bn.name}]", ("bin_cost", j), min(costs), max(costs)))
    cd = []
    for k, p in enumerate(prods):
        lows = [raws[instance.straight_arcs[a][0]].straight_cost for a in into_prod_straights[k]]
        lows += [b.lo[cm[instance.product_arcs[a][0]]] for a in into_prod_bins[k]]
        highs = [raws[instance.straight_arcs[a][0]].straight_cost for a in into_prod_straights[k]]
        highs += [b.hi[cm[instance.product_arcs[a][0]]] for a in into_prod_bins[k]]
        cd.append(b.var(f"price[{p.name}]", ("product_cost", k), min(lows), max(highs)))

    groups = {
        "mu_str": mu_str,
        "mu_bin": mu_bin,
        "lam": lam,
        "m": m_idx.ravel(),
        "d": d_idx.ravel(),
        "cm": cm,
        "cd": cd,
    }

    for k, p in enumerate(prods):
        b.obj[cd[k]] = p.demand

    for j, bn in enumerate(bins):
        for l in range(nn):
            entries = {m_idx[j, l]: 1.0}
            for ba in into_bin[j]:
                i = instance.bin_arcs[ba][0]
                entries[lam[ba]] = entries.get(lam[ba], 0.0) - raws[i].composition[l]
            b.row(f"bin_quality[{bn.name}:{instance.nutrients[l]}]", entries, EQ, 0.0)

    for k, p in enumerate(prods):
        for l in range(nn):
            entries = {d_idx[k, l]: 1.0}
            for sa in into_prod_straights[k]:
                i = instance.straight_arcs[sa][0]
                entries[mu_str[sa]] = -raws[i].composition[l]
            row = b.row(f"quality[{p.name}:{instance.nutrients[l]}]", entries, EQ, 0.0)
            for pa in into_prod_bins[k]:
                j = instance.product_arcs[pa][0]
                b.bilinear(mu_bin[pa], m_idx[j, l], -1.0, row)

    for j, bn in enumerate(bins):
        b.row(f"convexity[{bn.name}]", {lam[a]: 1.0 for a in into_bin[j]}, EQ, 1.0)

    for k, p in enumerate(prods):
        entries = {mu_str[a]: 1.0 for a in into_prod_straights[k]}
        entries.update({mu_bin[a]: 1.0 for a in into_prod_bins[k]})
        b.row(f"convexity[{p.name}]", entries, EQ, 1.0)

    for j, bn in enumerate(bins):
        entries = {cm[j]: 1.0}
        for ba in into_bin[j]:
            i = instance.bin_arcs[ba][0]
            entries[lam[ba]] = entries.get(lam[ba], 0.0) - raws[i].cost
        b.row(f"price[{bn.name}]", entries, EQ, 0.0)

    for k, p in enumerate(prods):
        entries = {cd[k]: 1.0}
        for sa in into_prod_straights[k]:
            i = instance.straight_arcs[sa][0]
            entries[mu_str[sa]] = -raws[i].straight_cost
        row = b.row(f"price[{p.name}]", entries, EQ, 0.0)
        for pa in into_prod_bins[k]:
            j = instance.product_arcs[pa][0]
            b.bilinear(mu_bin[pa], cm[j], -1.0, row)

    if kind is FormulationKind.QQPLUS:
        for pa, (j, k) in enumerate(instance.product_arcs):
            row = b.row(f"cut[{bins[j].name}->{prods[k].name}]", {mu_bin[pa]: -1.0}, EQ, 0.0)
            for ba in into_bin[j]:
                b.bilinear(mu_bin[pa], lam[ba], 1.0, row)

    return b.finish(kind, groups, instance)


def formulation_size(dims: tuple[int, int, int, int, int], kind: FormulationKind) -> tuple[int, int]:
    """Closed-form variable/row counts for a dense-arc instance.

    ``dims`` is (nutrients, raws, bins, products, straight-capable raws).
    Assumes every bin window is absent for the flow formulations (explicit
    bin compositions would add bins*nutrients variables and rows).
    """
    n_, i_, m_, p_, s_ = dims
    if min(dims) < 0:
        raise ValueError("dimensions must be nonnegative")
    flows = (s_ + m_) * p_ + i_ * m_
    if kind is FormulationKind.Q:
        return flows, p_ * (2 * n_ + 1) + m_
    if kind is FormulationKind.PQ:
        return flows, p_ * (2 * n_ + 1) + m_ + m_ * p_
    if kind is FormulationKind.PQS:
        return flows + p_ * n_, p_ * (n_ + 1) + m_ + m_ * p_
    n_vars = flows + (m_ + p_) * (n_ + 1)
    n_rows = p_ * (n_ + 1) + m_ + m_ * (n_ + 1) + p_
    if kind is FormulationKind.QQPLUS:
        n_rows += m_ * p_
    return n_vars, n_rows


def _bin_fractions_from_flows(instance: PoolingInstance, flows: FlowSolution) -> np.ndarray:
    """Per-arc bin fractions implied by inflows; uniform on starved bins."""
    inflow = np.zeros(len(instance.bins))
    count = np.zeros(len(instance.bins))
    for (i, j), f in zip(instance.bin_arcs, flows.bin_flows):
        inflow[j] += f
        count[j] += 1
    lam = np.zeros(len(instance.bin_arcs))
    for a, (i, j) in enumerate(instance.bin_arcs):
        lam[a] = flows.bin_flows[a] / inflow[j] if inflow[j] > 0 else 1.0 / count[j]
    return lam


def to_flows(instance: PoolingInstance, kind: FormulationKind, x: np.ndarray, model: NlpModel | None = None) -> FlowSolution:
    """Physical flows of a formulation point (fractions scale the demands)."""
    model = model if model is not None else build_model(instance, kind)
    x = np.asarray(x, dtype=float)
    demands = instance.demands()
    if kind.uses_flows:
        fjk = x[model.groups["f_out"]]
        fik = x[model.groups["f_str"]] if len(instance.straight_arcs) else np.zeros(0)
    else:
        fjk = x[model.groups["mu_bin"]] * np.array([demands[k] for (_, k) in instance.product_arcs])
        fik = x[model.groups["mu_str"]] * np.array([demands[k] for (_, k) in instance.straight_arcs]) if len(instance.straight_arcs) else np.zeros(0)
    outflow = np.zeros(len(instance.bins))
    for (j, _), f in zip(instance.product_arcs, fjk):
        outflow[j] += f
    lam = x[model.groups["lam"]]
    fij = np.array([lam[a] * outflow[j] for a, (_, j) in enumerate(instance.bin_arcs)])
    return FlowSolution(fij, fjk, fik)


def from_flows(instance: PoolingInstance, kind: FormulationKind, flows: FlowSolution, model: NlpModel | None = None) -> np.ndarray:
    """Point of the requested formulation reproducing the given flows.

    Derived quantities (compositions, prices) are set from their defining
    rows, so only window constraints can be violated if the flows are."""
    model = model if model is not None else build_model(instance, kind)
    lam = _bin_fractions_from_flows(instance, flows)
    r = instance.composition_matrix()
    demands = instance.demands()
    x = np.zeros(model.n_vars)
    x[model.groups["lam"]] = lam

    m_comp = np.zeros((len(instance.bins), instance.n_nutrients))
    m_cost = np.zeros(len(instance.bins))
    for a, (i, j) in enumerate(instance.bin_arcs):
        m_comp[j] += lam[a] * r[i]
        m_cost[j] += lam[a] * instance.raws[i].cost

    if kind.uses_flows:
        x[model.groups["f_out"]] = flows.product_flows
        if len(instance.straight_arcs):
            x[model.groups["f_str"]] = flows.straight_flows
        if "m" in model.groups:
            m = model.groups["m"].reshape(len(instance.bins), -1)
            for j in range(len(instance.bins)):
                for l in range(instance.n_nutrients):
                    if m[j, l] >= 0:
                        x[m[j, l]] = m_comp[j, l]
        if kind is FormulationKind.PQS:
            d = np.zeros((len(instance.products), instance.n_nutrients))
            for a, (j, k) in enumerate(instance.product_arcs):
                d[k] += flows.product_flows[a] * m_comp[j]
            for a, (i, k) in enumerate(instance.straight_arcs):
                d[k] += flows.straight_flows[a] * r[i]
            x[model.groups["d"]] = (d / demands[:, None]).ravel()
        return x

    mu_bin = np.array([flows.product_flows[a] / demands[k] for a, (_, k) in enumerate(instance.product_arcs)])
    x[model.groups["mu_bin"]] = mu_bin
    if len(instance.straight_arcs):
        mu_str = np.array([flows.straight_flows[a] / demands[k] for a, (_, k) in enumerate(instance.straight_arcs)])
        x[model.groups["mu_str"]] = mu_str
    x[model.groups["m"]] = m_comp.ravel()
    x[model.groups["cm"]] = m_cost

    d = np.zeros((len(instance.products), instance.n_nutrients))
    c_d = np.zeros(len(instance.products))
    for a, (j, k) in enumerate(instance.product_arcs):
        d[k] += mu_bin[a] * m_comp[j]
        c_d[k] += mu_bin[a] * m_cost[j]
    for a, (i, k) in enumerate(instance.straight_arcs):
        share = flows.straight_flows[a] / demands[k]
        d[k] += share * r[i]
        c_d[k] += share * instance.raws[i].straight_cost
    x[model.groups["d"]] = d.ravel()
    x[model.groups["cd"]] = c_d
    return x


def lift_solution(
    instance: PoolingInstance,
    from_kind: FormulationKind,
    to_kind: FormulationKind,
    point: np.ndarray,
    from_model: NlpModel | None = None,
    to_model: NlpModel | None = None,
) -> np.ndarray:
    """Map a point between formulations, preserving the physical flows.

    For feasible source points the objective value is preserved exactly;
    infeasibility in flow space reappears scaled by demand in proportion
    space (fractions are flows over demand)."""
    flows = to_flows(instance, from_kind, point, from_model)
    return from_flows(instance, to_kind, flows, to_model)


def pq_cut_residual(model: NlpModel, x: np.ndarray) -> float:
    """Worst residual of the convexity-times-flow cuts at a point.

    For flow formulations this is max |sum_i lam_ji f_jk - f_jk|; for the
    proportion formulations the flow is replaced by the product fraction.
    The cuts are implied by the convexity rows, so any point satisfying
    those exactly has residual zero."""
    instance = model.instance
    if instance is None:
        raise ValueError("model carries no instance reference")
    x = np.asarray(x, dtype=float)
    lam = x[model.groups["lam"]]
    lam_sum = np.zeros(len(instance.bins))
    for a, (_, j) in enumerate(instance.bin_arcs):
        lam_sum[j] += lam[a]
    outvar = x[model.groups["f_out"]] if model.kind.uses_flows else x[model.groups["mu_bin"]]
    worst = 0.0
    for a, (j, _) in enumerate(instance.product_arcs):
        worst = max(worst, abs(lam_sum[j] * outvar[a] - outvar[a]))
    return worst
