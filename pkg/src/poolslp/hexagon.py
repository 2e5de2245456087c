"""Two-nutrient hexagon study: construction, brute-force oracle, local optima.

Six expensive raw materials sit at the vertices of a regular hexagon in
nutrient space with a cheap seventh at the centre, products at the corners
of a shrunken inner hexagon, and three mixing bins free to move anywhere in
the raw hull.  Pool cost grows with distance from the centre, so the solver
has to place a bin triangle that covers the products as tightly as
possible; straights (direct raw-to-product deliveries at a premium) relax
the covering requirement, which is what creates the crowd of local optima.

The oracle exploits the structure: with bin positions fixed the problem
decomposes into independent minimum-cost blends (tiny LPs solved exactly by
support enumeration), so a dense grid over symmetric bin placements plus a
coordinate-descent polish yields ground truth independent of the SLP path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .formulations import FormulationKind, NlpModel, build_model, to_flows
from .instance import Bin, PoolingInstance, Product, Raw
from .multistart import MultistartReport, run_multistart
from .slp import SlpOptions

__all__ = [
    "HexagonParams",
    "OracleConfig",
    "OptimaCluster",
    "build_hexagon_instance",
    "oracle_optimum",
    "enumerate_local_optima",
    "bin_positions",
    "rotate_positions",
    "geometry_classes",
]

_BLEND_TOL = 1e-9


@dataclass(frozen=True)
class HexagonParams:
    radius: float = 1.0
    inner_ratio: float = 0.5
    inner_rotation_deg: float = 30.0  # product hexagon rotation vs the raw hexagon
    center_offset: float | None = None  # None: equal to radius, keeps compositions >= 0
    outer_cost: float = 6.0
    center_cost: float = 1.0
    straight_factor: float = 2.1
    n_bins: int = 3
    demand: float = 1.0

    def offset(self) -> float:
        return self.radius if self.center_offset is None else self.center_offset

    def center(self) -> np.ndarray:
        return np.array([self.offset(), self.offset()])

    def raw_positions(self) -> np.ndarray:
        angles = np.deg2rad(np.arange(0, 360, 60))
        outer = self.center() + self.radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        return np.vstack([outer, self.center()])

    def product_positions(self) -> np.ndarray:
        angles = np.deg2rad(np.arange(0, 360, 60) + self.inner_rotation_deg)
        r = self.inner_ratio * self.radius
        return self.center() + r * np.stack([np.cos(angles), np.sin(angles)], axis=1)

    def validate(self) -> None:
        if not (0.0 < self.inner_ratio < 1.0):
            raise ValueError("inner ratio must lie strictly between 0 and 1")
        if self.straight_factor <= 1.0:
            raise ValueError("straight factor must exceed 1")
        if self.outer_cost <= 0 or self.center_cost <= 0 or self.demand <= 0:
            raise ValueError("costs and demand must be positive")
        if self.n_bins < 1:
            raise ValueError("need at least one bin")


def build_hexagon_instance(params: HexagonParams = HexagonParams()) -> PoolingInstance:
    """Instance realisation of the hexagon geometry.

    Product windows are points (lo = hi = target) opened by 1e-9 so the
    trust-region subproblems stay numerically nonempty; straights are
    allowed from every raw to every product at factor times the bin cost.
    """
    params.validate()
    raws_xy = params.raw_positions()
    prods_xy = params.product_positions()
    nutrients = ("u", "v")

    raws = []
    for i, pos in enumerate(raws_xy):
        cost = params.center_cost if i == 6 else params.outer_cost
        name = "center" if i == 6 else f"vertex{i}"
        raws.append(Raw(name, cost, params.straight_factor * cost, tuple(pos)))
    bins = tuple(Bin(f"bin{j}") for j in range(params.n_bins))
    products = tuple(
        Product(
            f"prod{k}",
            params.demand,
            tuple(v - 1e-9 for v in pos),
            tuple(v + 1e-9 for v in pos),
        )
        for k, pos in enumerate(prods_xy)
    )
    nb, nr, npr = params.n_bins, len(raws), len(products)
    return PoolingInstance(
        nutrients=nutrients,
        raws=tuple(raws),
        bins=bins,
        products=products,
        bin_arcs=tuple((i, j) for i in range(nr) for j in range(nb)),
        product_arcs=tuple((j, k) for j in range(nb) for k in range(npr)),
        straight_arcs=tuple((i, k) for i in range(nr) for k in range(npr)),
    )


_combo_cache: dict[tuple[int, int], np.ndarray] = {}


def _combos(c: int, k: int) -> np.ndarray:
    key = (c, k)
    if key not in _combo_cache:
        from itertools import combinations

        _combo_cache[key] = np.array(list(combinations(range(c), k)), dtype=np.int64).reshape(-1, k)
    return _combo_cache[key]


def _min_blend(targets: np.ndarray, cols_xy: np.ndarray, cols_cost: np.ndarray) -> np.ndarray:
    """Exact minimum-cost convex blend of columns hitting each target.

    Solves min cost.w s.t. sum w*col = target, sum w = 1, w >= 0 for every
    batch row by enumerating supports of size <= 3 (every LP vertex),
    fully vectorized over batch rows and supports.  Shapes: targets (B, 2),
    cols_xy (B, C, 2), cols_cost (B, C); returns (B,) with inf where no
    blend exists."""
    b, c, _ = cols_xy.shape
    best = np.full(b, np.inf)
    px, py = targets[:, 0], targets[:, 1]
    x, y = cols_xy[..., 0], cols_xy[..., 1]

    # singles
    dist2 = (x - px[:, None]) ** 2 + (y - py[:, None]) ** 2
    single = np.where(dist2 <= 1e-14, cols_cost, np.inf)
    np.minimum(best, single.min(axis=1), out=best)

    # pairs: target on the segment between two columns
    pairs = _combos(c, 2)
    if len(pairs):
        i, j = pairs[:, 0], pairs[:, 1]
        dx, dy = x[:, i] - x[:, j], y[:, i] - y[:, j]
        den = dx * dx + dy * dy
        ok = den > 1e-18
        num = (px[:, None] - x[:, j]) * dx + (py[:, None] - y[:, j]) * dy
        w = np.where(ok, num / np.where(ok, den, 1.0), -1.0)
        rx = x[:, j] + w * dx - px[:, None]
        ry = y[:, j] + w * dy - py[:, None]
        feas = ok & (rx * rx + ry * ry <= 1e-14) & (w >= -_BLEND_TOL) & (w <= 1 + _BLEND_TOL)
        with np.errstate(invalid="ignore"):
            cost = w * cols_cost[:, i] + (1 - w) * cols_cost[:, j]
        feas &= np.isfinite(cost)
        np.minimum(best, np.where(feas, cost, np.inf).min(axis=1), out=best)

    # triples: Cramer on [x; y; 1] w = [tx; ty; 1]
    triples = _combos(c, 3)
    if len(triples):
        i, j, k = triples[:, 0], triples[:, 1], triples[:, 2]
        xa, xb, xc = x[:, i], x[:, j], x[:, k]
        ya, yb, yc = y[:, i], y[:, j], y[:, k]
        det = xa * (yb - yc) - xb * (ya - yc) + xc * (ya - yb)
        ok = np.abs(det) > 1e-12
        safe = np.where(ok, det, 1.0)
        pxb, pyb = px[:, None], py[:, None]
        wa = (pxb * (yb - yc) - xb * (pyb - yc) + xc * (pyb - yb)) / safe
        wb = (xa * (pyb - yc) - pxb * (ya - yc) + xc * (ya - pyb)) / safe
        wc = (xa * (yb - pyb) - xb * (ya - pyb) + pxb * (ya - yb)) / safe
        feas = ok & (wa >= -_BLEND_TOL) & (wb >= -_BLEND_TOL) & (wc >= -_BLEND_TOL)
        with np.errstate(invalid="ignore"):
            cost = wa * cols_cost[:, i] + wb * cols_cost[:, j] + wc * cols_cost[:, k]
        feas &= np.isfinite(cost)
        np.minimum(best, np.where(feas, cost, np.inf).min(axis=1), out=best)
    return best


def _blend_detail(target: np.ndarray, cols_xy: np.ndarray, cols_cost: np.ndarray):
    """Single-target variant of _min_blend that also reports the support."""
    c = cols_xy.shape[0]
    best, support, weights = np.inf, (), ()
    t = np.asarray(target, dtype=float)

    def consider(idx, w):
        nonlocal best, support, weights
        with np.errstate(invalid="ignore"):
            cost = float(np.dot(w, cols_cost[list(idx)]))
        if math.isfinite(cost) and cost < best:
            best, support, weights = cost, idx, tuple(w)

    for i in range(c):
        if np.linalg.norm(cols_xy[i] - t) <= 1e-7:
            consider((i,), np.array([1.0]))
    for i in range(c - 1):
        for j in range(i + 1, c):
            d = cols_xy[i] - cols_xy[j]
            den = float(d @ d)
            if den <= 1e-18:
                continue
            w = float((t - cols_xy[j]) @ d) / den
            if -_BLEND_TOL <= w <= 1 + _BLEND_TOL and np.linalg.norm(cols_xy[j] + w * d - t) <= 1e-7:
                consider((i, j), np.array([w, 1 - w]))
    for i in range(c - 2):
        for j in range(i + 1, c - 1):
            for k in range(j + 1, c):
                m = np.array([
                    [cols_xy[i, 0], cols_xy[j, 0], cols_xy[k, 0]],
                    [cols_xy[i, 1], cols_xy[j, 1], cols_xy[k, 1]],
                    [1.0, 1.0, 1.0],
                ])
                det = np.linalg.det(m)
                if abs(det) <= 1e-12:
                    continue
                w = np.linalg.solve(m, np.array([t[0], t[1], 1.0]))
                if (w >= -_BLEND_TOL).all():
                    consider((i, j, k), w)
    return best, support, weights


@dataclass(eq=False)
class OracleConfig:
    objective: float
    bins_xy: np.ndarray          # (n_bins, 2)
    bin_costs: np.ndarray        # (n_bins,)
    straight_products: frozenset  # products whose best blend uses a straight
    product_costs: np.ndarray


def _config_costs(params: HexagonParams, bins_xy: np.ndarray) -> np.ndarray:
    """Total cost for a batch of bin configurations, shape (B, nb, 2) -> (B,)."""
    raws_xy = params.raw_positions()
    prods_xy = params.product_positions()
    raw_cost = np.array([params.center_cost if i == 6 else params.outer_cost for i in range(7)])
    straight_cost = params.straight_factor * raw_cost
    b, nb, _ = bins_xy.shape

    # per-bin blend cost from the raws (static columns, batched targets)
    flat = bins_xy.reshape(b * nb, 2)
    cols = np.broadcast_to(raws_xy, (b * nb, 7, 2))
    costs = np.broadcast_to(raw_cost, (b * nb, 7))
    cm = _min_blend(flat, cols, costs).reshape(b, nb)

    total = np.zeros(b)
    col_xy = np.concatenate([np.broadcast_to(raws_xy, (b, 7, 2)), bins_xy], axis=1)
    for k in range(len(prods_xy)):
        col_cost = np.concatenate([np.broadcast_to(straight_cost, (b, 7)), cm], axis=1)
        target = np.broadcast_to(prods_xy[k], (b, 2))
        total += params.demand * _min_blend(target, col_xy, col_cost)
    return total


def _config_detail(params: HexagonParams, bins_xy: np.ndarray) -> OracleConfig:
    raws_xy = params.raw_positions()
    prods_xy = params.product_positions()
    raw_cost = np.array([params.center_cost if i == 6 else params.outer_cost for i in range(7)])
    straight_cost = params.straight_factor * raw_cost
    nb = bins_xy.shape[0]

    cm = np.empty(nb)
    for j in range(nb):
        cm[j], _, _ = _blend_detail(bins_xy[j], raws_xy, raw_cost)
    cols_xy = np.vstack([raws_xy, bins_xy])
    cols_cost = np.concatenate([straight_cost, cm])
    pcost = np.empty(len(prods_xy))
    used_straight = set()
    for k, target in enumerate(prods_xy):
        pcost[k], support, weights = _blend_detail(target, cols_xy, cols_cost)
        for idx, w in zip(support, weights):
            if idx < 7 and w > 1e-7:
                used_straight.add(k)
    return OracleConfig(
        objective=float(params.demand * pcost.sum()),
        bins_xy=bins_xy.copy(),
        bin_costs=cm,
        straight_products=frozenset(used_straight),
        product_costs=pcost,
    )


def _polar_to_xy(params: HexagonParams, theta: np.ndarray, radius: np.ndarray) -> np.ndarray:
    return params.center() + params.radius * radius[..., None] * np.stack(
        [np.cos(theta), np.sin(theta)], axis=-1
    )


def _descend(params: HexagonParams, vec0: np.ndarray, step_theta: float, step_r: float,
             frozen: set[int]) -> tuple[float, np.ndarray]:
    """Coordinate descent over per-bin (angle, radius) from one seed.

    Each sweep evaluates every single-coordinate move as one batch and takes
    the best improving one; steps halve when no move improves."""
    nb = params.n_bins
    free = [i for i in range(2 * nb) if i not in frozen]

    def costs_of(vs: np.ndarray) -> np.ndarray:
        xy = _polar_to_xy(params, vs[:, :nb], np.clip(vs[:, nb:], 0.0, 1.0))
        return _config_costs(params, xy)

    vec = vec0.copy()
    best = float(costs_of(vec[None, :])[0])
    for _ in range(500):
        trials = np.repeat(vec[None, :], 2 * len(free) + 4, axis=0)
        for t, idx in enumerate(free):
            step = step_theta if idx < nb else step_r
            trials[2 * t, idx] += step
            trials[2 * t + 1, idx] -= step
        # group moves walk symmetric valleys coordinate moves cannot
        base = 2 * len(free)
        trials[base, nb:] += step_r
        trials[base + 1, nb:] -= step_r
        free_theta = [i for i in range(nb) if i not in frozen]
        trials[base + 2, free_theta] += step_theta
        trials[base + 3, free_theta] -= step_theta
        costs = costs_of(trials)
        pick = int(np.argmin(costs))
        if costs[pick] < best - 1e-13:
            best = float(costs[pick])
            vec = trials[pick]
        else:
            step_theta *= 0.5
            step_r *= 0.5
            if step_theta < 1e-8 and step_r < 1e-8:
                break
    return best, vec


def _to_polar(params: HexagonParams, xy: np.ndarray) -> np.ndarray:
    d = xy - params.center()
    theta = np.arctan2(d[:, 1], d[:, 0])
    r = np.hypot(d[:, 0], d[:, 1]) / params.radius
    return np.concatenate([theta, r])


def oracle_optimum(
    params: HexagonParams = HexagonParams(),
    grid_resolution: int = 96,
    pinned_angle: float | None = None,
) -> tuple[float, OracleConfig | None]:
    """Brute-force optimum.

    Seeds come from a dense grid over symmetric bin placements and from
    every way of parking bins on product positions (the configurations that
    serve some products by straights); each seed is polished by coordinate
    descent over all bins' (angle, radius).  ``pinned_angle`` (radians)
    freezes the first bin's angle, reproducing the forced-rotation
    variants.  Returns (inf, None) when no placement can serve the
    products."""
    if grid_resolution < 16:
        raise ValueError("grid resolution too coarse")
    params.validate()
    nb = params.n_bins
    prods_xy = params.product_positions()

    spread = 2.0 * math.pi / nb
    thetas = np.linspace(0.0, spread, grid_resolution, endpoint=False)
    if pinned_angle is not None:
        thetas = np.array([pinned_angle])
    radii = np.linspace(0.02, 1.0, grid_resolution)
    tt, rr = np.meshgrid(thetas, radii, indexing="ij")
    tt, rr = tt.ravel(), rr.ravel()
    angles = tt[:, None] + spread * np.arange(nb)[None, :]
    bins_xy = _polar_to_xy(params, angles, np.repeat(rr[:, None], nb, axis=1))
    costs = _config_costs(params, bins_xy)

    seeds: list[np.ndarray] = []
    finite = np.isfinite(costs)
    if finite.any():
        order = np.argsort(np.where(finite, costs, np.inf))
        for s in order[:5]:
            seeds.append(np.concatenate([angles[s], np.full(nb, rr[s])]))

    if pinned_angle is None and len(prods_xy) >= nb:
        from itertools import combinations

        for combo in combinations(range(len(prods_xy)), nb):
            for scale in (1.0, 1.3):
                xy = params.center() + scale * (prods_xy[list(combo)] - params.center())
                seeds.append(_to_polar(params, xy))
        # covering configurations for every dropped product subset: bins spread
        # over the remaining products' angular range, pushed outward
        c = params.center()
        ang_all = np.arctan2(prods_xy[:, 1] - c[1], prods_xy[:, 0] - c[0])
        for drop in range(len(prods_xy)):
            keep = [k for k in range(len(prods_xy)) if k != drop]
            base = ang_all[drop] + math.pi
            offs = np.array([-2.0 * math.pi / 5, 0.0, 2.0 * math.pi / 5])
            for rad in (min(1.0, math.sqrt(3.0) * params.inner_ratio), 0.75):
                seeds.append(np.concatenate([base + offs, np.full(nb, rad)]))

    if not seeds:
        return math.inf, None

    frozen = {0} if pinned_angle is not None else set()
    best_cost, best_vec = math.inf, None
    for seed in seeds:
        c, v = _descend(params, seed, spread / grid_resolution, 1.0 / grid_resolution, frozen)
        if c < best_cost - 1e-12:
            best_cost, best_vec = c, v
    if best_vec is None or not math.isfinite(best_cost):
        return math.inf, None
    xy = _polar_to_xy(params, best_vec[:nb], np.clip(best_vec[nb:], 0.0, 1.0))
    detail = _config_detail(params, xy)
    return detail.objective, detail


@dataclass(eq=False)
class OptimaCluster:
    """One local-solution class: multistart terminals sharing an objective
    value and a straight-usage pattern."""

    objective: float
    count: int
    straight_products: frozenset
    representative: np.ndarray


def straight_signature(instance: PoolingInstance, model: NlpModel, x: np.ndarray,
                       tol: float = 1e-6) -> frozenset:
    flows = to_flows(instance, model.kind, x, model)
    used = set()
    for (i, k), f in zip(instance.straight_arcs, flows.straight_flows):
        if f > tol * instance.products[k].demand:
            used.add(k)
    return frozenset(used)


def enumerate_local_optima(
    instance: PoolingInstance,
    n_runs: int = 20000,
    cluster_tol: float = 1e-6,
    base_seed: int = 1,
    workers: int = 1,
    options: SlpOptions | None = None,
    stationarity_tol: float = 1e-5,
    kind: FormulationKind = FormulationKind.QQ,
    report: MultistartReport | None = None,
    model: NlpModel | None = None,
) -> list[OptimaCluster]:
    """Cluster multistart terminals into local-solution classes.

    Keeps feasible terminals with first-order error below the tolerance and
    groups them by (objective within relative cluster_tol, straight-usage
    signature), sorted by objective.  Pass a precomputed ``report`` (with
    points kept) to reuse one batch across analyses."""
    model = model if model is not None else build_model(instance, kind)
    if report is None:
        report = run_multistart(model, n_runs, base_seed, workers=workers,
                                options=options, keep_points=True)
    if report.points is None:
        raise ValueError("report was built without keep_points")

    terminals = []
    for rec, x, stat in zip(report.records, report.points, report.stationarity):
        if rec.h < report.feas_tol and stat is not None and stat <= stationarity_tol:
            terminals.append((rec.f, straight_signature(instance, model, x), x))
    terminals.sort(key=lambda t: t[0])

    clusters: list[OptimaCluster] = []
    for f, sig, x in terminals:
        placed = False
        for cl in clusters:
            if sig == cl.straight_products and abs(f - cl.objective) <= cluster_tol * max(1.0, abs(cl.objective)):
                cl.count += 1
                placed = True
                break
        if not placed:
            clusters.append(OptimaCluster(objective=f, count=1, straight_products=sig, representative=x))
    return clusters


def bin_positions(instance: PoolingInstance, model: NlpModel, x: np.ndarray) -> np.ndarray:
    """Bin compositions of a point, sorted lexicographically (bins are
    interchangeable, so solutions are compared up to relabeling)."""
    m_idx = model.groups["m"].reshape(len(instance.bins), -1)
    pos = np.array([[x[m_idx[j, l]] for l in range(m_idx.shape[1])] for j in range(len(instance.bins))])
    order = np.lexsort((pos[:, 1], pos[:, 0]))
    return pos[order]


def rotate_positions(params: HexagonParams, pos: np.ndarray, steps: int = 1) -> np.ndarray:
    """Rotate composition-space positions about the hexagon centre by
    steps * 60 degrees, returning them in canonical sorted order."""
    ang = steps * math.pi / 3.0
    rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
    out = (pos - params.center()) @ rot.T + params.center()
    order = np.lexsort((out[:, 1], out[:, 0]))
    return out[order]


def geometry_classes(positions: list[np.ndarray], tol: float = 1e-5) -> list[list[int]]:
    """Group solution bin-position sets that coincide within tolerance."""
    classes: list[tuple[np.ndarray, list[int]]] = []
    for idx, pos in enumerate(positions):
        for rep, members in classes:
            if rep.shape == pos.shape and np.max(np.abs(rep - pos)) <= tol:
                members.append(idx)
                break
        else:
            classes.append((pos, [idx]))
    return [members for _, members in classes]


def write_clusters_csv(clusters: list[OptimaCluster], path,
                       instance: PoolingInstance | None = None,
                       model: NlpModel | None = None) -> None:
    """Cluster table: objective, member count, signature, and (when the
    model is supplied) the representative's bin coordinates."""
    with open(path, "w") as out:
        cols = "objective,count,straights"
        nb = len(instance.bins) if instance is not None else 0
        if model is not None and instance is not None:
            cols += "," + ",".join(f"bin{j}_{c}" for j in range(nb) for c in ("x", "y"))
        out.write(cols + "\n")
        for cl in clusters:
            sig = "|".join(str(k) for k in sorted(cl.straight_products)) or "-"
            line = f"{cl.objective:.17g},{cl.count},{sig}"
            if model is not None and instance is not None:
                pos = bin_positions(instance, model, cl.representative)
                line += "," + ",".join(f"{v:.17g}" for v in pos.ravel())
            out.write(line + "\n")
