"""Instance files: a JSON document with explicit keys (extension .pool).

The writer emits a canonical form (fixed key order, floats at 17
significant digits) so save -> load -> save is byte-identical.  The parser
rejects unknown keys and reports the offending record and field.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .instance import Bin, PoolingInstance, Product, Raw, validate_instance

__all__ = ["InstanceFormatError", "load_instance", "save_instance", "loads_instance", "dumps_instance"]

_RAW_KEYS = {"name", "cost", "straight_cost", "composition"}
_BIN_KEYS = {"name", "allowed_raws", "bounds"}
_PRODUCT_KEYS = {"name", "demand", "bounds", "allowed_bins", "allowed_straights", "price"}
_TOP_KEYS = {"nutrients", "raws", "bins", "products", "meta"}


class InstanceFormatError(ValueError):
    """Raised when an instance document cannot be parsed or validated."""


def _fmt(v: float) -> float | str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(format(v, ".17g"))


def _num(v: Any, where: str) -> float:
    if isinstance(v, str):
        if v == "inf":
            return math.inf
        if v == "-inf":
            return -math.inf
        raise InstanceFormatError(f"{where}: expected a number, got {v!r}")
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise InstanceFormatError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise InstanceFormatError(f"{where}: unknown keys {sorted(unknown)}")


def dumps_instance(instance: PoolingInstance) -> str:
    """Canonical JSON text of an instance."""
    raw_names = [r.name for r in instance.raws]
    bin_names = [b.name for b in instance.bins]

    allowed_raws: dict[str, list[str]] = {b.name: [] for b in instance.bins}
    for (i, j) in instance.bin_arcs:
        allowed_raws[bin_names[j]].append(raw_names[i])
    allowed_bins: dict[str, list[str]] = {p.name: [] for p in instance.products}
    for (j, k) in instance.product_arcs:
        allowed_bins[instance.products[k].name].append(bin_names[j])
    allowed_straights: dict[str, list[str]] = {p.name: [] for p in instance.products}
    for (i, k) in instance.straight_arcs:
        allowed_straights[instance.products[k].name].append(raw_names[i])

    doc: dict[str, Any] = {"nutrients": list(instance.nutrients)}
    doc["raws"] = [
        {
            "name": r.name,
            "cost": _fmt(r.cost),
            "straight_cost": _fmt(r.straight_cost),
            "composition": {n: _fmt(v) for n, v in zip(instance.nutrients, r.composition)},
        }
        for r in instance.raws
    ]
    bins_out = []
    for b in instance.bins:
        entry: dict[str, Any] = {"name": b.name, "allowed_raws": allowed_raws[b.name]}
        if b.comp_lo is not None or b.comp_hi is not None:
            lo = b.comp_lo or tuple(-math.inf for _ in instance.nutrients)
            hi = b.comp_hi or tuple(math.inf for _ in instance.nutrients)
            entry["bounds"] = {n: [_fmt(l), _fmt(h)] for n, l, h in zip(instance.nutrients, lo, hi)}
        bins_out.append(entry)
    doc["bins"] = bins_out
    doc["products"] = [
        {
            "name": p.name,
            "demand": _fmt(p.demand),
            "bounds": {n: [_fmt(l), _fmt(h)] for n, l, h in zip(instance.nutrients, p.comp_lo, p.comp_hi)},
            "allowed_bins": allowed_bins[p.name],
            "allowed_straights": allowed_straights[p.name],
            "price": _fmt(p.price),
        }
        for p in instance.products
    ]
    if instance.meta:
        doc["meta"] = {k: instance.meta[k] for k in sorted(instance.meta)}
    return json.dumps(doc, indent=2) + "\n"


def save_instance(instance: PoolingInstance, path) -> None:
    with open(path, "w") as out:
        out.write(dumps_instance(instance))


def loads_instance(text: str) -> PoolingInstance:
    """Parse and validate an instance document (inverse of dumps_instance)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level must be an object")
    _check_keys(doc, _TOP_KEYS, "document")
    for key in ("nutrients", "raws", "products"):
        if key not in doc:
            raise InstanceFormatError(f"document: missing required key {key!r}")

    nutrients = tuple(doc["nutrients"])
    if not nutrients or not all(isinstance(n, str) for n in nutrients):
        raise InstanceFormatError("nutrients: expected a nonempty list of names")

    def comp_tuple(mapping, where) -> tuple[float, ...]:
        if not isinstance(mapping, dict):
            raise InstanceFormatError(f"{where}: expected a nutrient map")
        missing = [n for n in nutrients if n not in mapping]
        if missing:
            raise InstanceFormatError(f"{where}: missing nutrient {missing[0]!r}")
        extra = [n for n in mapping if n not in nutrients]
        if extra:
            raise InstanceFormatError(f"{where}: unknown nutrient {extra[0]!r}")
        return tuple(_num(mapping[n], f"{where}[{n}]") for n in nutrients)

    raws = []
    for rec in doc["raws"]:
        where = f"raw {rec.get('name', '?')!r}"
        _check_keys(rec, _RAW_KEYS, where)
        raws.append(
            Raw(
                rec["name"],
                _num(rec["cost"], f"{where}.cost"),
                _num(rec["straight_cost"], f"{where}.straight_cost"),
                comp_tuple(rec["composition"], f"{where}.composition"),
            )
        )
    raw_index = {r.name: i for i, r in enumerate(raws)}

    bins = []
    bin_arcs = []
    for rec in doc.get("bins", []):
        where = f"bin {rec.get('name', '?')!r}"
        _check_keys(rec, _BIN_KEYS, where)
        comp_lo = comp_hi = None
        if "bounds" in rec:
            if not isinstance(rec["bounds"], dict):
                raise InstanceFormatError(f"{where}.bounds: expected a nutrient map")
            extra = [n for n in rec["bounds"] if n not in nutrients]
            if extra:
                raise InstanceFormatError(f"{where}.bounds: unknown nutrient {extra[0]!r}")
            lo, hi = [], []
            for n in nutrients:
                pair = rec["bounds"].get(n, ["-inf", "inf"])
                lo.append(_num(pair[0], f"{where}.bounds[{n}]"))
                hi.append(_num(pair[1], f"{where}.bounds[{n}]"))
            comp_lo, comp_hi = tuple(lo), tuple(hi)
        j = len(bins)
        bins.append(Bin(rec["name"], comp_lo, comp_hi))
        for rname in rec.get("allowed_raws", []):
            if rname not in raw_index:
                raise InstanceFormatError(f"{where}: unknown raw {rname!r} in allowed_raws")
            bin_arcs.append((raw_index[rname], j))
    bin_index = {b.name: j for j, b in enumerate(bins)}

    products = []
    product_arcs = []
    straight_arcs = []
    for rec in doc["products"]:
        where = f"product {rec.get('name', '?')!r}"
        _check_keys(rec, _PRODUCT_KEYS, where)
        bounds = rec.get("bounds")
        if not isinstance(bounds, dict):
            raise InstanceFormatError(f"{where}: missing nutrient bounds map")
        extra = [n for n in bounds if n not in nutrients]
        if extra:
            raise InstanceFormatError(f"{where}.bounds: unknown nutrient {extra[0]!r}")
        lo, hi = [], []
        for n in nutrients:
            pair = bounds.get(n, ["-inf", "inf"])
            lo.append(_num(pair[0], f"{where}.bounds[{n}]"))
            hi.append(_num(pair[1], f"{where}.bounds[{n}]"))
        k = len(products)
        products.append(
            Product(rec["name"], _num(rec["demand"], f"{where}.demand"), tuple(lo), tuple(hi),
                    _num(rec.get("price", 0.0), f"{where}.price"))
        )
        for bname in rec.get("allowed_bins", []):
            if bname not in bin_index:
                raise InstanceFormatError(f"{where}: unknown bin {bname!r} in allowed_bins")
            product_arcs.append((bin_index[bname], k))
        for rname in rec.get("allowed_straights", []):
            if rname not in raw_index:
                raise InstanceFormatError(f"{where}: unknown raw {rname!r} in allowed_straights")
            straight_arcs.append((raw_index[rname], k))

    instance = PoolingInstance(
        nutrients=nutrients,
        raws=tuple(raws),
        bins=tuple(bins),
        products=tuple(products),
        bin_arcs=tuple(bin_arcs),
        product_arcs=tuple(product_arcs),
        straight_arcs=tuple(straight_arcs),
        meta=dict(doc.get("meta", {})),
    )
    bad = validate_instance(instance)
    if bad:
        raise InstanceFormatError("instance fails validation: " + "; ".join(str(v) for v in bad))
    return instance


def load_instance(path) -> PoolingInstance:
    """Read and validate a .pool document from disk."""
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from exc
    return loads_instance(text)
