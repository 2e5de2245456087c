"""Command-line interface.

Subcommands: solve (one SLP run), multistart (batch + statistics + report
CSV), hexagon (the two-nutrient study), sizes (formulation size formulas),
gen (synthetic instances).  Exit codes: 0 success, 1 solver non-success,
2 input error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .fileio import InstanceFormatError, load_instance, save_instance
from .formulations import FormulationKind, build_model, formulation_size
from .generator import GeneratorSpec, generate_instance
from .hexagon import (
    HexagonParams,
    build_hexagon_instance,
    enumerate_local_optima,
    oracle_optimum,
    write_clusters_csv,
)
from .multistart import (
    expected_time_curve,
    random_start,
    run_multistart,
    summary_lines,
    write_curve_csv,
    write_report_csv,
)
from .slp import SlpOptions, slp_solve


def _parse_dims(text: str) -> tuple[int, int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 5:
        raise argparse.ArgumentTypeError("dims must be N,I,M,P,S")
    try:
        return tuple(int(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise argparse.ArgumentTypeError("dims must be integers") from None


def _formulation(text: str) -> FormulationKind:
    try:
        return FormulationKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--formulation", type=_formulation, default=FormulationKind.QQ,
                   help="q, pq, pqs, qq or qq+ (default qq)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--tol-feas", type=float, default=1e-6)
    p.add_argument("--tol-opt", type=float, default=1e-6)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--trace", default=None, help="per-iteration CSV trace path")


def _options(args) -> SlpOptions:
    return SlpOptions(feas_tol=args.tol_feas, opt_tol=args.tol_opt,
                      time_limit=args.time_limit, trace=getattr(args, "trace", None))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="poolslp",
                                 description="Fixed-demand pooling problems: SLP local solves and multistart studies")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="one SLP solve from a seeded random start")
    p.add_argument("--instance", required=True)
    _add_common(p)

    p = sub.add_parser("multistart", help="seeded multistart batch with statistics")
    p.add_argument("--instance", required=True)
    _add_common(p)
    p.add_argument("--runs", type=int, default=500)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--best-known", type=float, default=None)
    p.add_argument("--good-pct", type=float, default=0.2, help="good threshold in percent (default 0.2)")
    p.add_argument("--out", default=None, help="report CSV path")
    p.add_argument("--curve", default=None, help="expected-time curve CSV path")

    p = sub.add_parser("hexagon", help="two-nutrient hexagon local-optima study")
    p.add_argument("--runs", type=int, default=20000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--straight-factor", type=float, default=2.1)
    p.add_argument("--inner-ratio", type=float, default=None, help="override default inner hexagon ratio")
    p.add_argument("--resolution", type=int, default=64, help="oracle grid resolution")
    p.add_argument("--skip-oracle", action="store_true")
    p.add_argument("--out", default=None, help="cluster CSV path (objective, count, signature, bin coords)")
    p.add_argument("--save-instance", default=None, help="write the instance as a .pool file")

    p = sub.add_parser("sizes", help="formulation size formulas for dense instances")
    p.add_argument("--dims", type=_parse_dims, required=True, help="N,I,M,P,S")
    p.add_argument("--formulation", type=_formulation, default=FormulationKind.QQ)

    p = sub.add_parser("gen", help="generate a synthetic instance")
    p.add_argument("--dims", type=_parse_dims, required=True, help="N,I,M,P,S")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bound-width", type=float, default=0.1)
    p.add_argument("--premium", type=float, default=2.0)
    p.add_argument("--out", required=True)
    return ap


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    model = build_model(instance, args.formulation)
    rng = np.random.default_rng(args.seed)
    res = slp_solve(model, random_start(model, rng), _options(args))
    print(f"status={res.status}")
    print(f"f={res.f:.10g}")
    print(f"h={res.h:.3g}")
    print(f"iterations={res.iterations}")
    print(f"time_s={res.wall_time:.3f}")
    return 0 if res.status == "optimal-local" or res.h < args.tol_feas else 1


def _cmd_multistart(args) -> int:
    instance = load_instance(args.instance)
    model = build_model(instance, args.formulation)
    report = run_multistart(
        model, args.runs, args.seed,
        best_known=args.best_known, budget=args.time_limit,
        options=_options(args), workers=args.workers,
        good_rel=args.good_pct / 100.0,
    )
    if args.out:
        write_report_csv(report, args.out)
    if args.curve:
        write_curve_csv(expected_time_curve(report), args.curve)
    for line in summary_lines(report):
        print(line)
    return 0 if report.pct_feas > 0 else 1


def _cmd_hexagon(args) -> int:
    kwargs = {"straight_factor": args.straight_factor}
    if args.inner_ratio is not None:
        kwargs["inner_ratio"] = args.inner_ratio
    params = HexagonParams(**kwargs)
    instance = build_hexagon_instance(params)
    if args.save_instance:
        save_instance(instance, args.save_instance)
    model = build_model(instance, FormulationKind.QQ)
    if not args.skip_oracle:
        obj, cfg = oracle_optimum(params, grid_resolution=args.resolution)
        sig = ",".join(str(k) for k in sorted(cfg.straight_products)) if cfg else ""
        print(f"oracle_objective={obj:.10g}")
        print(f"oracle_straights={sig or '-'}")
    report = run_multistart(model, args.runs, args.seed, workers=args.workers, keep_points=True)
    clusters = enumerate_local_optima(instance, report=report, model=model)
    print(f"pct_feas={report.pct_feas:.10g}")
    print(f"best_f={report.best_feasible:.10g}")
    print(f"n_clusters={len(clusters)}")
    values = []
    for cl in clusters:
        if not any(abs(cl.objective - v) <= 1e-6 * max(1.0, abs(v)) for v in values):
            values.append(cl.objective)
    print(f"n_objective_values={len(values)}")
    if args.out:
        write_clusters_csv(clusters, args.out, instance, model)
    return 0 if report.pct_feas > 0 else 1


def _cmd_sizes(args) -> int:
    n, m = formulation_size(args.dims, args.formulation)
    print(f"n={n} m={m}")
    return 0


def _cmd_gen(args) -> int:
    spec = GeneratorSpec(dims=args.dims, seed=args.seed, bound_width=args.bound_width,
                         straight_premium=args.premium)
    save_instance(generate_instance(spec), args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "solve": _cmd_solve,
        "multistart": _cmd_multistart,
        "hexagon": _cmd_hexagon,
        "sizes": _cmd_sizes,
        "gen": _cmd_gen,
    }
    try:
        return handlers[args.command](args)
    except (InstanceFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
