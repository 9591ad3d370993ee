"""Command-line front end producing reproducible CSV/JSON artifacts.

Subcommands::

    simcurv list-models
    simcurv curvature-grid      --model M --params JSON --a SPEC --grid SPEC --out DIR
    simcurv validate-necessary  (same inputs; exit 0 = pass, 1 = fail)
    simcurv integral            --orders 0:5 (enzyme-type models)
    simcurv criteria-sweep      --model davis_skodje --u 2 --c-range -0.05:0.05

Exit codes: 0 success/pass, 1 validation fail, 2 numerical failure,
3 bad input.  Identical manifests produce byte-identical CSVs; the degree
of parallelism (--jobs, overridden by the SIMCURV_JOBS environment
variable) never affects results.  Every output directory receives a
manifest.json sufficient to reproduce the run.

Lift specifications (--a): ``h_eps`` (slow manifold graph), ``h0``
(critical manifold graph), ``asym:K`` (order-K asymptotic truncation),
``family:c=0.5`` (invariant family member; ``c1=..,c2=..`` for two-fast
models), ``const:v`` (constant lift, comma-separated per fast component).

Tolerance ledger: closed-form evaluations are exact to rounding, so the
necessary-condition gate defaults to --tol-closed 1e-7; BVP-backed stencil
evaluations carry a differencing noise floor of about 1e-4 (solver noise
1e-10 divided by the 1e-3 stencil step squared), hence --tol-numeric 1e-4.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .bvp import BvpConfig
from .criteria import CRITERIA, CriterionSpec, criteria_sweep, minimize_criterion
from .errors import SimcurvError
from .geometry import curvature_field, curvature_integral, resolve_jobs
from .graphp import has_closed_form
from .grids import GridSpec
from .ode import IntegratorConfig
from .systems import (
    MODEL_NAMES,
    asymptotic_initial_value,
    constant_initial_value,
    critical_graph,
    invariant_family,
    make_system,
    sim_graph,
    _MODELS,
)

EXIT_OK = 0
EXIT_VALIDATION_FAIL = 1
EXIT_NUMERICAL = 2
EXIT_BAD_INPUT = 3

_ROUTE_NAMES = {"gauss": "gauss_equation", "christoffel": "christoffel", "closed11": "closed_11"}


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the exit-code contract reserves
    # 2 for numerical failures, so remap to 3
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_BAD_INPUT)


def _add_model_args(p, require_a=True):
    p.add_argument("--model", required=True, help=f"one of {', '.join(MODEL_NAMES)}")
    p.add_argument("--params", required=True, help='JSON parameter object, e.g. {"gamma": 3.5}')
    p.add_argument(
        "--a", required=require_a, default="asym:0" if not require_a else None,
        dest="a_spec", help="lift specification (see module help)",
    )
    p.add_argument("--grid", required=True, help='grid spec "t=0:2:10,x1=0:3:20"')
    p.add_argument("--route", default="gauss", choices=sorted(_ROUTE_NAMES))
    p.add_argument("--mode", default="auto", choices=["auto", "closed", "numeric", "bvp"])
    p.add_argument("--jobs", type=int, default=None, help="parallel node evaluations")
    p.add_argument("--tol-closed", type=float, default=1e-7)
    p.add_argument("--tol-numeric", type=float, default=1e-4)
    p.add_argument("--rtol", type=float, default=1e-10, help="integrator relative tolerance")
    p.add_argument("--atol", type=float, default=1e-12, help="integrator absolute tolerance")
    p.add_argument("--max-steps", type=int, default=1_000_000)
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="simcurv", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"simcurv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list-models", help="list registered models and parameters")

    p = sub.add_parser("curvature-grid", help="curvature field over a grid as CSV")
    _add_model_args(p)

    p = sub.add_parser("validate-necessary", help="assert max |K| below the route tolerance")
    _add_model_args(p)

    p = sub.add_parser("integral", help="curvature integral over asymptotic lift orders")
    _add_model_args(p, require_a=False)  # the lift is rebuilt per order
    p.add_argument("--orders", default="0:5", help='order list "0:5" or "0,2,4"')

    p = sub.add_parser("criteria-sweep", help="F1/F2/F3 sweep over the family parameter")
    p.add_argument("--model", default="davis_skodje")
    p.add_argument("--params", required=True)
    p.add_argument("--u", type=float, required=True, help="slow evaluation point")
    p.add_argument("--c-range", default="-0.05:0.05")
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--k1", type=float, default=None, help="F3 kinetic weight (default 1)")
    p.add_argument("--k2", type=float, default=None, help="F3 potential weight (default gamma/(u+1))")
    p.add_argument("--out", required=True)
    return parser


def _parse_a(system, spec: str):
    spec = spec.strip()
    if spec == "h_eps":
        return sim_graph(system)
    if spec == "h0":
        return critical_graph(system)
    if spec.startswith("asym:"):
        return asymptotic_initial_value(system, int(spec.split(":", 1)[1]))
    if spec.startswith("const:"):
        vals = [float(v) for v in spec.split(":", 1)[1].split(",")]
        return constant_initial_value(system, vals)
    if spec.startswith("family:"):
        body = spec.split(":", 1)[1]
        kv = {}
        for part in body.split(","):
            key, val = part.split("=", 1)
            kv[key.strip()] = float(val)
        if set(kv) == {"c"}:
            return invariant_family(system, kv["c"])
        keys = sorted(kv)
        expected = [f"c{i + 1}" for i in range(len(kv))]
        if keys != expected:
            raise ValueError(f"family parameters must be c or c1..cN, got {keys}")
        return invariant_family(system, tuple(kv[k] for k in expected))
    raise ValueError(f"bad lift specification {spec!r}")


def _setup(args):
    system = make_system(args.model, json.loads(args.params))
    a = _parse_a(system, args.a_spec)
    grid = GridSpec.parse(args.grid, k=system.k)
    route = _ROUTE_NAMES[args.route]
    bvp_config = BvpConfig(
        integrator=IntegratorConfig(rtol=args.rtol, atol=args.atol, max_steps=args.max_steps)
    )
    return system, a, grid, route, bvp_config


def _manifest(args, command, extra=None):
    man = {
        "tool": "simcurv",
        "version": __version__,
        "command": command,
        "model": args.model,
        "params": json.loads(args.params),
    }
    for name in ("a_spec", "grid", "route", "mode"):
        if hasattr(args, name):
            man[name] = getattr(args, name)
    for name in ("tol_closed", "tol_numeric", "rtol", "atol", "max_steps"):
        if hasattr(args, name):
            man.setdefault("tolerances", {})[name] = getattr(args, name)
    if extra:
        man.update(extra)
    return man


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jobs(args):
    env = os.environ.get("SIMCURV_JOBS")
    if env:
        return max(1, int(env))
    return resolve_jobs(getattr(args, "jobs", None))


def cmd_list_models(args) -> int:
    for name in MODEL_NAMES:
        d = _MODELS[name]
        print(f"{name:16s} (k={d.k}, m={d.m})  params: {', '.join(d.param_order)}")
    return EXIT_OK


def cmd_curvature_grid(args) -> int:
    system, a, grid, route, bvp_config = _setup(args)
    field = curvature_field(
        system, a, grid, route=route, mode=args.mode, jobs=_jobs(args), bvp_config=bvp_config
    )
    os.makedirs(args.out, exist_ok=True)
    field.to_csv(os.path.join(args.out, "field.csv"))
    summary = {
        "max_abs_K": field.max_abs_K,
        "mean_abs_K": float(np.mean(np.abs(field.K))),
        "mean_abs_K2": field.mean_abs_K2,
        "node_count": int(field.points.shape[0]),
        "failures": [],
    }
    _write_json(os.path.join(args.out, "summary.json"), summary)
    _write_json(os.path.join(args.out, "manifest.json"), _manifest(args, "curvature-grid"))
    print(f"curvature-grid: {summary['node_count']} nodes, max|K| = {field.max_abs_K:.6g}")
    return EXIT_OK


def cmd_validate_necessary(args) -> int:
    system, a, grid, route, bvp_config = _setup(args)
    field = curvature_field(
        system, a, grid, route=route, mode=args.mode, jobs=_jobs(args), bvp_config=bvp_config
    )
    # closed-form evaluations are exact; FD-backed ones carry the stencil noise floor
    closed_eval = args.mode == "closed" or (args.mode == "auto" and has_closed_form(system, a))
    tol = args.tol_closed if closed_eval else args.tol_numeric
    worst = int(np.argmax(np.max(np.abs(field.K), axis=1)))
    report = {
        "passed": bool(field.max_abs_K <= tol),
        "tolerance": tol,
        "max_abs_K": field.max_abs_K,
        "worst_node": {
            "point": [float(v) for v in field.points[worst]],
            "K": [float(v) for v in field.K[worst]],
        },
        "route": route,
    }
    os.makedirs(args.out, exist_ok=True)
    field.to_csv(os.path.join(args.out, "field.csv"))
    _write_json(os.path.join(args.out, "report.json"), report)
    _write_json(os.path.join(args.out, "manifest.json"), _manifest(args, "validate-necessary"))
    status = "PASS" if report["passed"] else "FAIL"
    print(
        f"validate-necessary: {status}  max|K| = {field.max_abs_K:.6g} "
        f"(tol {tol:g}) worst node {report['worst_node']['point']} K = "
        + ", ".join(f"{v:.6g}" for v in report["worst_node"]["K"])
    )
    return EXIT_OK if report["passed"] else EXIT_VALIDATION_FAIL


def _parse_orders(text: str):
    text = text.strip()
    if ":" in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def cmd_integral(args) -> int:
    system, _, grid, route, bvp_config = _setup(args)
    orders = _parse_orders(args.orders)
    values = []
    for k in orders:
        a_k = asymptotic_initial_value(system, k)
        values.append(
            curvature_integral(
                system, a_k, grid, route=route, mode=args.mode, jobs=_jobs(args),
                bvp_config=bvp_config,
            )
        )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "integral.csv"), "w", encoding="utf-8") as fh:
        fh.write("k,I\n")
        for k, v in zip(orders, values):
            fh.write(f"{k},{v!r}\n")
    monotone = all(a > b for a, b in zip(values, values[1:]))
    _write_json(
        os.path.join(args.out, "summary.json"),
        {"orders": orders, "I": values, "monotone_decreasing": monotone},
    )
    _write_json(
        os.path.join(args.out, "manifest.json"),
        _manifest(args, "integral", {"orders": orders}),
    )
    for k, v in zip(orders, values):
        print(f"I[a_{k}] = {v:.8g}")
    print(f"monotone decreasing: {monotone}")
    return EXIT_OK


def cmd_criteria_sweep(args) -> int:
    system = make_system(args.model, json.loads(args.params))
    lo, hi = (float(v) for v in args.c_range.split(":"))
    if args.samples < 1:
        raise ValueError("samples must be >= 1")
    cs = np.linspace(lo, hi, args.samples) if args.samples > 1 else np.array([lo])
    gamma = system.params["gamma"]
    k1 = 1.0 if args.k1 is None else args.k1
    k2 = gamma / (args.u + 1.0) if args.k2 is None else args.k2

    rows = criteria_sweep(system, args.u, cs, k1, k2)
    minimizers = {}
    for kind in CRITERIA:
        spec = CriterionSpec(kind, args.u, system, k1=k1, k2=k2)
        res = minimize_criterion(spec)
        minimizers[kind] = {
            "c_min_closed": res.c_min,
            "c_min_numeric": res.c_min_numeric,
            "value": res.value,
            "second_derivative": res.second_derivative,
        }
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "sweep.csv"), "w", encoding="utf-8") as fh:
        fh.write("c,F1,F2,F3\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    _write_json(os.path.join(args.out, "minimizers.json"), minimizers)
    _write_json(
        os.path.join(args.out, "manifest.json"),
        _manifest(args, "criteria-sweep", {"u": args.u, "k1": k1, "k2": k2,
                                           "c_range": [lo, hi], "samples": args.samples}),
    )
    for kind in CRITERIA:
        m = minimizers[kind]
        print(f"{kind}: c_min = {m['c_min_closed']:.8g} (numeric {m['c_min_numeric']:.8g})")
    return EXIT_OK


_COMMANDS = {
    "list-models": cmd_list_models,
    "curvature-grid": cmd_curvature_grid,
    "validate-necessary": cmd_validate_necessary,
    "integral": cmd_integral,
    "criteria-sweep": cmd_criteria_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_BAD_INPUT
    try:
        return _COMMANDS[args.command](args)
    except SimcurvError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
