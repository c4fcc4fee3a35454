"""Command-line entry point for reproducible runs.

Subcommands: decompose, check-shadow, relax, qc-test, minimize, comass,
report. Every run writes a manifest (config echo + options + versions +
seed); pointing --config at a manifest reruns it and reproduces all
output files byte-identically. Exit codes: 0 success, 2 parse/config
error, 3 quasiconvexity violation found, 4 line-search stall.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import platform
import sys

import numpy as np
import scipy

from . import __version__
from .bundle import check_closedness, shadow_decompose, shadow_reconstruct
from .comass import comass_value
from .forms import FormValue, exterior_derivative
from .minimizer import DiscreteField, SolveReport, minimize
from .quasiconvexity import Integrand, riemannian_qc_test
from .relaxation import check_admissible, coercivity_check
from .serialize import (
    SCHEMA_VERSION,
    SchemaError,
    build_metric,
    chart_from_dict,
    domain_from_dict,
    dumps,
    fmt_float,
    form_from_dict,
    form_to_dict,
    parse_float,
    problem_from_dict,
    read_document,
    shadow_from_dict,
    shadow_to_dict,
    write_document,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VIOLATION = 3
EXIT_STALL = 4


def _versions() -> dict:
    return {
        "fibreforms": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def _pin_threadpools() -> None:
    """Cap BLAS pools at one thread so reductions are order-deterministic."""
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=1)
    except ImportError:  # pragma: no cover - present in supported installs
        pass


def _load_config(args) -> tuple[dict, dict]:
    """Resolve --config, unwrapping a manifest into (config, options)."""
    doc = read_document(args.config)
    if isinstance(doc, dict) and doc.get("kind") == "manifest":
        if doc.get("subcommand") != args.subcommand:
            raise SchemaError(
                f"manifest records subcommand {doc.get('subcommand')!r}, not {args.subcommand!r}"
            )
        return doc["config"], dict(doc["options"])
    options = {}
    for name in ("seed", "tolerance", "resolution", "trials", "quadrature_order", "threads"):
        v = getattr(args, name.replace("-", "_"), None)
        if v is not None:
            options[name] = v
    return doc, options


def _write_outputs(out_dir: str, subcommand: str, config: dict, options: dict, outputs: dict) -> None:
    import os

    os.makedirs(out_dir, exist_ok=True)
    names = sorted(outputs)
    for name in names:
        write_document(os.path.join(out_dir, name), outputs[name])
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "kind": "manifest",
        "subcommand": subcommand,
        "config": config,
        "options": options,
        "versions": _versions(),
        "outputs": names,
    }
    write_document(os.path.join(out_dir, "manifest.json"), manifest)


# -- subcommands --------------------------------------------------------------

def cmd_decompose(args) -> int:
    config, options = _load_config(args)
    chart = chart_from_dict(config["chart"], "config.chart")
    xi = form_from_dict(config["form"], "config.form")
    sd = shadow_decompose(xi, chart)
    closed, residual = check_closedness(sd, tolerance=options.get("tolerance", 1e-8))
    recon_ok = shadow_reconstruct(sd) == exterior_derivative(xi)
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "decompose_report",
        "entries": len(sd.entries),
        "flagged_vertical": sd.flagged_vertical,
        "closed": bool(closed),
        "residual_is_zero_form": residual.is_zero(),
        "reconstruction_matches": bool(recon_ok),
    }
    _write_outputs(args.out, "decompose", config, options, {
        "shadow.json": shadow_to_dict(sd),
        "decompose_report.json": report,
    })
    return EXIT_OK


def cmd_check_shadow(args) -> int:
    config, options = _load_config(args)
    sd = shadow_from_dict(config, "config")
    closed, residual = check_closedness(sd, tolerance=options.get("tolerance", 1e-8))
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "shadow_check_report",
        "closed": bool(closed),
        "residual_is_zero_form": residual.is_zero(),
        "entries": len(sd.entries),
    }
    _write_outputs(args.out, "check-shadow", config, options, {"shadow_check_report.json": report})
    return EXIT_OK


def cmd_relax(args) -> int:
    config, options = _load_config(args)
    problem = problem_from_dict(config, "config")
    sd = problem.potential_to_tuple(problem.gauge.xi_tilde)
    gs = [e.g for e in sd.entries]
    thetas = [e.theta for e in sd.entries]
    adm = check_admissible(
        sd.f, gs, thetas, problem.gauge, problem.domain, problem.chart,
        tolerance=options.get("tolerance", 1e-8),
    )
    obj = problem.gauged_objective(problem.gauge.xi_tilde)
    growth = problem.cost.growth
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "relax_report",
        "gauged_objective_at_gauge": obj,
        "tuple_entries": len(sd.entries),
        "admissible": adm.admissible,
        "closedness_residual": adm.closedness_residual,
        "max_normal_pairing": adm.max_normal_pairing,
        "growth_declared": None
        if growth is None
        else {"a1": growth.a1, "a2": growth.a2, "b1": growth.b1, "b2": growth.b2, "s": growth.s},
    }
    _write_outputs(args.out, "relax", config, options, {"relax_report.json": report})
    return EXIT_OK


def _build_integrand(spec: dict, dim: int) -> Integrand:
    t = spec.get("type")
    shift = np.array([parse_float(v, "integrand.shift") for v in spec.get("shift", [0.0] * dim)])
    if t == "quadratic":
        return Integrand(dim, lambda x, p: np.sum((p - shift) ** 2, axis=-1))
    if t == "neg_quadratic":
        return Integrand(dim, lambda x, p: -np.sum((p - shift) ** 2, axis=-1))
    if t == "abs":
        return Integrand(dim, lambda x, p: np.sqrt(np.sum(p * p, axis=-1)))
    if t == "double_well":
        axis = int(spec.get("axis", 1)) - 1
        if not 0 <= axis < dim:
            raise SchemaError("integrand.axis out of range")
        e = np.zeros(dim)
        e[axis] = 1.0

        def ev(x, p):
            return np.minimum(np.sum((p - e) ** 2, -1), np.sum((p + e) ** 2, -1))

        return Integrand(dim, ev)
    raise SchemaError(f"integrand.type: unrecognized {t!r}")


def cmd_qc_test(args) -> int:
    config, options = _load_config(args)
    dom = domain_from_dict(config["domain"], "config.domain")
    dim = dom.dim
    metric = build_metric(config.get("metric", "euclidean"), dim, "config.metric")
    F = _build_integrand(config["integrand"], dim)
    x0 = [parse_float(v, "config.x0") for v in config["x0"]]
    p = [parse_float(v, "config.p") for v in config["p"]]
    trials = int(options.get("trials", config.get("trials", 100)))
    seed = int(options.get("seed", config.get("seed", 0)))
    order = int(options.get("quadrature_order", config.get("order", 6)))
    threads = int(options.get("threads", 1))
    if threads > 1:
        pool = concurrent.futures.ThreadPoolExecutor(max_workers=threads)
        map_fn = pool.map
    else:
        pool, map_fn = None, map
    try:
        rep = riemannian_qc_test(
            F, x0, p, tuple(map(tuple, dom.box)), metric,
            trials=trials, seed=seed, order=order, map_fn=map_fn,
        )
    finally:
        if pool is not None:
            pool.shutdown()
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "qc_report",
        "violation_found": rep.violation_found,
        "worst_gap": rep.worst_gap,
        "tolerance": rep.tolerance,
        "trials": rep.trials,
        "certified": rep.certified,
        "aborted_trials": rep.aborted_trials,
        "note": rep.note,
    }
    outputs = {"qc_report.json": report}
    if rep.violation_found and rep.witness is not None:
        outputs["witness.json"] = {
            "schema_version": SCHEMA_VERSION,
            "kind": "qc_witness",
            "worst_gap": rep.worst_gap,
            "witness": rep.witness,
            "seed": seed,
        }
    # the recorded option set must fully determine the run
    options = dict(options, trials=trials, seed=seed, quadrature_order=order)
    _write_outputs(args.out, "qc-test", config, options, outputs)
    return EXIT_VIOLATION if rep.violation_found else EXIT_OK


def _solve_report_doc(rep: SolveReport) -> dict:
    # wall time is deliberately not serialized: outputs must be rerun-stable
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "solve_report",
        "objective": rep.objective,
        "history": list(rep.history),
        "grad_norm": rep.grad_norm,
        "reason": rep.reason,
        "iterations": rep.iterations,
        "resolution": rep.resolution,
        "stalled": rep.stalled,
        "notes": list(rep.notes),
    }


def cmd_minimize(args) -> int:
    config, options = _load_config(args)
    problem = problem_from_dict(config, "config")
    resolution = int(options.get("resolution", problem.discretization.resolution))
    if resolution < 7 or resolution % 2 == 0:
        raise SchemaError(
            "resolution must be odd and at least 7 (smaller grids have no interior degrees of freedom)"
        )
    xi_hat, rep = minimize(problem, "gauge", resolution=resolution)
    field_doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "discrete_field",
        "resolution": xi_hat.resolution,
        "box": [[fmt_float(lo), fmt_float(hi)] for lo, hi in xi_hat.box],
        "indices": [list(M) for M in xi_hat.indices],
        "values": {",".join(map(str, M)): [fmt_float(v) for v in xi_hat.values[M].ravel()] for M in xi_hat.indices},
    }
    options = dict(options, resolution=resolution)
    _write_outputs(args.out, "minimize", config, options, {
        "solve_report.json": _solve_report_doc(rep),
        "minimizer_field.json": field_doc,
    })
    # history.csv is plain CSV, written with the same .partial discipline
    import os

    csv_path = os.path.join(args.out, "history.csv")
    tmp = csv_path + ".partial"
    with open(tmp, "w") as fh:
        fh.write("iteration,objective\n")
        for i, v in enumerate(rep.history):
            fh.write(f"{i},{fmt_float(v)}\n")
    os.replace(tmp, csv_path)
    return EXIT_STALL if rep.stalled else EXIT_OK


def cmd_comass(args) -> int:
    config, options = _load_config(args)
    a = form_from_dict(config["form"], "config.form")
    metric = build_metric(config.get("metric", "euclidean"), a.chart_dim, "config.metric")
    point = np.array([parse_float(v, "config.point") for v in config["point"]])
    seed = int(options.get("seed", config.get("seed", 0)))
    value = FormValue(a.chart_dim, a.degree, a.value_at(point))
    gx = metric.at(point)
    c = comass_value(value, gx, restarts=int(config.get("restarts", 32)), iters=int(config.get("iters", 200)), seed=seed)[0]
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "comass_report",
        "comass": c,
        "point": [fmt_float(v) for v in point],
        "seed": seed,
    }
    options = dict(options, seed=seed)
    _write_outputs(args.out, "comass", config, options, {"comass_report.json": report})
    print(fmt_float(c))
    return EXIT_OK


def cmd_report(args) -> int:
    doc = read_document(args.config)
    kind = doc.get("kind", "unknown")
    lines = [f"document kind: {kind}"]
    skip = {"schema_version", "kind", "config", "values"}
    for key in sorted(doc):
        if key in skip:
            continue
        val = doc[key]
        if isinstance(val, list) and len(val) > 8:
            val = f"[{len(val)} entries]"
        lines.append(f"  {key}: {val}")
    print("\n".join(lines))
    return EXIT_OK


# -- entry point ---------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="config document (or a manifest to rerun)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--quadrature-order", type=int, default=None)


def main(argv=None) -> int:
    _pin_threadpools()
    parser = argparse.ArgumentParser(prog="fibreforms")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    handlers = {
        "decompose": cmd_decompose,
        "check-shadow": cmd_check_shadow,
        "relax": cmd_relax,
        "qc-test": cmd_qc_test,
        "minimize": cmd_minimize,
        "comass": cmd_comass,
        "report": cmd_report,
    }
    for name in handlers:
        sp = sub.add_parser(name)
        _add_common(sp)
    args = parser.parse_args(argv)
    try:
        return handlers[args.subcommand](args)
    except (SchemaError, KeyError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
