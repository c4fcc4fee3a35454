"""Structured-text (JSON) serialization with strict schemas.

Round-trip fidelity rules: every float is written with 17 significant
digits as a string, exact rational coefficients as "p/q" strings, and
unknown keys are errors. Documents carry a schema_version.
"""
from __future__ import annotations

import json
import os
from fractions import Fraction
from typing import Any

from .bundle import BundleChart, ShadowData, ShadowEntry, StarDomain
from .forms import Form
from .metric import MetricField
from .polynomial import Polynomial
from .relaxation import (
    ComassPowerCost,
    ConstantCost,
    CostFunction,
    Discretization,
    DoubleWellCost,
    GaugeForm,
    GaugedProblem,
    QuadraticCost,
    ZeroCost,
    relax,
)

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Raised on malformed documents; message carries a field path."""


def _fail(path: str, msg: str):
    raise SchemaError(f"{path}: {msg}")


def _expect_keys(obj: dict, path: str, required: set, optional: set = frozenset()):
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {type(obj).__name__}")
    unknown = set(obj) - required - set(optional)
    if unknown:
        _fail(path, f"unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        _fail(path, f"missing keys {sorted(missing)}")


# -- scalars ---------------------------------------------------------------

def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def parse_float(s: Any, path: str = "float") -> float:
    try:
        return float(s)
    except (TypeError, ValueError):
        _fail(path, f"not a number: {s!r}")


def fmt_fraction(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def parse_fraction(s: Any, path: str = "fraction") -> Fraction:
    try:
        if isinstance(s, str):
            return Fraction(s)
        if isinstance(s, int):
            return Fraction(s)
    except (ValueError, ZeroDivisionError):
        pass
    _fail(path, f"not a rational: {s!r}")


# -- polynomials -----------------------------------------------------------

def poly_to_dict(p: Polynomial) -> dict:
    terms = sorted(p.terms.items())
    return {
        "nvars": p.nvars,
        "terms": [[list(e), fmt_fraction(c)] for e, c in terms],
    }


def poly_from_dict(d: dict, path: str = "polynomial") -> Polynomial:
    _expect_keys(d, path, {"nvars", "terms"})
    n = d["nvars"]
    if not isinstance(n, int) or n < 1:
        _fail(path + ".nvars", "must be a positive integer")
    terms = {}
    for i, item in enumerate(d["terms"]):
        if not (isinstance(item, list) and len(item) == 2):
            _fail(f"{path}.terms[{i}]", "expected [exponents, coefficient]")
        exps, coeff = item
        if not (isinstance(exps, list) and len(exps) == n and all(isinstance(e, int) and e >= 0 for e in exps)):
            _fail(f"{path}.terms[{i}]", f"exponent list must hold {n} nonnegative integers")
        terms[tuple(exps)] = parse_fraction(coeff, f"{path}.terms[{i}]")
    return Polynomial(n, terms)


# -- forms -----------------------------------------------------------------

def _index_key(idx) -> str:
    return ",".join(str(i) for i in idx)


def _parse_index(key: str, path: str) -> tuple:
    if key == "":
        return ()
    try:
        return tuple(int(t) for t in key.split(","))
    except ValueError:
        _fail(path, f"bad multi-index key {key!r}")


def form_to_dict(a: Form) -> dict:
    if a.kind() != "polynomial":
        raise SchemaError("only polynomial-coefficient forms are serializable")
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "form",
        "chart_dim": a.chart_dim,
        "degree": a.degree,
        "coefficients": {_index_key(i): poly_to_dict(c) for i, c in sorted(a.terms.items())},
    }


def form_from_dict(d: dict, path: str = "form") -> Form:
    _expect_keys(d, path, {"schema_version", "kind", "chart_dim", "degree", "coefficients"})
    if d["schema_version"] != SCHEMA_VERSION:
        _fail(path, f"unsupported schema_version {d['schema_version']}")
    if d["kind"] != "form":
        _fail(path + ".kind", f"expected 'form', got {d['kind']!r}")
    terms = {}
    for key, pd in d["coefficients"].items():
        idx = _parse_index(key, f"{path}.coefficients[{key!r}]")
        terms[idx] = poly_from_dict(pd, f"{path}.coefficients[{key!r}]")
    return Form(d["chart_dim"], d["degree"], terms)


# -- metric / chart / domain ------------------------------------------------

def build_metric(spec, dim: int, path: str = "metric") -> MetricField:
    if spec == "euclidean":
        m = MetricField.euclidean(dim)
    elif isinstance(spec, dict) and spec.get("type") == "diagonal":
        _expect_keys(spec, path, {"type", "entries"})
        entries = []
        for i, e in enumerate(spec["entries"]):
            if isinstance(e, dict):
                entries.append(poly_from_dict(e, f"{path}.entries[{i}]"))
            else:
                entries.append(parse_float(e, f"{path}.entries[{i}]"))
        if len(entries) != dim:
            _fail(path, f"need {dim} diagonal entries, got {len(entries)}")
        m = MetricField.diagonal(entries)
    elif isinstance(spec, dict) and spec.get("type") == "dense":
        _expect_keys(spec, path, {"type", "entries"})
        rows = [[poly_from_dict(e, f"{path}[{i}][{j}]") for j, e in enumerate(row)] for i, row in enumerate(spec["entries"])]
        if len(rows) != dim or any(len(r) != dim for r in rows):
            _fail(path, f"need a {dim}x{dim} entry table")
        m = MetricField.dense_polynomial(rows)
    else:
        _fail(path, f"unrecognized metric spec {spec!r}")
    m.spec = spec
    return m


def metric_to_spec(m: MetricField):
    spec = getattr(m, "spec", None)
    if spec is None:
        if m.flat:
            return "euclidean"
        raise SchemaError("metric carries no serializable spec")
    return spec


def chart_to_dict(chart: BundleChart) -> dict:
    return {
        "n": chart.n,
        "k": chart.k,
        "box": [[fmt_float(lo), fmt_float(hi)] for lo, hi in chart.box],
        "metric": metric_to_spec(chart.metric),
    }


def chart_from_dict(d: dict, path: str = "chart") -> BundleChart:
    _expect_keys(d, path, {"n", "k", "box", "metric"})
    n, k = d["n"], d["k"]
    if not (isinstance(n, int) and isinstance(k, int) and n >= 1 and k >= 0):
        _fail(path, "n must be >= 1 and k >= 0 (integers)")
    box = tuple(
        (parse_float(lo, f"{path}.box[{i}]"), parse_float(hi, f"{path}.box[{i}]"))
        for i, (lo, hi) in enumerate(d["box"])
    )
    if len(box) != n + k:
        _fail(path + ".box", f"need {n + k} axis intervals")
    metric = build_metric(d["metric"], n + k, path + ".metric")
    return BundleChart(n=n, k=k, metric=metric, box=box, phi=None)


def domain_from_dict(d: dict, path: str = "domain") -> StarDomain:
    _expect_keys(d, path, {"box", "center"})
    box = tuple((parse_float(lo, path), parse_float(hi, path)) for lo, hi in d["box"])
    center = tuple(parse_float(c, path) for c in d["center"])
    return StarDomain(box, center)


def domain_to_dict(dom: StarDomain) -> dict:
    return {
        "box": [[fmt_float(lo), fmt_float(hi)] for lo, hi in dom.box],
        "center": [fmt_float(c) for c in dom.center],
    }


# -- shadow data -------------------------------------------------------------

def shadow_to_dict(sd: ShadowData) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "shadow_data",
        "ell": sd.ell,
        "chart": chart_to_dict(sd.chart),
        "f": form_to_dict(sd.f),
        "entries": [
            {
                "g": form_to_dict(e.g),
                "theta": form_to_dict(e.theta),
                "base_index": list(e.base_index),
                "star": e.star,
                "j": e.j,
            }
            for e in sd.entries
        ],
        "flagged_vertical": sd.flagged_vertical,
    }


def shadow_from_dict(d: dict, path: str = "shadow_data") -> ShadowData:
    _expect_keys(
        d, path, {"schema_version", "kind", "ell", "chart", "f", "entries", "flagged_vertical"}
    )
    if d["schema_version"] != SCHEMA_VERSION:
        _fail(path, f"unsupported schema_version {d['schema_version']}")
    if d["kind"] != "shadow_data":
        _fail(path + ".kind", f"expected 'shadow_data', got {d['kind']!r}")
    chart = chart_from_dict(d["chart"], path + ".chart")
    entries = []
    for i, ed in enumerate(d["entries"]):
        epath = f"{path}.entries[{i}]"
        _expect_keys(ed, epath, {"g", "theta", "base_index", "star", "j"})
        entries.append(
            ShadowEntry(
                g=form_from_dict(ed["g"], epath + ".g"),
                theta=form_from_dict(ed["theta"], epath + ".theta"),
                base_index=tuple(ed["base_index"]),
                star=ed["star"],
                j=ed["j"],
            )
        )
    return ShadowData(
        ell=d["ell"],
        chart=chart,
        f=form_from_dict(d["f"], path + ".f"),
        entries=entries,
        flagged_vertical=bool(d["flagged_vertical"]),
    )


# -- costs / problems ---------------------------------------------------------

def build_cost(spec: dict, ell: int, metric: MetricField, path: str = "cost") -> CostFunction:
    _expect_keys(spec, path, {"type"}, {"value", "well_index", "s", "restarts", "iters"})
    t = spec["type"]
    if t == "quadratic":
        return QuadraticCost(ell)
    if t == "zero":
        return ZeroCost(ell)
    if t == "constant":
        return ConstantCost(ell, parse_float(spec.get("value", 0.0), path + ".value"))
    if t == "double_well":
        idx = spec.get("well_index")
        if not isinstance(idx, list):
            _fail(path, "double_well needs a well_index list")
        return DoubleWellCost(ell, tuple(idx))
    if t == "comass_power":
        s = parse_float(spec.get("s", 2.0), path + ".s")
        return ComassPowerCost(
            ell,
            s,
            metric,
            restarts=int(spec.get("restarts", 8)),
            iters=int(spec.get("iters", 60)),
        )
    _fail(path + ".type", f"unrecognized cost type {t!r}")


def problem_from_dict(d: dict, path: str = "problem") -> GaugedProblem:
    _expect_keys(
        d,
        path,
        {"schema_version", "kind", "chart", "domain", "cost", "gauge", "ell", "s"},
        {"discretization"},
    )
    if d["schema_version"] != SCHEMA_VERSION:
        _fail(path, f"unsupported schema_version {d['schema_version']}")
    if d["kind"] != "problem":
        _fail(path + ".kind", f"expected 'problem', got {d['kind']!r}")
    chart = chart_from_dict(d["chart"], path + ".chart")
    dom = domain_from_dict(d["domain"], path + ".domain")
    ell = d["ell"]
    cost = build_cost(d["cost"], ell, chart.metric, path + ".cost")
    gauge = GaugeForm(form_from_dict(d["gauge"], path + ".gauge"))
    disc = d.get("discretization", {})
    _expect_keys(disc, path + ".discretization", set(), {"resolution", "quadrature_order", "tolerance", "seed"})
    discretization = Discretization(
        resolution=int(disc.get("resolution", 17)),
        quadrature_order=int(disc.get("quadrature_order", 8)),
        tolerance=parse_float(disc.get("tolerance", 1e-8), path),
        seed=int(disc.get("seed", 0)),
    )
    s = parse_float(d["s"], path + ".s")
    return relax(cost, gauge, dom, chart, s, discretization)


# -- canonical document I/O ----------------------------------------------------

def _stringify_floats(obj):
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, dict):
        return {k: _stringify_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_stringify_floats(v) for v in obj]
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(_stringify_floats(doc), indent=2, sort_keys=True) + "\n"


def write_document(path: str, doc: dict) -> None:
    """Write atomically: a .partial file replaced when complete."""
    tmp = path + ".partial"
    with open(tmp, "w") as fh:
        fh.write(dumps(doc))
    os.replace(tmp, path)


def read_document(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
