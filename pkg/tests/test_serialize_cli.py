import json
import os

import numpy as np
import pytest

from fibreforms.bundle import BundleChart, shadow_decompose
from fibreforms.cli import main
from fibreforms.forms import Form, random_form
from fibreforms.polynomial import Polynomial
from fibreforms.rng import philox
from fibreforms.serialize import (
    SchemaError,
    build_metric,
    chart_from_dict,
    chart_to_dict,
    dumps,
    form_from_dict,
    form_to_dict,
    problem_from_dict,
    read_document,
    shadow_from_dict,
    shadow_to_dict,
)

DATA = os.path.join(os.path.dirname(__file__), "..", "src", "fibreforms", "data")


def data_path(name):
    return os.path.join(DATA, name)


def test_form_roundtrip():
    rng = philox(61, 0)
    for _ in range(10):
        N = int(rng.integers(2, 5))
        a = random_form(rng, N, int(rng.integers(0, N + 1)))
        assert form_from_dict(form_to_dict(a)) == a


def test_shadow_roundtrip():
    from fibreforms.metric import MetricField

    chart = BundleChart(
        n=2, k=1, metric=build_metric("euclidean", 3), box=((0, 1), (0, 1), (0, 1)), phi=None
    )
    rng = philox(62, 0)
    xi = random_form(rng, 3, 1)
    sd = shadow_decompose(xi, chart)
    sd2 = shadow_from_dict(shadow_to_dict(sd))
    assert sd2.f == sd.f
    assert len(sd2.entries) == len(sd.entries)
    for a, b in zip(sd.entries, sd2.entries):
        assert a.g == b.g and a.theta == b.theta and a.base_index == b.base_index


def test_unknown_keys_are_errors():
    doc = read_document(data_path("quadratic_problem.json"))
    doc["surprise"] = 1
    with pytest.raises(SchemaError):
        problem_from_dict(doc)


def test_malformed_polynomial_rejected():
    bad = {"nvars": 2, "terms": [[[0, 1, 2], "1/2"]]}
    with pytest.raises(SchemaError):
        from fibreforms.serialize import poly_from_dict

        poly_from_dict(bad)


def test_float_seventeen_digit_roundtrip():
    from fibreforms.serialize import fmt_float

    rng = philox(63, 0)
    for v in rng.standard_normal(100):
        assert float(fmt_float(float(v))) == float(v)


def test_bundled_problem_parses():
    prob = problem_from_dict(read_document(data_path("quadratic_problem.json")))
    assert prob.chart.n == 1 and prob.chart.k == 1
    assert prob.discretization.resolution == 33


def run_cli(args):
    return main(args)


def test_cli_decompose_and_check(tmp_path):
    out = str(tmp_path / "dec")
    assert run_cli(["decompose", "--config", data_path("decompose_example.json"), "--out", out]) == 0
    rep = read_document(os.path.join(out, "decompose_report.json"))
    assert rep["reconstruction_matches"] and rep["closed"]
    out2 = str(tmp_path / "chk")
    assert run_cli(["check-shadow", "--config", os.path.join(out, "shadow.json"), "--out", out2]) == 0


def test_cli_minimize_manifest_rerun_byte_identical(tmp_path):
    out1 = str(tmp_path / "m1")
    out2 = str(tmp_path / "m2")
    assert run_cli(["minimize", "--config", data_path("quadratic_problem.json"), "--out", out1, "--resolution", "9"]) == 0
    assert run_cli(["minimize", "--config", os.path.join(out1, "manifest.json"), "--out", out2]) == 0
    for name in os.listdir(out1):
        with open(os.path.join(out1, name), "rb") as f1, open(os.path.join(out2, name), "rb") as f2:
            assert f1.read() == f2.read(), name


def test_cli_qc_exit_codes(tmp_path):
    out = str(tmp_path / "qc")
    rc = run_cli(["qc-test", "--config", data_path("qc_double_well.json"), "--out", out, "--trials", "150"])
    assert rc == 3
    assert os.path.exists(os.path.join(out, "witness.json"))


def test_cli_malformed_config_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli(["decompose", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_cli_degenerate_resolution_exit_2(tmp_path):
    rc = run_cli([
        "minimize", "--config", data_path("quadratic_problem.json"),
        "--out", str(tmp_path / "o"), "--resolution", "3",
    ])
    assert rc == 2


def test_cli_comass(tmp_path, capsys):
    cfg = tmp_path / "comass.json"
    a = Form(2, 1, {(1,): Polynomial.constant(2, 3)})
    cfg.write_text(dumps({
        "form": form_to_dict(a), "metric": "euclidean", "point": ["0.5", "0.5"],
    }))
    assert run_cli(["comass", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rep = read_document(str(tmp_path / "o" / "comass_report.json"))
    assert abs(float(rep["comass"]) - 3.0) < 1e-9


def test_no_partial_files_left(tmp_path):
    out = str(tmp_path / "dec")
    run_cli(["decompose", "--config", data_path("decompose_example.json"), "--out", out])
    assert not [n for n in os.listdir(out) if n.endswith(".partial")]
