import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from riplab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_group_verify(capsys):
    code, out, _ = run_cli(capsys, "group", "verify", "--group", "hw:4")
    data = json.loads(out)
    assert code == 0 and data["passed"] and data["max_deviation"] <= 1e-10
    assert len(data["manifest_hash"]) == 64


def test_group_verify_monte_carlo_can_fail(capsys):
    code, out, _ = run_cli(capsys, "group", "verify", "--group", "hw:4", "--mode", "monte_carlo",
                           "--trials", "3", "--probes", "2")
    assert code == 1 and not json.loads(out)["passed"]


def test_bound_predict_tensor(capsys):
    code, out, _ = run_cli(capsys, "bound", "predict", "--theorem", "tensor", "--n", "2", "--d", "3",
                           "--s", "1", "--delta", "0.5", "--zeta", "0.1")
    data = json.loads(out)
    assert code == 0 and data["formula"] == "tensor" and data["constants"] == {"c": 1.0}
    m = data["value"]
    rhs = (1 + np.log(m)) ** 3 * (1 + 18 * (1 + np.log(3)) + np.log(10)) ** 2 / 0.25
    assert m >= rhs * (1 - 1e-12)


@pytest.mark.parametrize("argv", [
    ["--theorem", "general", "--model", "l1:64", "--s", "2"],
    ["--theorem", "polytope", "--M", "100"],
    ["--theorem", "dual-type", "--p", "1.5", "--eta-norm", "2"],
    ["--theorem", "gordon", "--n", "2", "--d", "3"],
])
def test_bound_predict_variants(capsys, argv):
    code, out, _ = run_cli(capsys, "bound", "predict", *argv)
    assert code == 0 and json.loads(out)["value"] >= 1


def test_bound_predict_general_needs_model(capsys):
    code, _, err = run_cli(capsys, "bound", "predict")
    assert code == 2 and "model" in err


def test_net_build(capsys, tmp_path):
    path = tmp_path / "net.json"
    code, _, _ = run_cli(capsys, "net", "build", "--n", "2", "--eps", "0.1666", "--d", "2",
                         "--validation-samples", "20000", "--output", str(path))
    net = json.loads(path.read_text())["net"]
    assert code == 0
    assert net["cardinality"] <= net["cardinality_bound"]
    assert net["covering_radius"] <= 0.1666 < net["min_separation"]
    assert net["tensor"]["log_cardinality"] <= net["tensor"]["log_cardinality_bound"]


def test_net_tail(capsys):
    code, out, _ = run_cli(capsys, "net", "tail", "--draws", "100", "--zeta", "0.5")
    res = json.loads(out)["results"]
    assert code == 0 and res[0]["zeta"] == 0.5 and res[0]["passed"]


def test_rip_estimate_methods(capsys):
    common = ["--group", "hw:8", "--instrument", "gaussian", "--model", "l1:8", "--m", "6",
              "--s", "2", "--seed", "1", "--trials", "30", "--steps", "5"]
    values = {}
    for method in ("monte_carlo", "ascent", "exact"):
        code, out, _ = run_cli(capsys, "rip", "estimate", "--method", method, *common)
        assert code == 0
        values[method] = json.loads(out)["estimate"]["delta"]
    assert values["monte_carlo"] <= values["ascent"] + 1e-12 <= values["exact"] + 1e-9


def test_rip_estimate_from_config(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"group": "gaussian", "model": "l1:6", "m": 5, "seed": 2, "method": "exact"}))
    code, out, _ = run_cli(capsys, "rip", "estimate", "--config", str(cfg), "--s", "1")
    assert code == 0 and json.loads(out)["inputs"]["s"] == 1.0


def test_rip_estimate_requires_seed(capsys):
    code, _, err = run_cli(capsys, "rip", "estimate", "--group", "hw:4", "--model", "l1:4", "--m", "2")
    assert code == 2 and "seed" in err


def test_op_export_full_fourier(capsys, tmp_path):
    prefix = str(tmp_path / "dft")
    code, out, _ = run_cli(capsys, "op", "export", "--group", "hw:16", "--instrument", "ones",
                           "--elements", "modulations", "--output", prefix)
    assert code == 0
    header = json.loads(open(prefix + ".json").read())
    A = np.fromfile(prefix + ".bin", dtype="<c16").reshape((header["rows"], header["cols"]), order="F")
    assert header["layout"] == "column-major" and header["dtype"] == "complex128"
    assert np.linalg.norm(A.conj().T @ A - np.eye(16), 2) <= 1e-10
    assert header["manifest_hash"] == json.loads(out)["manifest_hash"]


def test_op_export_roundtrips_operator(capsys, tmp_path):
    from riplab.measurement import MeasurementOperator

    prefix = str(tmp_path / "op")
    run_cli(capsys, "op", "export", "--group", "ss:5", "--instrument", "gaussian:3", "--m", "4",
            "--seed", "9", "--output", prefix)
    header = json.loads(open(prefix + ".json").read())
    A = np.fromfile(prefix + ".bin", dtype="<c16").reshape((4, 5), order="F")
    np.testing.assert_allclose(MeasurementOperator.from_dict(header["operator"]).to_dense(), A)


def test_op_export_modulations_need_hw(capsys, tmp_path):
    code, _, err = run_cli(capsys, "op", "export", "--group", "ss:4", "--elements", "modulations",
                           "--output", str(tmp_path / "x"))
    assert code == 2 and "elements" in err


def _scaling(capsys, tmp_path, name, threads):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"seed": 5, "model": "l1:8", "group": "hw:8", "s_list": [1, 2],
                               "m_list": [4, 8], "redraws": 3}))
    out = tmp_path / name
    code, _, _ = run_cli(capsys, "rip", "scaling", "--config", str(cfg), "--threads", str(threads),
                         "--csv", str(out), "--manifest", str(tmp_path / (name + ".json")))
    assert code == 0
    return out.read_bytes()


def test_scaling_is_byte_identical_across_threads(capsys, tmp_path):
    assert _scaling(capsys, tmp_path, "a.csv", 1) == _scaling(capsys, tmp_path, "b.csv", 8)


def test_scaling_to_stdout_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"seed": 5, "model": "l1:8", "group": "hw:8", "s_list": [1],
                               "m_list": [4], "redraws": 2}))
    code, out, _ = run_cli(capsys, "rip", "scaling", "--config", str(cfg), "--m-list", "4,8")
    rows = list(csv.reader(out.splitlines()))
    assert code == 0 and [r[3] for r in rows[1:]] == ["4", "8"]


def test_scaling_config_error(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"seed": 1, "s_list": [0]}))
    code, _, err = run_cli(capsys, "rip", "scaling", "--config", str(cfg))
    assert code == 2 and "s_list[0]" in err


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "riplab.cli", "group", "verify", "--group", "pauli:2"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["passed"]


def test_rip_estimate_defaults_to_l1_on_group_space(capsys):
    code, out, _ = run_cli(capsys, "rip", "estimate", "--group", "hw:8", "--m", "4", "--s", "2",
                           "--seed", "1", "--trials", "50")
    assert code == 0 and json.loads(out)["estimate"]["method"] == "monte_carlo"
    code, _, err = run_cli(capsys, "rip", "estimate", "--group", "gaussian", "--m", "4", "--seed", "1")
    assert code == 2 and "model" in err
