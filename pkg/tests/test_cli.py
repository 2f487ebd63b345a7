import csv
import json
from pathlib import Path

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from qheat.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_OK, execute, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

EXPECTED = {
    "direct_involution": EXIT_OK,
    "direct_landau": EXIT_OK,
    "direct_zero": EXIT_OK,
    "direct_spatial": EXIT_OK,
    "inverse_zero": EXIT_OK,
    "inverse_single_mode": EXIT_OK,
    "sweep_classical": EXIT_OK,
    "sweep_single": EXIT_OK,
    "verify_default": EXIT_OK,
    "verify_landau": EXIT_OK,
    "verify_truncated": EXIT_CHECK,
    "verify_wrong_beta": EXIT_CHECK,
    "direct_bad_q": EXIT_CONFIG,
    "direct_bad_spectrum": EXIT_CONFIG,
    "direct_bad_upsilon": EXIT_CONFIG,
    "direct_unknown_field": EXIT_CONFIG,
    "inverse_missing_eta": EXIT_CONFIG,
    "sweep_empty": EXIT_CONFIG,
}
ARTIFACTS = {
    "direct": ("trajectory.csv", "diagnostics.json"),
    "inverse": ("source.csv", "trajectory.csv", "diagnostics.json"),
    "verify": ("verify_report.json",),
    "sweep": ("sweep.csv",),
}


def command_of(name):
    return name.split("_", 1)[0]


def invoke(name, out, seed=0):
    return CliRunner().invoke(main, [command_of(name), str(CONFIGS / f"{name}.yaml"), "--out", str(out),
                                     "--seed", str(seed)])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_fixture_inventory():
    assert sorted(p.stem for p in CONFIGS.glob("*.yaml")) == sorted(EXPECTED)
    assert sum(code == EXIT_OK for code in EXPECTED.values()) >= 10


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_exit_codes(name, tmp_path):
    r = invoke(name, tmp_path)
    assert r.exit_code == EXPECTED[name], r.output
    if EXPECTED[name] == EXIT_OK:
        for fname in ARTIFACTS[command_of(name)]:
            assert (tmp_path / fname).is_file()


@pytest.mark.parametrize("name", [n for n, c in EXPECTED.items() if c != EXIT_CONFIG])
def test_byte_identical_reruns(name, tmp_path):
    invoke(name, tmp_path / "a", seed=3)
    invoke(name, tmp_path / "b", seed=3)
    for fname in ARTIFACTS[command_of(name)]:
        assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()


def test_execute_matches_click(tmp_path):
    assert execute("direct", CONFIGS / "direct_landau.yaml", tmp_path) == EXIT_OK
    assert execute("inverse", CONFIGS / "direct_landau.yaml", tmp_path) == EXIT_CONFIG


def test_bad_q_message(tmp_path):
    r = invoke("direct_bad_q", tmp_path)
    assert "q" in r.output and "(0, 1)" in r.output


def test_missing_eta_named(tmp_path):
    assert "eta" in invoke("inverse_missing_eta", tmp_path).output


def test_unknown_field_named(tmp_path):
    raw = yaml.safe_load((CONFIGS / "direct_unknown_field.yaml").read_text())
    known = {"command", "q", "T", "lattice_depth", "n_terms", "tol", "modes", "d", "operator", "upsilon", "g",
             "phi", "eta", "source", "sweep", "verify"}
    extra = set(raw) - known
    out = invoke("direct_unknown_field", tmp_path).output
    assert extra and all(k in out for k in extra)


def test_trajectory_layout(tmp_path):
    invoke("direct_involution", tmp_path)
    rows = read_rows(tmp_path / "trajectory.csv")
    assert list(rows[0]) == ["t", "k", "u_k"]
    t = np.array([float(r["t"]) for r in rows])
    assert np.all(np.diff(t) >= 0) and t[0] == 0.0 and t[-1] == 1.0
    assert {int(r["k"]) for r in rows} == set(range(1, 9))
    dg = json.loads((tmp_path / "diagnostics.json").read_text())
    assert dg["passed"] and dg["ode_residual"] <= 1e-10


def test_zero_problem_is_zero(tmp_path):
    invoke("direct_zero", tmp_path)
    assert all(float(r["u_k"]) == 0.0 for r in read_rows(tmp_path / "trajectory.csv"))


def test_sweep_monotone(tmp_path):
    invoke("sweep_classical", tmp_path)
    err = [float(r["error"]) for r in read_rows(tmp_path / "sweep.csv")]
    assert len(err) == 3 and err[0] > err[1] > err[2]


def test_verify_report_names_failures(tmp_path):
    r = invoke("verify_wrong_beta", tmp_path)
    report = json.loads((tmp_path / "verify_report.json").read_text())
    failed = {c["name"] for c in report["checks"] if not c["passed"]}
    assert not report["passed"] and "sandwich" in failed
    assert all(name in r.output for name in failed)


def test_direct_then_inverse(tmp_path):
    # direct solve with a time-constant source, then recover it from the endpoint
    a = [0.5, -0.25, 0.1]
    base = {"q": 0.5, "T": 1.0, "modes": 3, "operator": {"kind": "landau", "B": 1.0}, "phi": [1.0, 0.5, -0.2]}
    direct = {**base, "command": "direct", "source": {"a": a, "b": [0.0, 0.0, 0.0]}}
    (tmp_path / "d.yaml").write_text(yaml.safe_dump(direct))
    assert execute("direct", tmp_path / "d.yaml", tmp_path / "d") == EXIT_OK
    rows = read_rows(tmp_path / "d" / "trajectory.csv")
    eta = [float(r["u_k"]) for r in rows if float(r["t"]) == 1.0]
    inverse = {**base, "command": "inverse", "eta": eta,
               "g": {"kind": "constant", "a": 1.0, "alpha0": 0.5, "beta0": 1.0}}
    (tmp_path / "i.yaml").write_text(yaml.safe_dump(inverse))
    assert execute("inverse", tmp_path / "i.yaml", tmp_path / "i") == EXIT_OK
    f = [float(r["f_k"]) for r in read_rows(tmp_path / "i" / "source.csv")]
    np.testing.assert_allclose(f, a, rtol=1e-8)


def test_help_lists_commands():
    out = CliRunner().invoke(main, ["--help"]).output
    assert all(c in out for c in ARTIFACTS)
