import csv
import json
from pathlib import Path

import numpy as np
import pytest

from rhtheta.cli import main
from rhtheta.hyperelliptic import HyperellipticCurve, compute_periods
from rhtheta.isomonodromy import tau_closed_form
from rhtheta.rh_solver import RHSolution
from rhtheta.theta import ThetaChar, theta_derivs

SAMPLES = Path(__file__).resolve().parent.parent / "samples"
CURVE = str(SAMPLES / "curve_g1.json")
CHAR = str(SAMPLES / "char_g1.json")


def read(path):
    with open(path) as fh:
        return json.load(fh)


def as_complex(pair):
    return complex(pair[0], pair[1])


def as_matrix(nested):
    return np.array([[as_complex(e) for e in row] for row in nested])


# -- per-command output --------------------------------------------------------


def test_periods_report(tmp_path):
    out = tmp_path / "periods.json"
    assert main(["periods", "--curve", CURVE, "--output", str(out)]) == 0
    report = read(out)
    pd = compute_periods(HyperellipticCurve([0.0, 1.0, 2.0, 3.0]))
    assert report["genus"] == 1
    assert abs(as_matrix(report["period_matrix"])[0, 0] - pd.B[0, 0]) < 1e-14
    assert abs(as_matrix(report["a_periods"])[0, 0] - pd.A[0, 0]) < 1e-14
    assert set(report["conventions"]) == {
        "homology_basis", "odd_characteristic", "loop_layout"}


def test_theta_eval_report(tmp_path):
    B = [[[0.0, 1.2792615711710182]]]
    inp = tmp_path / "theta.json"
    inp.write_text(json.dumps(
        {"z": [[0.1, 0.05]], "B": B, "char": {"p": [0.11], "q": [-0.23]}}))
    out = tmp_path / "theta_out.json"
    assert main(["theta-eval", "--input", str(inp),
                 "--output", str(out)]) == 0
    report = read(out)
    ev = theta_derivs(np.array([0.1 + 0.05j]),
                      np.array([[1.2792615711710182j]]),
                      ThetaChar((0.11,), (-0.23,)))
    assert abs(as_complex(report["value"]) - ev.value) < 1e-14
    assert abs(as_complex(report["gradient"][0]) - ev.grad[0]) < 1e-14
    assert report["lattice_radius"] > 0


def test_solve_report_and_csv(tmp_path):
    out = tmp_path / "solve.json"
    grid = tmp_path / "psi.csv"
    assert main(["solve", "--curve", CURVE, "--char", CHAR,
                 "--csv", str(grid), "--output", str(out)]) == 0
    report = read(out)
    assert len(report["monodromies"]) == 4
    assert report["product_defect"] < 1e-6
    assert report["residues"]["sum_norm"] < 1e-8
    for rec in report["monodromies"]:
        m = as_matrix(rec["matrix"])
        assert rec["permutation"] == [1, 0]
        assert abs(m[0, 0]) < 1e-12 and abs(m[1, 1]) < 1e-12
    rows = report["psi_samples"]["rows"]
    assert rows and all(len(r) == 10 for r in rows)
    # the sampled matrices are unimodular wherever they were kept
    for r in rows[:5]:
        m = np.array([[r[2] + 1j * r[3], r[4] + 1j * r[5]],
                      [r[6] + 1j * r[7], r[8] + 1j * r[9]]])
        assert abs(np.linalg.det(m) - 1.0) < 1e-8
    with open(grid, newline="") as fh:
        table = list(csv.reader(fh))
    assert table[0][:2] == ["re_lambda", "im_lambda"]
    assert len(table) == len(rows) + 1


def test_solve_lambda0_flag_overrides_basepoint(tmp_path):
    curve = tmp_path / "bare.json"
    curve.write_text(json.dumps(
        {"branch_points": [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]}))
    out = tmp_path / "solve.json"
    assert main(["solve", "--curve", str(curve), "--char", CHAR,
                 "--lambda0", "1.5,1.1", "--output", str(out)]) == 0
    assert read(out)["lambda0"] == [1.5, 1.1]
    # without a basepoint anywhere the command cannot normalize
    assert main(["solve", "--curve", str(curve), "--char", CHAR,
                 "--output", str(out)]) == 2


def test_monodromy_report(tmp_path):
    out = tmp_path / "mon.json"
    assert main(["monodromy", "--curve", CURVE, "--char", CHAR,
                 "--n", "1", "--output", str(out)]) == 0
    report = read(out)
    pd = compute_periods(HyperellipticCurve([0.0, 1.0, 2.0, 3.0]))
    sol = RHSolution(pd, ThetaChar((0.11,), (-0.23,)), 1.5 + 1.1j)
    want = sol.monodromy(1)
    assert np.max(np.abs(as_matrix(report["matrix"]) - want.matrix)) < 1e-12
    assert report["permutation"] == list(want.permutation)
    assert [c["sigma"] for c in report["columns"]] == \
        [c.sigma for c in want.columns]


def test_tau_report_defaults_to_own_reference(tmp_path):
    out = tmp_path / "tau.json"
    assert main(["tau", "--curve", CURVE, "--char", CHAR,
                 "--output", str(out)]) == 0
    report = read(out)
    pd = compute_periods(HyperellipticCurve([0.0, 1.0, 2.0, 3.0]))
    ev = tau_closed_form(pd, ThetaChar((0.11,), (-0.23,)))
    assert abs(as_complex(report["tau"]) - ev.value) < 1e-14
    assert abs(as_complex(report["theta_factor"]) - ev.theta_factor) < 1e-14
    assert report["branch_reference"]["path"] is None
    assert report["branch_reference"]["phase"] == [1.0, 0.0]


def test_tau_reference_sets_branch_phase(tmp_path):
    moved = tmp_path / "moved.json"
    moved.write_text(json.dumps({
        "branch_points": [[0.0, 0.3], [1.1, -0.2], [2.0, 0.1], [3.2, 0.0]]}))
    out = tmp_path / "tau.json"
    assert main(["tau", "--curve", str(moved), "--char", CHAR,
                 "--reference", CURVE, "--output", str(out)]) == 0
    report = read(out)
    phase = as_complex(report["branch_reference"]["phase"])
    assert abs(abs(phase) - 1.0) < 1e-10
    assert report["branch_reference"]["path"] == CURVE
    # continued value = principal value rotated by the reported phase
    assert main(["tau", "--curve", str(moved), "--char", CHAR,
                 "--output", str(out)]) == 0
    principal = as_complex(read(out)["tau"])
    continued = as_complex(report["tau"])
    assert abs(continued - phase * principal) < 1e-12 * abs(continued)


# -- verification suite ----------------------------------------------------


@pytest.mark.parametrize("suite", ["periods", "fay", "rauch", "compat"])
def test_verify_suites_pass(tmp_path, suite):
    out = tmp_path / "report.json"
    assert main(["verify", "--curve", CURVE, "--char", CHAR,
                 "--suite", suite, "--output", str(out)]) == 0
    report = read(out)
    assert report["passed"] is True
    assert report["suite"] == suite
    assert all(c["pass"] for c in report["checks"])
    names = [c["check"] for c in report["checks"]]
    assert names == sorted(names)
    for c in report["checks"]:
        assert c["residual"] < c["tolerance"]


def test_verify_reports_are_byte_identical(tmp_path, monkeypatch):
    monkeypatch.setenv("RH_NUM_THREADS", "1")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["verify", "--curve", CURVE, "--char", CHAR,
                     "--suite", "fay", "--seed", "3",
                     "--output", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify_thread_count_does_not_move_residuals(tmp_path, monkeypatch):
    results = {}
    for threads in ("1", "3"):
        monkeypatch.setenv("RH_NUM_THREADS", threads)
        out = tmp_path / f"report_{threads}.json"
        assert main(["verify", "--curve", CURVE, "--char", CHAR,
                     "--suite", "rauch", "--output", str(out)]) == 0
        results[threads] = {
            (c["check"], json.dumps(c["params"], sort_keys=True)):
                c["residual"]
            for c in read(out)["checks"]}
    assert results["1"].keys() == results["3"].keys()
    for key, residual in results["1"].items():
        assert abs(residual - results["3"][key]) < 1e-12


def test_verify_seed_is_recorded_and_respected(tmp_path):
    out = tmp_path / "report.json"
    assert main(["verify", "--curve", CURVE, "--char", CHAR, "--suite",
                 "fay", "--seed", "7", "--output", str(out)]) == 0
    report = read(out)
    assert report["seed"] == 7
    assert report["passed"] is True


def test_verify_tolerance_override_controls_exit_code(tmp_path):
    out = tmp_path / "report.json"
    code = main(["verify", "--curve", CURVE, "--char", CHAR,
                 "--suite", "rauch", "--tol", "rauch_fd=1e-30",
                 "--output", str(out)])
    assert code == 1
    report = read(out)
    assert report["passed"] is False
    rows = {(c["check"], json.dumps(c["params"])): c
            for c in report["checks"]}
    fd_rows = [c for (name, _), c in rows.items() if name == "rauch_fd"]
    assert fd_rows and all(c["pass"] is False for c in fd_rows)
    assert all(c["tolerance"] == 1e-30 for c in fd_rows)
    assert all(c["pass"] for (name, _), c in rows.items()
               if name == "rauch_sheet_sum")


# -- configuration errors ----------------------------------------------------


def test_malformed_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"branch_points": [[0, 0')
    assert main(["periods", "--curve", str(bad)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["code"] == "ConfigError"


def test_unknown_command_and_flags_exit_2(capsys):
    assert main(["frobnicate"]) == 2
    assert main(["verify", "--curve", CURVE, "--char", CHAR,
                 "--suite", "nonsense"]) == 2


def test_config_validation_errors(tmp_path, capsys):
    assert main(["monodromy", "--curve", CURVE, "--char", CHAR,
                 "--n", "99"]) == 2
    assert main(["tau", "--curve", CURVE,
                 "--char", str(SAMPLES / "char_g2.json")]) == 2
    assert main(["solve", "--curve", CURVE, "--char", CHAR,
                 "--lambda0", "blah"]) == 2
    assert main(["verify", "--curve", CURVE, "--char", CHAR,
                 "--suite", "periods", "--tol", "nonsense=1"]) == 2
    assert main(["verify", "--curve", CURVE, "--char", CHAR,
                 "--suite", "periods", "--tol", "b_symmetry=-1"]) == 2
    capsys.readouterr()


def test_bad_thread_env_exits_2(monkeypatch, capsys):
    monkeypatch.setenv("RH_NUM_THREADS", "zero")
    assert main(["periods", "--curve", CURVE]) == 2
    monkeypatch.setenv("RH_NUM_THREADS", "0")
    assert main(["periods", "--curve", CURVE]) == 2
    capsys.readouterr()


def test_module_errors_exit_3_with_code(tmp_path, capsys):
    degen = tmp_path / "degen.json"
    degen.write_text(json.dumps(
        {"branch_points": [[0, 0], [0, 0], [1, 0], [2, 0]]}))
    assert main(["periods", "--curve", str(degen)]) == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["code"] == "DegenerateCurve"


def test_basepoint_on_branch_point_rejected(tmp_path, capsys):
    curve = tmp_path / "curve.json"
    curve.write_text(json.dumps({
        "branch_points": [[0, 0], [1, 0], [2, 0], [3, 0]],
        "basepoint": {"lambda": [1.0, 0.0], "sheet": 1}}))
    assert main(["monodromy", "--curve", str(curve), "--char", CHAR,
                 "--n", "0"]) == 2
    curve.write_text(json.dumps({
        "branch_points": [[0, 0], [1, 0], [2, 0], [3, 0]],
        "basepoint": {"lambda": [1.5, 1.1], "sheet": 2}}))
    assert main(["monodromy", "--curve", str(curve), "--char", CHAR,
                 "--n", "0"]) == 2
    capsys.readouterr()
