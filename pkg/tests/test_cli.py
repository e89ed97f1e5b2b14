import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from tmoment import files
from tmoment.cli import EXIT_FEASIBLE, EXIT_INCONCLUSIVE, EXIT_INFEASIBLE, EXIT_NUMERICAL, EXIT_USAGE, main

from conftest import one_d


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def _instance(g, **extra):
    obj = {"n": 1, "indices": [[i] for i in range(len(g))], "g": g, "support": {"kind": "full"}}
    obj.update(extra)
    return obj


def _result_line(out):
    lines = [l for l in out.splitlines() if l.startswith("RESULT:")]
    assert len(lines) == 1
    return lines[0]


def test_check_gaussian(tmp_path, capsys):
    path = _write(tmp_path, "gaussian.instance", _instance([1.0, 0.0, 1.0]))
    assert main(["check", path]) == EXIT_FEASIBLE
    out = capsys.readouterr().out
    assert "status=FeasibleInterior" in _result_line(out)


def test_check_dirac_prints_certificate(tmp_path, capsys):
    path = _write(tmp_path, "dirac.instance", _instance([1.0, 0.0, 0.0]))
    assert main(["check", path]) == EXIT_INFEASIBLE
    out = capsys.readouterr().out
    assert "certificate p =" in out
    assert "status=Infeasible" in _result_line(out)


def test_check_budget_exhaustion_is_inconclusive(tmp_path, capsys):
    inst, _ = __import__("tmoment.oracle", fromlist=["x"]).generate_instance(1, "gaussian", 2)
    path = tmp_path / "mix.instance"
    files.write_instance(inst, path)
    assert main(["check", str(path), "--max-iter", "1"]) == EXIT_INCONCLUSIVE
    assert "status=Inconclusive" in _result_line(capsys.readouterr().out)


def test_solve_writes_report_and_density(tmp_path, capsys):
    path = _write(tmp_path, "gaussian.instance", _instance([1.0, 0.0, 1.0]))
    report = tmp_path / "out.json"
    assert main(["solve", path, "--out", str(report), "--density-grid", "11"]) == EXIT_FEASIBLE
    data = json.loads(report.read_text())
    assert data["status"] == "FeasibleInterior"
    np.testing.assert_allclose(data["lambda_star"], [-0.9189385332, 0.0, 0.5], atol=1e-6)
    with open(tmp_path / "out.density.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t1", "f"]
    assert len(rows) == 12
    mid = dict((float(r[0]), float(r[1])) for r in rows[1:])
    assert mid[0.0] == pytest.approx(1 / np.sqrt(2 * np.pi), rel=1e-6)


def test_oracle_verb(tmp_path, capsys):
    path = _write(tmp_path, "neg.instance", _instance([1.0, 0.0, -1.0]))
    assert main(["oracle", path, "--grid-radius", "6", "--grid-points", "401"]) == EXIT_INFEASIBLE
    line = _result_line(capsys.readouterr().out)
    assert "hankel=exterior" in line


def test_gen_then_check_round_trip(tmp_path, capsys):
    path = tmp_path / "gen.instance"
    assert main(["gen", "--family", "gamma", "--k", "2", "--seed", "5", "--out", str(path)]) == EXIT_FEASIBLE
    from tmoment.oracle import generate_instance

    expected, _ = generate_instance(5, "gamma", 2)
    loaded = files.read_instance(path)
    assert loaded.g.tobytes() == expected.g.tobytes()
    assert loaded == expected
    capsys.readouterr()
    assert main(["check", str(path)]) == EXIT_FEASIBLE


def test_gen_is_deterministic(capsys):
    main(["gen", "--seed", "9", "--k", "3"])
    a = capsys.readouterr().out
    main(["gen", "--seed", "9", "--k", "3"])
    assert capsys.readouterr().out == a


def test_gen_unknown_family(capsys):
    assert main(["gen", "--family", "cauchy"]) == EXIT_USAGE


def test_gradcheck_verb(tmp_path, capsys):
    path = _write(tmp_path, "gaussian.instance", _instance([1.0, 0.0, 1.0]))
    assert main(["gradcheck", path, "--points", "2"]) == EXIT_FEASIBLE
    assert "ok=True" in _result_line(capsys.readouterr().out)


def test_xval_small_batch(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert main(["xval", "--seeds", "4", "--k", "1", "--workers", "1", "--out", str(out)]) == EXIT_FEASIBLE
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert "contradictions=0" in _result_line(capsys.readouterr().out)


@pytest.mark.parametrize("obj, field, position", [
    (_instance([1.0, 0.0, "x"]), "g", "g[2]"),
    ({"n": 1, "indices": [[0], [1], [2]], "g": [1.0, 0.0], "support": {"kind": "full"}}, "g", None),
    ({"n": 1, "indices": [[0], [1], [-2]], "g": [1, 0, 1], "support": {"kind": "full"}}, "indices", "indices[2]"),
    ({"n": 1, "indices": [[0], [1], [1]], "g": [1, 0, 1], "support": {"kind": "full"}}, "indices", "indices[2]"),
    ({"n": 1, "indices": [[0], [1], [2], [3]], "g": [1, 0, 1, 0], "support": {"kind": "full"}}, "indices", None),
    (_instance([1.0, 0.0, 1.0], support={"kind": "moon"}), "support", None),
    (_instance([1.0, 0.0, 1.0], rho={"kind": "cauchy"}), "rho", None),
    (_instance([1.0, 0.0, 1.0], tol={"max_iter": 0}), "tol.max_iter", "tol.max_iter"),
    (_instance([2.0, 0.0, 1.0]), "g", "g[0]"),
    ({"indices": [[0]], "g": [1]}, "n", None),
])
def test_parse_errors_name_the_field(obj, field, position):
    with pytest.raises(files.InstanceParseError) as err:
        files.instance_from_json(obj)
    assert err.value.field == field
    assert err.value.position == position
    assert f"'{field}'" in str(err.value)


def test_malformed_json_reports_location():
    with pytest.raises(files.InstanceParseError) as err:
        files.parse_instance('{"n": 1,\n "g": [1, 0, }')
    assert err.value.position.startswith("line 2")


def test_parse_error_exit_code(tmp_path, capsys):
    path = _write(tmp_path, "bad.instance", _instance([1.0, 0.0, "x"]))
    assert main(["check", path]) == EXIT_USAGE
    assert "g[2]" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path, capsys):
    assert main(["check", str(tmp_path / "nope.instance")]) == EXIT_USAGE


def test_bad_arguments_exit_code(capsys):
    with pytest.raises(SystemExit) as err:
        main(["check"])
    assert err.value.code == EXIT_USAGE


def test_numerical_failure_exit_code(tmp_path, capsys):
    # exp(t^2) against rho = exp(-t^2): every finite difference straddles the divergent edge
    path = _write(tmp_path, "gaussian.instance", _instance([1.0, 0.0, 1.0]))
    from tmoment import cli

    real = cli.maximize

    def broken(inst):
        from tmoment.quadrature import QuadratureFailure, integrate_exp_poly

        raise QuadratureFailure(integrate_exp_poly(np.array([0.0, 0.0, 2.0]), inst))

    cli.maximize = broken
    try:
        assert main(["check", path]) == EXIT_NUMERICAL
    finally:
        cli.maximize = real


def test_instance_json_round_trip_is_exact():
    inst = one_d([1.0, 0.1, 0.30000000000000004, -0.2, 1.7])
    again = files.parse_instance(json.dumps(files.instance_to_json(inst)))
    assert again == inst
    assert again.g.tobytes() == inst.g.tobytes()


def test_console_entry_point(tmp_path):
    path = _write(tmp_path, "gaussian.instance", _instance([1.0, 0.0, 1.0]))
    proc = subprocess.run([sys.executable, "-m", "tmoment.cli", "check", path], capture_output=True, text=True)
    assert proc.returncode == EXIT_FEASIBLE
    assert "RESULT: status=FeasibleInterior" in proc.stdout
