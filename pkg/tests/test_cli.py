import json
import subprocess
import sys

import pytest

from qcore.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out.strip(), err


def test_expand_table(capsys):
    assert run(capsys, "expand", "f4^8/f1^2", "--order", "5")[:2] == (0, "0:1 1:2 2:5 3:10 4:12")
    assert run(capsys, "expand", "q^0", "--order", "1")[:2] == (0, "0:1")
    assert run(capsys, "expand", "C(q)", "--order", "3")[:2] == (0, "0:1 1:-1 2:0")


def test_expand_rationals_and_negative_exponents(capsys):
    code, out, _ = run(capsys, "expand", "1/(2*q)", "--order", "2")
    assert code == 0 and out == "-1:1/2 0:0 1:0"


def test_expand_json_matches_table(capsys):
    _, table, _ = run(capsys, "expand", "f2^6*f3^12/(q*f1^6*f6^6)", "--order", "12")
    _, js, _ = run(capsys, "expand", "f2^6*f3^12/(q*f1^6*f6^6)", "--order", "12", "--format", "json")
    doc = json.loads(js)
    assert doc["schema"] == 1
    assert " ".join(f"{t['exponent']}:{t['coefficient']}" for t in doc["terms"]) == table


def test_expand_csv(capsys):
    _, out, _ = run(capsys, "expand", "f1", "--order", "3", "--format", "csv")
    assert out.splitlines() == ["exponent,coefficient", "0,1", "1,-1", "2,-1"]


def test_expand_errors(capsys):
    code, _, err = run(capsys, "expand", "f2^^2")
    assert code == 2 and "column" in err
    code, _, err = run(capsys, "expand", "1/f1", "--order", "100", "--budget", "50")
    assert code == 3


def test_dissect(capsys):
    code, out, _ = run(capsys, "dissect", "f4^8/f1^2", "--mod", "3", "--res", "1", "--order", "4")
    assert code == 0 and out == "0:2 1:12 2:30 3:61"
    code, out, _ = run(capsys, "dissect", "f2^2/f1", "--mod", "3", "--res", "2", "--order", "100")
    assert code == 0
    pairs = out.split()
    assert len(pairs) == 100 and all(p.endswith(":0") for p in pairs)


def test_dissect_bad_residue(capsys):
    with pytest.raises(SystemExit) as info:
        main(["dissect", "f1", "--mod", "3", "--res", "3"])
    assert info.value.code == 2


def test_verify_single_and_unknown(capsys):
    code, out, _ = run(capsys, "verify", "--id", "thm3.6")
    assert code == 0 and "pass" in out
    with pytest.raises(SystemExit) as info:
        main(["verify", "--id", "no-such"])
    assert info.value.code == 2
    assert "known ids" in capsys.readouterr().err


def test_verify_needs_selection(capsys):
    with pytest.raises(SystemExit) as info:
        main(["verify"])
    assert info.value.code == 2


def test_verify_failure_exit_code(tmp_path, capsys):
    path = tmp_path / "c.qcat"
    path.write_text("qcore-catalog 1\n[identity bad]\nlhs = f1\nrhs = f1 + q^7\nwindow = 0 20\n")
    code, out, _ = run(capsys, "verify", "--all", "--catalog", str(path), "--format", "json")
    doc = json.loads(out)
    assert code == 1
    assert doc["items"][0]["witness"] == 7
    assert (doc["items"][0]["lhs"], doc["items"][0]["rhs"]) == ("1", "2")


def test_verify_insufficient_exit_code(capsys, monkeypatch):
    monkeypatch.setenv("QCORE_BUDGET", "400")
    code, _, _ = run(capsys, "verify", "--id", "eq3.14", "--order", "300")
    assert code == 3


def test_verify_all_json_is_deterministic(capsys):
    _, a, _ = run(capsys, "verify", "--all", "--order", "300", "--format", "json")
    _, b, _ = run(capsys, "verify", "--all", "--order", "300", "--format", "json", "--jobs", "2")
    assert a == b
    doc = json.loads(a)
    assert doc["exit_code"] == 0 and doc["summary"]["fail"] == 0


def test_family(capsys):
    code, out, _ = run(capsys, "family", "thm1.2", "--kmax", "2", "--nmax", "60")
    assert code == 0 and "0 failed" in out
    code, out, _ = run(capsys, "family", "thm1.1", "--kmax", "0", "--nmax", "100")
    assert code == 0 and out.startswith("thm1.1 k=0")
    code, out, _ = run(capsys, "family", "cong3.7", "--nmax", "100")
    assert code == 0 and "modulus 492" in out


def test_family_budget(capsys):
    code, _, err = run(capsys, "family", "thm1.1", "--kmax", "3", "--nmax", "40")
    assert code == 3 and "budget" in err


def test_oracle(capsys):
    code, out, _ = run(capsys, "oracle", "--t", "4", "--max", "10", "--compare")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 12
    assert all(line.endswith("yes") for line in lines[1:])
    code, out, _ = run(capsys, "oracle", "--t", "4", "--max", "0", "--format", "json")
    assert json.loads(out)["rows"] == [{"n": 0, "c": 1, "A": 1}]
    with pytest.raises(SystemExit) as info:
        main(["oracle", "--t", "1", "--max", "3"])
    assert info.value.code == 2


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "qcore.cli", "expand", "f1", "--order", "8"],
                         capture_output=True, text=True, check=True).stdout
    assert out.strip() == "0:1 1:-1 2:-1 3:0 4:0 5:1 6:0 7:1"
