import json

import pytest

from weylgap.cli import main, report_schema_version


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def strip_meta(text):
    payload = json.loads(text)
    payload.pop("meta")
    return payload


def test_schema_version():
    assert report_schema_version() == "1.0.0"


def test_epsilon_command(capsys, tmp_path):
    path = tmp_path / "eps.json"
    code = main(["epsilon", "--n", "4", "--starts", "4",
                 "--samples", "20000", "--seed", "7",
                 "--output", str(path)])
    assert code == 0
    payload = json.loads(path.read_text())
    assert payload["schema_version"] == "1.0.0"
    rep = payload["report"]
    assert 0 < rep["epsilon_hat"] <= 64 / 3 + 1e-12
    assert rep["sample_certificate"]["violations"] == 0
    assert payload["violations"] == []


def test_json_determinism_excludes_meta(capsys):
    args = ["identities", "--n", "4", "--samples", "200",
            "--tensor-samples", "20", "--seed", "5"]
    code1, out1 = run(capsys, *args)
    code2, out2 = run(capsys, *args)
    assert code1 == code2 == 0
    assert strip_meta(out1) == strip_meta(out2)


def test_constants_command(capsys):
    code, out = run(capsys, "constants", "--n", "4",
                    "--epsilon-hat", "21.333333333333")
    assert code == 0
    rep = json.loads(out)["report"]
    assert rep["coefficients_disagree"] is True
    assert rep["gamma_printed"] == pytest.approx(3.0)
    assert rep["gamma_fitted"] == pytest.approx(7 / 3, rel=1e-8)


def test_model_command(capsys, tmp_path):
    path = tmp_path / "eps.json"
    path.write_text(json.dumps({"epsilon_hat": 64 / 3}))
    code, out = run(capsys, "model", "--spec", "S1(1)xS1(1)xS2(r=10)",
                    "--epsilon-file", str(path))
    assert code == 0
    rep = json.loads(out)["report"]
    assert rep["betti"] == [1, 2, 2, 2, 1]
    assert rep["obstruction"]["verdict"] == "VIOLATES_W1"


def test_morse_command_csv(capsys):
    code, out = run(capsys, "morse", "--spec", "tube:R=2,r=1,n=2",
                    "--directions", "50", "--samples", "2000",
                    "--seed", "3", "--betti", "1,2,1", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("index,tau_direction")
    assert len(lines) == 4  # header + one row per index bin


def test_gapcheck_exit_codes(capsys):
    ok, _ = run(capsys, "gapcheck", "--spec",
                "rgraph:eps=0.3,P=quadric:1,-1,1,-1,0",
                "--epsilon-hat", "21.33", "--samples", "1000")
    assert ok == 0
    capsys.readouterr()
    # a deliberate over-claim must be caught and exit 2
    bad = main(["gapcheck", "--spec",
                "rgraph:eps=0.3,P=quadric:1,-1,1,-1,0",
                "--epsilon-hat", "1e6", "--samples", "1000"])
    out = capsys.readouterr().out
    assert bad == 2
    assert json.loads(out)["violations"]


def test_usage_errors_exit_1(capsys):
    assert main(["no-such-command"]) == 1
    assert main(["model", "--spec", "S1(1)", "--epsilon-hat", "1"]) == 1  # n < 4
    assert main(["morse", "--spec", "garbage"]) == 1
    assert main(["identities", "--n", "4", "--format", "csv"]) == 1
    assert main(["model", "--spec", "S1(1)xS3(r=1)"]) == 1  # missing epsilon
