import json
import math

import pytest

from conftest import cf
from nicholson.cli import main


MODEL_DOC = {
    "t0": 0.0,
    "delta": cf("1"),
    "terms": [{"p": cf("e"), "a": cf("1"),
               "tau": cf("1"), "sigma": cf("0.5")}],
    "beta_form": {"beta": cf("1"), "delta": 1.0, "p": [math.e], "a": [1.0]},
}


@pytest.fixture
def model_path(tmp_model_file):
    return tmp_model_file(MODEL_DOC)


def test_check_writes_report(model_path, tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["check", model_path, "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["verdicts"]["H3"]["pass"] is True
    assert payload["K"]["value"] == pytest.approx(1.0, abs=1e-12)
    assert payload["bounds"]["m"] is not None


def test_check_stdout(model_path, capsys):
    assert main(["check", model_path]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert "verdicts" in payload


def test_check_is_deterministic(model_path, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["check", model_path, "--out", str(a)])
    main(["check", model_path, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_simulate_csv(model_path, tmp_path, capsys):
    csv = tmp_path / "traj.csv"
    rc = main(["simulate", model_path, "--history", "3", "--t-end", "50",
               "--csv", str(csv), "--stride", "100"])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["x_end"] == pytest.approx(1.0, abs=1e-4)
    lines = csv.read_text().strip().splitlines()
    assert lines[0] == "t,x"
    assert len(lines) >= 51


def test_simulate_bad_history(model_path, capsys):
    assert main(["simulate", model_path, "--history", "log(", "--t-end",
                 "1"]) == 2


def test_verify_exit_codes(model_path, tmp_path, capsys):
    rc = main(["verify", model_path, "--pairs", "0.5,2", "--t-end", "120",
               "--out", str(tmp_path / "v.json")])
    assert rc == 0
    payload = json.loads((tmp_path / "v.json").read_text())
    names = {s["name"] for s in payload["sections"]}
    assert "permanence" in names and "attractivity" in names


def test_verify_extinction_branch(tmp_model_file, tmp_path):
    doc = {
        "t0": 0.0,
        "delta": cf("1"),
        "terms": [{"p": cf("0.9"), "a": cf("1"),
                   "tau": cf("0.25"), "sigma": cf("0.25")}],
    }
    path = tmp_model_file(doc, "ext.json")
    rc = main(["verify", path, "--out", str(tmp_path / "e.json")])
    assert rc == 0
    payload = json.loads((tmp_path / "e.json").read_text())
    assert payload["sections"][0]["name"] == "extinction"


def test_map_sweep_ok(capsys):
    rc = main(["map", "--K", "1.0", "--a-plus", "1.0", "--zeta-plus", "0.3",
               "--sweep", "--max-n", "100000"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["sweep"]["passed"] is True
    assert payload["stability_margin"] == pytest.approx(
        math.exp(0.3) - 1.0, rel=1e-12)


def test_map_diagnostic_cycle(capsys, tmp_path):
    orbit_csv = tmp_path / "orbit.csv"
    rc = main(["map", "--K", "1.0", "--a-plus", "1.0", "--zeta-plus", "1.4",
               "--diagnostic", "--x0", "1.5", "--max-n", "10000",
               "--orbit-csv", str(orbit_csv)])
    assert rc == 1
    payload = json.loads(capsys.readouterr().out)
    assert payload["orbit"]["verdict"] == "two-cycle-detected"
    assert orbit_csv.read_text().startswith("n,x_n")


def test_map_refusal_is_usage_error(capsys):
    assert main(["map", "--K", "1.0", "--a-plus", "1.0",
                 "--zeta-plus", "1.4", "--x0", "1.5"]) == 2


def test_missing_config_is_usage_error(capsys):
    assert main(["check", "/nonexistent/model.json"]) == 2


def test_malformed_config_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"delta": {"expr": "1", "class": "constant"}}')
    assert main(["check", str(bad)]) == 2


def test_repro_cli(tmp_path, capsys):
    rc = main(["repro", "ex42", "--out-dir", str(tmp_path),
               "--out", str(tmp_path / "stdout.json")])
    assert rc == 0
    assert (tmp_path / "ex42_report.json").exists()


def test_periodic_cli(tmp_model_file, tmp_path):
    doc = {
        "t0": 0.0,
        "delta": {"expr": "0.1*(1+0.5*cos(2*pi*t))", "class": "periodic",
                  "period": 1.0},
        "terms": [{
            "p": {"expr": f"{0.1 * math.e!r}*(1+0.5*cos(2*pi*t))",
                  "class": "periodic", "period": 1.0},
            "a": cf("1"),
            "tau": {"expr": "0.1*(1+cos(2*pi*t))", "class": "periodic",
                    "period": 1.0},
            "sigma": cf("0.2"),
        }],
    }
    path = tmp_model_file(doc, "periodic.json")
    csv = tmp_path / "period.csv"
    rc = main(["periodic", path, "--omega", "1", "--csv", str(csv),
               "--out", str(tmp_path / "p.json")])
    assert rc == 0
    payload = json.loads((tmp_path / "p.json").read_text())
    sec = payload["sections"][0]
    assert sec["status"] == "pass"
    assert sec["facts"]["certification"] == "certified"
    assert csv.exists()
