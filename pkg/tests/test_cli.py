import json
import os

import pytest

from gnlslab import cli
from gnlslab.cli import (
    load_config,
    save_config,
    run,
    ConfigError,
    EXIT_OK,
    EXIT_VALIDATION,
    EXIT_THEOREM,
    EXIT_ACCURACY,
    SCHEMA,
)


def test_load_config_basic(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\np = 7\ns = 1.45\nlinear = true\ntimes = 0.1,0.2\n")
    cfg = load_config(str(p))
    assert cfg == {"p": 7, "s": 1.45, "linear": True, "times": [0.1, 0.2]}


def test_load_config_rejects_unknown_key(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("nonsense = 3\n")
    with pytest.raises(ConfigError, match="nonsense"):
        load_config(str(p))


def test_load_config_rejects_duplicate(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("p = 5\np = 7\n")
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(str(p))


def test_load_config_reports_key_on_type_error(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("N = not_an_int\n")
    with pytest.raises(ConfigError, match="N"):
        load_config(str(p))


def test_config_roundtrip(tmp_path):
    cfg = {"p": 7, "s": 1.45, "N": 6, "linear": False, "times": [0.1, 0.25],
           "output_dir": "out", "emit_csv": True}
    path = tmp_path / "saved.cfg"
    save_config(str(path), cfg)
    assert load_config(str(path)) == cfg


def test_empty_config_plus_flags(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("")
    assert load_config(str(p)) == {}
    out = tmp_path / "o"
    rc = run(["selftest", "--config", str(p), "--output-dir", str(out)])
    assert rc == EXIT_OK


def test_unknown_command_exits_2():
    assert run(["frobnicate"]) == EXIT_VALIDATION


def test_malformed_config_exits_2(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("who = knows\n")
    assert run(["selftest", "--config", str(p)]) == EXIT_VALIDATION


def test_selftest_and_provenance_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(["selftest", "--output-dir", str(out1)]) == EXIT_OK
    assert run(["selftest", "--output-dir", str(out2)]) == EXIT_OK
    d1 = json.load(open(out1 / "selftest_report.json"))
    d2 = json.load(open(out2 / "selftest_report.json"))
    for d in (d1, d2):
        d["provenance"].pop("timestamp")
        d["config"].pop("output_dir")
    assert d1 == d2
    assert d1["provenance"]["config_hash"]
    assert d1["provenance"]["rng_id"]


def test_normal_form_command(tmp_path):
    rc = run([
        "normal-form", "--p", "5", "--N", "2", "--s", "1.3", "--samples", "3",
        "--output-dir", str(tmp_path),
    ])
    assert rc == EXIT_OK
    doc = json.load(open(tmp_path / "normal_form_report.json"))
    assert doc["results"]["max_rel_error"] <= 1e-6
    assert abs(doc["results"]["fitted_constant"] - 1.0) < 1e-4


def test_transport_command_t0(tmp_path):
    rc = run([
        "transport", "--N", "2", "--n-samples", "200", "--times", "0",
        "--tol", "1e-6", "--output-dir", str(tmp_path),
    ])
    assert rc == EXIT_OK
    doc = json.load(open(tmp_path / "transport_report.json"))
    assert all(r["z_score"] == 0.0 for r in doc["results"]["reports"])
    assert os.path.exists(tmp_path / "transport_samples.csv")


def test_conserve_command(tmp_path):
    rc = run([
        "conserve", "--N", "4", "--T", "0.5", "--checkpoints", "3",
        "--tol", "1e-9", "--n-samples", "4", "--index", "1",
        "--output-dir", str(tmp_path), "--emit-binary", "true",
    ])
    assert rc == EXIT_OK
    assert (tmp_path / "trajectory.csv").exists()
    assert (tmp_path / "trajectory.bin").exists()
    first = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert first[0].startswith("# provenance:")
    assert first[1] == "time,mass,E_N,H_sigma_norm"


def test_resonance_command_and_theorem_exit(tmp_path, monkeypatch):
    rc = run(["resonance", "--p", "5", "--K", "4", "--output-dir", str(tmp_path)])
    assert rc == EXIT_OK
    doc = json.load(open(tmp_path / "resonance_report.json"))
    assert doc["passed"] is True

    # fault injection: a fabricated counterexample must map to exit 3
    from gnlslab.resonance import ScanReport
    from gnlslab.functionals import FrequencyTuple

    fake = ScanReport(
        scan_id="omega-lower-bound", parameters={}, extremal_value=-1.0,
        witness=FrequencyTuple((1, 1, 0, 0, 0, 0)), tuples_checked=1,
        violated=True,
    )
    monkeypatch.setattr(cli.rs, "omega_lower_bound_scan", lambda p, K: fake)
    rc = run(["resonance", "--p", "5", "--K", "4", "--output-dir", str(tmp_path)])
    assert rc == EXIT_THEOREM


def test_accuracy_failure_exit(tmp_path, monkeypatch):
    from gnlslab.flow import AccuracyError

    def boom(u0, T, checkpoints, params):
        raise AccuracyError("injected drift failure")

    monkeypatch.setattr(cli, "conservation_report", boom)
    rc = run(["conserve", "--N", "2", "--output-dir", str(tmp_path)])
    assert rc == EXIT_ACCURACY


def test_evolve_command_smooth_data(tmp_path):
    rc = run([
        "evolve", "--N", "4", "--t", "0.5", "--index", "0",
        "--n-samples", "1", "--s", "9.0", "--sigma", "0.5",
        "--output-dir", str(tmp_path),
    ])
    # s = 9 gives minuscule coefficients; this must simply succeed
    assert rc == EXIT_OK


def test_cli_schema_has_no_dash_collisions():
    flags = {k.replace("_", "-") for k in SCHEMA}
    assert len(flags) == len(SCHEMA)
