import json

import pytest

from gapcert.cli import main, run_experiment
from gapcert.errors import UnknownExperiment


def test_unknown_experiment(tmp_path):
    with pytest.raises(UnknownExperiment):
        run_experiment("no-such-thing", tmp_path)
    assert main(["experiment", "no-such-thing", "--out", str(tmp_path)]) == 2


def test_sl_subcommand(capsys):
    assert main(["sl", "critical-sigma", "--diameter", "1"]) == 0
    out = capsys.readouterr().out
    assert "62.69877951" in out
    assert main(["sl", "gap", "--sigma", "100", "--diameter", "1"]) == 0
    assert main(["sl", "solve", "--sigma", "0", "--diameter", "1", "--modes", "2"]) == 0


def test_sl_solve_csv(tmp_path, capsys):
    assert main(["sl", "solve", "--sigma", "100", "--diameter", "1",
                 "--modes", "2", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "eigenpairs.csv").read_text().splitlines()
    assert lines[0] == "s,w0,w0p,w1,w1p"
    assert len(lines) == 2049


def test_modulus_subcommand(tmp_path):
    assert main(["modulus", "--sigma", "100", "--diameter", "1",
                 "--out", str(tmp_path)]) == 0
    header = (tmp_path / "profile.csv").read_text().splitlines()[0]
    assert header == "s,v,omega,psi,ratio"


def test_spectrum_subcommand(tmp_path):
    assert main(["spectrum", "--grid", "0.01", "--modes", "3",
                 "--export-matrix", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "spectrum.csv").exists()
    assert (tmp_path / "matrix.txt").exists()


def test_experiment_artifacts_and_determinism(tmp_path):
    checks = run_experiment("sl-asymptotics", tmp_path, seed=0)
    assert all(c.passed for c in checks)
    exp_dir = tmp_path / "sl-asymptotics"
    assert (exp_dir / "asymptotics.csv").exists()
    assert (exp_dir / "asymptotics.svg").exists()
    summary = (exp_dir / "summary.txt").read_text()
    assert "[PASS]" in summary and "[FAIL]" not in summary
    first = (exp_dir / "asymptotics.csv").read_bytes()
    run_experiment("sl-asymptotics", tmp_path, seed=0)
    assert (exp_dir / "asymptotics.csv").read_bytes() == first


def test_experiment_via_main_with_jobs(tmp_path):
    rc = main(["experiment", "sl-asymptotics", "identity-check",
               "--out", str(tmp_path), "--jobs", "2"])
    assert rc == 0
    assert (tmp_path / "identity-check" / "identity.csv").exists()


def test_certify_with_json_config(tmp_path):
    cfg = {
        "certify": {
            "operator": {
                "domain": {"kind": "interval", "params": [1.0]},
                "drift": {"name": "constant", "vec": [2.0]},
                "potential": {"name": "zero"},
            },
            "grids": [1 / 128, 1 / 256],
            "modes": 3,
        }
    }
    cfg_path = tmp_path / "op.json"
    cfg_path.write_text(json.dumps(cfg))
    rc = main(["experiment", "certify", "--out", str(tmp_path / "run"),
               "--config", str(cfg_path)])
    assert rc == 0
    cert = json.loads((tmp_path / "run" / "certify" / "certificate.json").read_text())
    assert cert["branch"] == "convex"


def test_certify_with_toml_config(tmp_path):
    cfg_path = tmp_path / "op.toml"
    cfg_path.write_text(
        '[certify.operator.domain]\nkind = "interval"\nparams = [1.0]\n'
        '[certify.operator.drift]\nname = "zero"\n'
        '[certify.operator.potential]\nname = "zero"\n'
        "[certify]\ngrids = [0.0078125, 0.00390625]\nmodes = 3\n")
    rc = main(["experiment", "certify", "--out", str(tmp_path / "run"),
               "--config", str(cfg_path)])
    assert rc == 0
