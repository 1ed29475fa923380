import csv
import json

import numpy as np
import pytest

from trescafem.cli import COMMANDS, build_parser, main
from trescafem.mesh import build_boundary_topology, load_mesh

SMALL = ["--n-boundary", "32"]

ARTIFACTS = {
    "mesh": ["mesh.tmesh", "summary.json"],
    "solve-dn": ["solution.vtk", "boundary.csv", "summary.json"],
    "solve-tresca": ["solution.vtk", "boundary.csv", "summary.json"],
    "solve-signorini": ["derivative.vtk", "boundary.csv", "summary.json"],
    "verify-sensitivity": ["sensitivity.csv", "sensitivity.json"],
    "gradcheck": ["gradcheck.csv", "gradcheck.json"],
    "optimize": ["history.csv", "control.csv", "summary.json"],
}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("command", list(COMMANDS))
def test_command_writes_artifacts(tmp_path, capsys, command):
    code, out, _ = run(capsys, command, "--out", str(tmp_path), *SMALL)
    assert code == 0
    report = json.loads(out)
    assert sorted(report["written"]) == sorted(ARTIFACTS[command])
    for name in ARTIFACTS[command]:
        assert (tmp_path / name).stat().st_size > 0


def test_mesh_round_trip_through_cli(tmp_path, capsys):
    assert run(capsys, "mesh", "--out", str(tmp_path), *SMALL)[0] == 0
    mesh = load_mesh(tmp_path / "mesh.tmesh")
    code, _, _ = run(capsys, "solve-tresca", "--out", str(tmp_path / "s"), "--mesh", str(tmp_path / "mesh.tmesh"))
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "s" / "boundary.csv")))
    assert len(rows) == len(build_boundary_topology(mesh).neumann)
    theta = [float(r["theta"]) for r in rows]
    assert theta == sorted(theta)


def test_tresca_summary_is_consistent(tmp_path, capsys):
    assert run(capsys, "solve-tresca", "--out", str(tmp_path), *SMALL)[0] == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["n_stick"] + summary["n_slip"] == len(list(csv.DictReader(open(tmp_path / "boundary.csv"))))


def test_seed_makes_runs_reproducible(tmp_path, capsys):
    for name in ("a", "b"):
        assert run(capsys, "gradcheck", "--out", str(tmp_path / name), "--seed", "5", *SMALL)[0] == 0
    assert (tmp_path / "a" / "gradcheck.csv").read_text() == (tmp_path / "b" / "gradcheck.csv").read_text()


def test_missing_mesh_is_config_error(tmp_path, capsys):
    code, _, err = run(capsys, "solve-dn", "--out", str(tmp_path), "--mesh", str(tmp_path / "nope.tmesh"))
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "config"


def test_unknown_flag_is_config_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["solve-dn", "--out", str(tmp_path), "--bogus"])
    assert info.value.code == 2
    assert json.loads(capsys.readouterr().err.strip())["error"] == "config"


def test_abbreviated_flag_rejected(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["solve-dn", "--out", str(tmp_path), "--n-b", "32"])
    assert info.value.code == 2


@pytest.mark.parametrize(
    "content",
    ["{not json", "[1, 2]", '{"meshh": {}}', '{"tolerances": {"tol_foo": 1}}', '{"tolerances": {"tol_law": -1}}',
     '{"data": {"f": "no-such-field"}}'],
)
def test_bad_config_is_config_error(tmp_path, capsys, content):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(content)
    code, _, err = run(capsys, "solve-tresca", "--out", str(tmp_path / "o"), "--config", str(cfgfile), *SMALL)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "config"


def test_unknown_config_key(tmp_path, capsys):
    assert run(capsys, "solve-dn", "--out", str(tmp_path), "--config", "no-such-key")[0] == 2


@pytest.mark.parametrize("command", ["solve-tresca", "optimize"])
def test_non_convergence_exit_code(tmp_path, capsys, command):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"tolerances": {"max_outer": 1}}))
    code, _, err = run(capsys, command, "--out", str(tmp_path / "o"), "--config", str(cfgfile), *SMALL)
    assert code == 3
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "non_convergence"
    assert payload["iterations"] == 1
    if command == "optimize":
        assert payload["control_iteration"] == 0


def test_unwritable_output_is_io_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "solve-dn", "--out", str(blocker), *SMALL)
    assert code == 4
    assert json.loads(err.strip().splitlines()[-1])["error"] == "io"


@pytest.mark.parametrize("command", list(COMMANDS))
def test_help_lists_common_flags(command, capsys):
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args([command, "--help"])
    assert info.value.code == 0
    text = capsys.readouterr().out
    for flag in ("--config", "--mesh", "--out", "--seed", "--n-boundary", "--tol-slip", "--tol-crit", "--tol-law"):
        assert flag in text


def test_optimize_history_on_builtin_config(tmp_path, capsys):
    code, _, _ = run(capsys, "optimize", "--out", str(tmp_path), "--config", "paper-3.3.2", *SMALL)
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "history.csv")))
    assert len(rows) > 20
    J = np.array([float(r["J"]) for r in rows])
    assert np.all(np.diff(J) <= 1e-12 * J[0])
    z = np.array([float(r["z"]) for r in csv.DictReader(open(tmp_path / "control.csv"))])
    assert np.all(np.abs(z) <= 1)
