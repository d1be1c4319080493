import json

import numpy as np
import pytest

from skewlab import cli
from skewlab.rwlab import BlockFunction, HomomorphismH, synthesize_cocycle


def run(args, tmp_path, sub=""):
    out = tmp_path / (sub or "out")
    code = cli.main(["--out", str(out)] + args)
    return code, out


def read_report(out, command):
    return json.loads((out / f"report-{command}.json").read_text())


@pytest.fixture(scope="module")
def measurable_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("meas")
    code = cli.main(["--out", str(out), "construct-measurable", "--rounds", "1"])
    assert code == 0
    return out


def test_config_parsing(tmp_path):
    cfg = tmp_path / "ws.cfg"
    cfg.write_text("dim=1\nbase=2\nseed=7\n# comment\nvaldim=1\n")
    loaded = cli.WorkspaceConfig.load(str(cfg), {})
    assert loaded.seed == 7 and loaded.dim == 1
    cfg.write_text("mystery=1\n")
    with pytest.raises(cli.ConfigError):
        cli.WorkspaceConfig.load(str(cfg), {})
    cfg.write_text("dim=notanumber\n")
    with pytest.raises(cli.ConfigError):
        cli.WorkspaceConfig.load(str(cfg), {})


def test_ergo_seed_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("ERGO_SEED", "123")
    code, out = run(["rw-demo", "--steps", "1000"], tmp_path)
    assert code == 0
    assert read_report(out, "rw-demo")["config"]["seed"] == 123


def test_unknown_command_exits_2():
    assert cli.main(["definitely-not-a-command"]) == 2


def test_construct_measurable_report(measurable_run):
    report = read_report(measurable_run, "construct-measurable")
    assert report["status"] == "ok"
    payload = report["payload"]
    assert all(r["ok"] for r in payload["revalidations"])
    assert payload["certificates"]
    for name in payload["certificates"]:
        assert (measurable_run / name).exists()


def test_verify_evc_round_trip(measurable_run, tmp_path):
    cert = measurable_run / "cert-stage-1.json"
    code, out = run(["verify-evc", str(cert)], tmp_path)
    assert code == 0
    assert read_report(out, "verify-evc")["payload"]["verified"]


def test_verify_evc_tampered_exits_4(measurable_run, tmp_path):
    data = json.loads((measurable_run / "cert-stage-1.json").read_text())
    num, den = data["measured"].split("/")
    data["measured"] = f"{int(num) + 1}/{den}"
    bad = tmp_path / "tampered.json"
    bad.write_text(json.dumps(data))
    code, _ = run(["verify-evc", str(bad)], tmp_path)
    assert code == 4


def test_scan_essential_values(measurable_run, tmp_path):
    cert = measurable_run / "cert-stage-1.json"
    code, out = run(["scan-essential-values", "--input", str(cert),
                     "--max-norm", "3"], tmp_path)
    assert code == 0
    scans = read_report(out, "scan-essential-values")["payload"]["scans"]
    assert all(s["found"] for s in scans)
    assert any(s["target"] == [0, 0] for s in scans)


def test_construct_topological_and_coverage(tmp_path):
    targets = tmp_path / "targets.json"
    targets.write_text(json.dumps([
        {"V_radius": 2, "t": [1.0], "eta": 8.0},
        {"V_radius": 3, "t": [-1.0], "eta": 2.0},
    ]))
    code, out = run(["construct-topological", "--targets", str(targets),
                     "--budget", "4000000",
                     "--coverage-budgets", "1000,10000"], tmp_path)
    assert code == 0
    payload = read_report(out, "construct-topological")["payload"]
    assert all(r["residual"] == 0.0 for r in payload["residuals"])
    covs = payload["coverage"]
    assert covs[0]["coverage"] < covs[1]["coverage"]
    csv_lines = (out / covs[0]["csv"]).read_text().splitlines()
    assert csv_lines[0] == "grid_pattern_hex,grid_value,nearest_orbit_distance"
    assert len(csv_lines) == covs[0]["grid_points"] + 1


def test_construct_topological_infeasible_exits_3(tmp_path):
    targets = tmp_path / "targets.json"
    targets.write_text(json.dumps([{"V_radius": 2, "t": [1.0], "eta": 8.0}]))
    code, _ = run(["construct-topological", "--targets", str(targets),
                   "--budget", "4"], tmp_path)
    assert code == 3


def test_decompose_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    g = BlockFunction.random(rng, dim=2, depth=1, valdim=1)
    fs = synthesize_cocycle(g, HomomorphismH(((0.5,), (-0.25,))))
    lines = ["dim=2 depth=2 valdim=1 symbols=2"]
    for gen, f in enumerate(fs, start=1):
        for idx in range(len(f.table)):
            digits = format(idx, "04b")
            lines.append(f"{gen} {digits} {float(f.table[idx, 0])!r}")
    table = tmp_path / "table.txt"
    table.write_text("\n".join(lines) + "\n")
    code, out = run(["decompose", "--input", str(table), "--tol", "1e-9",
                     "--depth", "2"], tmp_path)
    assert code == 0
    payload = read_report(out, "decompose")["payload"]
    assert payload["status"] == "ok"
    assert abs(payload["H_images"][0][0] - 0.5) < 1e-12
    assert abs(payload["H_images"][1][0] + 0.25) < 1e-12


def test_decompose_inconsistent_exits_4(tmp_path):
    rng = np.random.default_rng(12)
    lines = ["dim=2 depth=1 valdim=1 symbols=2"]
    for gen in (1, 2):
        for idx in range(2):
            lines.append(f"{gen} {idx} {float(rng.normal())!r}")
    table = tmp_path / "table.txt"
    table.write_text("\n".join(lines) + "\n")
    code, _ = run(["decompose", "--input", str(table)], tmp_path)
    assert code == 4


def test_decompose_incomplete_table_exits_2(tmp_path):
    table = tmp_path / "table.txt"
    table.write_text("dim=2 depth=1 valdim=1 symbols=2\n1 0 1.0\n")
    code, _ = run(["decompose", "--input", str(table)], tmp_path)
    assert code == 2


def test_j_action_command(tmp_path):
    code, out = run(["j-action", "--alpha", "0.41421356",
                     "--points", "500", "--orbit", "20000"], tmp_path)
    assert code == 0
    payload = read_report(out, "j-action")["payload"]
    assert payload["commutation_mismatches"] == 0
    assert payload["equidistribution"]["discrepancy"] < 0.01


def test_inspect_kinds(measurable_run, tmp_path):
    code, out = run(["inspect", str(measurable_run / "cert-stage-1.json")],
                    tmp_path, "i1")
    assert code == 0
    assert read_report(out, "inspect")["payload"]["kind"] == "certificate"
    code, out = run(
        ["inspect", str(measurable_run / "report-construct-measurable.json")],
        tmp_path, "i2")
    assert code == 0
    assert read_report(out, "inspect")["payload"]["kind"] == "report"
