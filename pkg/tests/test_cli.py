import csv
import json

import pytest

from conftest import tiny_config
from holoquench.cli import main, parse_grid, sweep_points, verify_manifest
from holoquench.config import dump_config
from holoquench.errors import EmptySweep


@pytest.fixture
def tiny_file(tmp_path):
    p = tmp_path / "tiny.json"
    dump_config(tiny_config(), p)
    return p


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_writes_outputs_and_manifest(tmp_path, tiny_file, capsys):
    out = tmp_path / "run"
    code, text, _ = run(["simulate", "--config", tiny_file, "--out", out, "--record", "modes"], capsys)
    # 40 roundtrips is far too short to classify; the exit code says so
    assert code in (0, 3)
    for name in ("config.json", "fields.csv", "record.bin", "spin_series.csv", "running_sz.csv",
                 "running_sy.csv", "overall.csv", "topology.json", "manifest.json"):
        assert (out / name).exists(), name
    man = json.loads((out / "manifest.json").read_text())
    assert man["artifact_version"] and man["steps"] > 0
    assert verify_manifest(out / "manifest.json") == []
    head = (out / "spin_series.csv").read_text().splitlines()[0]
    assert head == "t,sz,sy,intensity,sz_norm,sy_norm,abs_psi_a,abs_psi_c"


def test_replay_from_manifest_reproduces_digests(tmp_path, tiny_file, capsys):
    run(["simulate", "--config", tiny_file, "--out", tmp_path / "a",
         "--set", "disorder.modulator.delta=0.3", "--seed", "4"], capsys)
    run(["simulate", "--config", tmp_path / "a" / "manifest.json", "--out", tmp_path / "b"], capsys)
    a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert a["files"] == b["files"] and "modulator_disorder.csv" in a["files"]


def test_env_var_sets_output_root(tmp_path, tiny_file, capsys, monkeypatch):
    monkeypatch.setenv("HOLOQUENCH_OUT", str(tmp_path / "root"))
    run(["simulate", "--config", tiny_file, "--no-series"], capsys)
    runs = list((tmp_path / "root").iterdir())
    assert len(runs) == 1 and runs[0].name.startswith("simulate-")
    assert not (runs[0] / "spin_series.csv").exists()


def test_module_error_gives_json_and_status_1(tmp_path, tiny_file, capsys):
    code, _, err = run(["simulate", "--config", tiny_file, "--out", tmp_path / "x",
                        "--set", "couplers.AB.strength=1.5"], capsys)
    assert code == 1
    doc = json.loads(err)
    assert doc["code"] == "CouplingOutOfRange" and doc["module"] == "model-config"
    assert set(doc) == {"code", "module", "message", "context"}


def test_bad_override_is_reported(tmp_path, tiny_file, capsys):
    code, _, err = run(["simulate", "--config", tiny_file, "--out", tmp_path / "x",
                        "--set", "nonsense.field=1"], capsys)
    assert code == 1 and json.loads(err)["code"] == "OverrideError"


def test_analyze_reproduces_simulate(tmp_path, tiny_file, capsys):
    run(["simulate", "--config", tiny_file, "--out", tmp_path / "s", "--record", "modes"], capsys)
    for rec in ("fields.csv", "record.bin"):
        run(["analyze", "--record", tmp_path / "s" / rec, "--out", tmp_path / rec], capsys)
        assert ((tmp_path / rec / "topology.json").read_bytes()
                == (tmp_path / "s" / "topology.json").read_bytes())


def test_analyze_unknown_format(tmp_path, capsys):
    p = tmp_path / "r.txt"
    p.write_text("x")
    code, _, err = run(["analyze", "--record", p, "--out", tmp_path / "o"], capsys)
    assert code == 1 and json.loads(err)["code"] == "RecordFormatError"


def test_oracle_commands(tmp_path, capsys):
    code, text, _ = run(["oracle", "--phi", "pi", "--kappa", "1", "--n-k", "128",
                         "--horizon", "2000", "--out", tmp_path / "pi"], capsys)
    doc = json.loads((tmp_path / "pi" / "oracle.json").read_text())
    assert code == 0 and doc["winding"] == 1 and doc["topology"]["c0"] == 1
    assert doc["eta"] == pytest.approx(0.2)
    code, _, _ = run(["oracle", "--phi", "0", "--kappa", "1", "--n-k", "128",
                      "--horizon", "2000", "--out", tmp_path / "zero"], capsys)
    doc = json.loads((tmp_path / "zero" / "oracle.json").read_text())
    assert code == 0 and doc["winding"] is None
    assert doc["gapless"]["code"] == "GaplessSpectrum"
    assert doc["topology"]["classification"] == "trivial"
    files = run(["export", "figS1", "--run", tmp_path / "pi", "--out", tmp_path / "e"], capsys)[1]
    assert "figS1_running_sz.csv" in files


def test_export_recipes(tmp_path, tiny_file, capsys):
    run(["simulate", "--config", tiny_file, "--out", tmp_path / "s",
         "--set", "disorder.modulator.delta=0.2", "--set", "disorder.source.delta=0.05"], capsys)
    for recipe in ("fig2", "fig3", "fig4", "fig5"):
        code, _, _ = run(["export", recipe, "--run", tmp_path / "s", "--out", tmp_path / "e"], capsys)
        assert code == 0
    rows = list(csv.reader(open(tmp_path / "e" / "fig2_series.csv")))
    assert rows[0] == ["t", "abs_psi_a", "abs_psi_c", "sz_norm", "sy_norm"]
    # values are copied as text, so they match the run output exactly
    src = list(csv.reader(open(tmp_path / "s" / "spin_series.csv")))
    assert rows[5][0] == src[5][0] and rows[5][3] == src[5][4]
    assert (tmp_path / "e" / "fig4_modulator_disorder.csv").exists()
    assert (tmp_path / "e" / "fig5_source_disorder.json").exists()


def test_grid_parsing_and_empty_sweep():
    axes = parse_grid(["disorder.modulator.delta=0,0.1,0.5", "seed=1,2"])
    assert len(sweep_points(axes)) == 6
    with pytest.raises(EmptySweep):
        sweep_points([])
    with pytest.raises(EmptySweep):
        sweep_points(parse_grid(["seed="]))


def test_sweep_is_deterministic_and_isolates_failures(tmp_path, tiny_file, capsys):
    args = ["sweep", "--config", tiny_file, "--grid", "seed=1,2",
            "--grid", "couplers.AB.strength=0.1,1.5"]
    code, _, _ = run(args + ["--out", tmp_path / "a"], capsys)
    run(args + ["--out", tmp_path / "b", "--threads", "2"], capsys)
    a = (tmp_path / "a" / "summary.csv").read_bytes()
    assert a == (tmp_path / "b" / "summary.csv").read_bytes()
    rows = list(csv.DictReader(open(tmp_path / "a" / "summary.csv")))
    assert [r["point"] for r in rows] == ["0", "1", "2", "3"]
    bad = [r for r in rows if r["couplers.AB.strength"] == "1.5"]
    assert all(r["error_code"] == "CouplingOutOfRange" for r in bad)
    assert code == 3


def test_empty_sweep_command(tmp_path, tiny_file, capsys):
    code, _, err = run(["sweep", "--config", tiny_file, "--out", tmp_path / "s"], capsys)
    assert code == 1 and json.loads(err)["code"] == "EmptySweep"
