"""Config parsing and CLI contract tests: strict schemas, exit codes,
artifact files, and the bitwise round-trip reproduction property."""

import json

import numpy as np
import pytest

from hmflow.cli import main
from hmflow.config import load_config, parse_config
from hmflow.errors import ConfigError
from hmflow.monitors import SERIES_COLUMNS


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def bump_doc(out_dir, nodes=80):
    return {
        "domain": {"kind": "sphere", "dim": 2,
                   "grid": {"kind": "equivariant", "nodes": nodes}},
        "target": {"kind": "sphere", "dim": 2},
        "initial_map": {"scenario": "degree0_bump", "amplitude": 0.3},
        "flow": {"t_max": 20.0, "monitor_stride": 2000},
        "output": {"dir": str(out_dir)},
    }


# ---------------------------------------------------------------------------
# config parsing


def test_unknown_keys_rejected():
    doc = bump_doc("out")
    doc["extra"] = 1
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_unknown_scenario_rejected():
    doc = bump_doc("out")
    doc["initial_map"] = {"scenario": "mystery"}
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_negative_t_max_rejected():
    doc = bump_doc("out")
    doc["flow"]["t_max"] = -1.0
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_resolved_dict_round_trips():
    cfg = parse_config(bump_doc("out"))
    again = parse_config(cfg.resolved_dict())
    assert again.resolved_dict() == cfg.resolved_dict()


def test_load_config_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_cp_domain_rejected():
    doc = bump_doc("out")
    doc["domain"] = {"kind": "cp", "complex_dim": 1}
    with pytest.raises(ConfigError):
        parse_config(doc)


# ---------------------------------------------------------------------------
# check verb


def check_exit(tmp_path, domain, target, name):
    doc = {
        "domain": domain,
        "target": target,
        "initial_map": {"scenario": "identity"}
        if domain["kind"] == "sphere"
        else {"scenario": "torus_linear",
              "matrix": np.eye(len(domain["periods"])).tolist()},
    }
    return main(["check", "--config", write_config(tmp_path, doc, name)])


def test_check_exit_codes(tmp_path, capsys):
    s2 = {"kind": "sphere", "dim": 2}
    s3 = {"kind": "sphere", "dim": 3}
    t2 = {"kind": "torus", "periods": [1.0, 1.0]}
    assert check_exit(tmp_path, s3, s2, "a.json") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ricci_margin"] == pytest.approx(1.0)
    assert check_exit(tmp_path, s2, s2, "b.json") == 0
    assert check_exit(tmp_path, t2, t2, "c.json") == 2
    assert check_exit(tmp_path, t2, s2, "d.json") == 3


def test_check_bad_config_exit_64(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{]")
    assert main(["check", "--config", str(path)]) == 64


# ---------------------------------------------------------------------------
# run verb


@pytest.fixture(scope="module")
def bump_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("bump_out")
    cfg = bump_doc(out)
    code = main(["run", "--config",
                 write_config(tmp_path_factory.mktemp("cfg"), cfg)])
    return code, out


def test_run_exit_and_artifacts(bump_run):
    code, out = bump_run
    assert code == 0
    for name in ("series.csv", "verdict.json", "final_state.csv"):
        assert (out / name).exists()


def test_run_series_schema_strict(bump_run):
    _, out = bump_run
    lines = (out / "series.csv").read_text().splitlines()
    assert lines[0] == ",".join(SERIES_COLUMNS)
    t_prev = -1.0
    for line in lines[1:]:
        cells = line.split(",")
        assert len(cells) == len(SERIES_COLUMNS)
        t = float(cells[0])
        assert t > t_prev
        t_prev = t
        for cell in cells:
            if cell:
                assert np.isfinite(float(cell))


def test_run_verdict_contents(bump_run):
    _, out = bump_run
    doc = json.loads((out / "verdict.json").read_text())
    assert doc["verdict"] == "Converged"
    assert doc["classification"]["classification"] == "ConstantMap"
    assert doc["hypotheses"]["strict_ok"] is True
    assert doc["config"]["flow"]["t_max"] == 20.0


def test_run_round_trip_bitwise(bump_run, tmp_path):
    _, out = bump_run
    doc = json.loads((out / "verdict.json").read_text())["config"]
    doc["output"]["dir"] = str(tmp_path / "replay")
    assert main(["run", "--config", write_config(tmp_path, doc)]) == 0
    original = (out / "series.csv").read_bytes()
    replay = (tmp_path / "replay" / "series.csv").read_bytes()
    assert original == replay


def test_run_blowup_exit_5(tmp_path):
    doc = bump_doc(tmp_path / "out")
    doc["initial_map"] = {"scenario": "degree1_perturbed", "epsilon": 0.5,
                          "mode": 2}
    doc["flow"] = {"t_max": 1.0, "monitor_stride": 100, "blowup_guard": 2.0}
    assert main(["run", "--config", write_config(tmp_path, doc)]) == 5
    lines = (tmp_path / "out" / "series.csv").read_text().splitlines()
    assert len(lines) >= 2      # header plus the finite rows seen before abort
    for cell in lines[-1].split(","):
        if cell:
            assert np.isfinite(float(cell))


def test_run_bad_config_exit_64(tmp_path):
    doc = bump_doc(tmp_path / "out")
    doc["flow"]["scheme"] = "leapfrog"
    assert main(["run", "--config", write_config(tmp_path, doc)]) == 64


# ---------------------------------------------------------------------------
# sweep verb


def test_sweep_summary_and_ordering(tmp_path):
    doc = bump_doc(tmp_path / "sweep_out")
    doc["sweep"] = [
        {"path": "initial_map.amplitude", "values": [0.1, 0.3]},
        {"path": "flow.t_max", "values": [10.0, 20.0]},
    ]
    assert main(["sweep", "--config", write_config(tmp_path, doc),
                 "--serial"]) == 0
    lines = (tmp_path / "sweep_out" / "summary.csv").read_text().splitlines()
    assert lines[0].startswith("initial_map.amplitude,flow.t_max,")
    combos = [tuple(line.split(",")[:2]) for line in lines[1:]]
    assert combos == [("0.1", "10.0"), ("0.1", "20.0"),
                      ("0.3", "10.0"), ("0.3", "20.0")]
    for line in lines[1:]:
        assert line.split(",")[3] == "ConstantMap"
    for i in range(4):
        assert (tmp_path / "sweep_out" / f"case_{i // 2}_{i % 2}"
                / "series.csv").exists()


def test_sweep_empty_range_exit_64(tmp_path):
    doc = bump_doc(tmp_path / "out")
    doc["sweep"] = [{"path": "initial_map.amplitude", "values": []}]
    assert main(["sweep", "--config", write_config(tmp_path, doc)]) == 64


def test_sweep_bad_path_exit_64(tmp_path):
    doc = bump_doc(tmp_path / "out")
    doc["sweep"] = [{"path": "initial_map.missing", "values": [1.0]}]
    assert main(["sweep", "--config", write_config(tmp_path, doc)]) == 64
