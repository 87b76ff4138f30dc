import csv
import json

import pytest
from click.testing import CliRunner

from ncwick.cli import CSV_COLUMNS, ConfigError, ResultRecord, main, resolve_config, run


def invoke(args, tmp_path):
    return CliRunner().invoke(main, args + ["--out", str(tmp_path)])


def test_missing_backend_exits_2_without_files(tmp_path):
    r = invoke(["plancherel"], tmp_path)
    assert r.exit_code == 2
    assert list(tmp_path.iterdir()) == []


@pytest.mark.parametrize("args", [
    ["plancherel", "--backend", "mars"],
    ["heat-kernel", "--backend", "torus"],
    ["euclid-garding", "--backend", "line", "--symbol", "nope"],
    ["plancherel", "--backend", "torus", "--bogus", "1"],
])
def test_bad_configs_exit_2(args, tmp_path):
    r = invoke(args, tmp_path)
    assert r.exit_code == 2
    assert not list(tmp_path.glob("*.json"))


def test_unknown_config_file_key(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"backend": "torus", "colour": "blue"}))
    r = CliRunner().invoke(main, ["plancherel", "--config", str(p), "--out", str(tmp_path / "o")])
    assert r.exit_code == 2 and not (tmp_path / "o").exists()


def test_flags_override_file():
    cfg = resolve_config("plancherel", {"backend": "torus", "K": 3, "pairs": 7}, {"K": 5})
    assert cfg["K"] == 5 and cfg["pairs"] == 7
    assert cfg["thresholds"]["plancherel_tol"] == 1e-10


def test_h1_alias():
    cfg = resolve_config("plancherel", {}, {"backend": "h1"})
    assert cfg["backend"] == "heisenberg"


def test_resolve_rejects_unknown_experiment():
    with pytest.raises(ConfigError):
        resolve_config("dance", {}, {"backend": "torus"})


def test_records_and_csv(tmp_path):
    r = invoke(["plancherel", "--backend", "torus", "--pairs", "3"], tmp_path)
    assert r.exit_code == 0, r.output
    rec = ResultRecord.from_json((tmp_path / "plancherel.json").read_text())
    assert rec.all_pass and rec.passed == {"defect": True}
    assert rec.config["K"] == 8 and rec.config["backend"] == "torus"
    assert rec.from_json(rec.to_json()) == rec
    with open(tmp_path / "plancherel.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 4


def test_reruns_are_identical_up_to_timestamp(tmp_path):
    texts = []
    for sub in ("a", "b"):
        invoke(["heat-kernel", "--backend", "su2", "--t", "0.5"], tmp_path / sub)
        d = json.loads((tmp_path / sub / "heat-kernel.json").read_text())
        d.pop("timestamp")
        d["config"].pop("output")
        texts.append(json.dumps(d, sort_keys=True))
    assert texts[0] == texts[1]


def test_failing_check_exits_1(tmp_path):
    # an impossible tolerance makes the run complete but fail its flag
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"backend": "torus", "pairs": 2, "thresholds": {"plancherel_tol": 0.0}}))
    r = CliRunner().invoke(main, ["plancherel", "--config", str(p), "--out", str(tmp_path / "o")])
    assert r.exit_code == 1
    assert (tmp_path / "o" / "plancherel.json").exists()


def test_euclid_constant_run():
    cfg = resolve_config("euclid-garding", {}, {"backend": "euclid", "symbol": {"name": "constant"},
                                                 "grid": {"n": 128}})
    rec, rows = run("euclid-garding", cfg)
    assert rec.passed["exact"] and rec.all_pass


def test_version():
    r = CliRunner().invoke(main, ["--version"])
    assert r.exit_code == 0 and "ncwick" in r.output
