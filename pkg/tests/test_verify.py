import json
import subprocess
import sys
from types import SimpleNamespace

import pytest

from halfplane_lab.cli import (ConfigError, bundled_config_dir, config_name, exit_code, load_scenarios, parse_field,
                               parse_measure, parse_scenario, parse_young, resolve_config, run_cli)
from halfplane_lab.verify import TAGS, run_scenario


def run_json(capsys, argv):
    code = run_cli(argv)
    return code, json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("tag", TAGS)
def test_every_tag_has_bundled_config(tag):
    path = resolve_config(None, tag)
    assert path.exists()
    scenarios = load_scenarios(path, tag)
    assert scenarios and all(s.tag == tag for s in scenarios)


def test_config_names():
    assert config_name("T2.1a") == "T2_1a.json"
    assert config_name("§5") == "sharpness.json"
    assert resolve_config("unweighted.json", None) == bundled_config_dir() / "unweighted.json"
    with pytest.raises(ConfigError):
        resolve_config("missing.json", None)


def test_parse_field_grammar():
    f = parse_field("const 2 * power_y 0.5 * box 0 1")
    assert f.at(0.5 + 0.25j) == pytest.approx(1.0)
    assert f.at(1.5 + 0.25j) == 0.0
    assert parse_field("box_sum 0 1 2 1 2 3").at(1.5 + 0.1j) == pytest.approx(3.0)
    for bad in ("", "power_y", "wiggle 1", "box 1 0", "rect 0 1 -1 1", "half_disk 0"):
        with pytest.raises(ConfigError):
            parse_field(bad)


def test_parse_measure_and_young():
    mu = parse_measure({"atoms": [[0.5, 0.5, 3]]}, 0.0)
    assert mu.rect(0, 1, 0, 1) == 3.0
    assert parse_measure("power_y 1", 0.0).rect(0, 2, 0, 2) == pytest.approx(4.0)
    assert parse_young("power 2")(2.0) == pytest.approx(4.0)
    with pytest.raises(ConfigError):
        parse_young("nonsense 3")


def test_parse_scenario_errors_name_the_path():
    with pytest.raises(ConfigError, match=r"\$\.params"):
        parse_scenario({"tag": "T2.3", "params": {"p": "two"}})
    with pytest.raises(ConfigError, match="unknown key"):
        parse_scenario({"tag": "T2.3", "bogus": 1})
    with pytest.raises(ConfigError, match=r"\$\.tag"):
        parse_scenario({"tag": "T9.9"})


def test_tag_mismatch_rejected(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"tag": "T2.3", "scenarios": [{"name": "x"}]}))
    assert load_scenarios(p, "T2.3")[0].tag == "T2.3"
    with pytest.raises(ConfigError):
        load_scenarios(p, "T2.4")


def test_exit_codes():
    ok = SimpleNamespace(passed=True, inconclusive=False)
    bad = SimpleNamespace(passed=False, inconclusive=False)
    unsure = SimpleNamespace(passed=False, inconclusive=True)
    assert exit_code([ok, ok]) == 0
    assert exit_code([ok, unsure]) == 2
    assert exit_code([unsure, bad]) == 1


def test_cli_config_error_exit(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"tag": "T2.3", "window": {"j_min": 3, "j_max": 1}}')
    assert run_cli(["verify", "T2.3", "--config", str(p)]) == 1
    assert "$.window" in capsys.readouterr().err


def test_cli_measure(capsys):
    code, out = run_json(capsys, ["measure", "--box", "0", "2", "--density", "power_y 1"])
    assert code == 0 and out["value"] == pytest.approx(4.0)


def test_cli_constant_Bp(capsys):
    code, out = run_json(capsys, ["constant", "Bp", "--weight", "power_y 0.5"])
    assert code == 0 and out["value"] == pytest.approx(4 / 3, rel=1e-12)


def test_cli_maximal_eval(capsys):
    code, out = run_json(capsys, ["maximal-eval", "--op", "dyadic", "--f", "box 0 1", "--points", "0.5,0.25"])
    assert code == 0
    assert json.dumps(out).count("1.0") >= 1


def test_verify_deterministic(tmp_path, capsys):
    outs = []
    for k in range(2):
        csv_path, json_path = tmp_path / f"r{k}.csv", tmp_path / f"r{k}.json"
        code = run_cli(["verify", "T2.3", "--csv", str(csv_path), "--json", str(json_path)])
        assert code == 0
        outs.append((csv_path.read_bytes(), json_path.read_bytes()))
    capsys.readouterr()
    assert outs[0] == outs[1]
    summary = json.loads(outs[0][1])
    assert summary["csv_schema"] == "verify/v1"
    assert "runtime" not in json.dumps(summary)


def test_verify_unweighted_csv_columns(tmp_path, capsys):
    csv_path = tmp_path / "u.csv"
    assert run_cli(["verify", "T2.1a", "--config", "unweighted.json", "--csv", str(csv_path)]) == 0
    capsys.readouterr()
    header = csv_path.read_text().splitlines()[0].split(",")
    assert {"lambda", "measure", "bound"} <= set(header)


def test_bundled_scenario_passes():
    sc = load_scenarios(resolve_config(None, "T2.3"), "T2.3")[0]
    res = run_scenario(sc)
    assert res.passed and res.worst_ratio <= 1 + sc.tolerance


def test_console_module_entry():
    out = subprocess.run([sys.executable, "-m", "halfplane_lab", "measure", "--box", "0", "1"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["value"] == pytest.approx(1.0)
