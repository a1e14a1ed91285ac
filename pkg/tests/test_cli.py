import json

import pytest

from qha.cli import ConfigError, RunConfig, load_config, main


def write(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload, indent=2))
    return str(path)


def test_defaults_validate():
    cfg = RunConfig()
    cfg.validate()
    assert cfg.phase_grid().N == 256 and cfg.hermite_basis().M == 64


def test_non_power_of_two_names_field(tmp_path, capsys):
    path = write(tmp_path, {"N": 100})
    assert main(["verify", "--config", path]) == 2
    err = capsys.readouterr().err
    assert "field 'N'" in err and "power of two" in err


def test_unknown_field_is_an_error(tmp_path, capsys):
    path = write(tmp_path, '{\n  "seed": 1,\n  "Lx": 8\n}\n')
    assert main(["verify", "--config", path]) == 2
    assert f"{path}:3: field 'Lx': unknown field" in capsys.readouterr().err


def test_invalid_json_reports_line(tmp_path, capsys):
    path = write(tmp_path, '{\n  "seed": 1,\n}\n')
    assert main(["verify", "--config", path]) == 2
    assert ":3:" in capsys.readouterr().err


@pytest.mark.parametrize(
    "payload, field",
    [
        ({"p_grid": [0.5]}, "p_grid"),
        ({"R_list": [8.0]}, "R_list"),
        ({"output": {"path": None, "format": "xml"}}, "output"),
        ({"M": 200}, "M"),
        ({"d": 2}, "d"),
        ({"experiment": "growth"}, "experiment"),
    ],
)
def test_field_diagnostics(tmp_path, capsys, payload, field):
    path = write(tmp_path, payload)
    assert main(["verify", "--config", path]) == 2
    assert f"field '{field}'" in capsys.readouterr().err


def test_p_grid_accepts_inf(tmp_path):
    cfg, _ = load_config(write(tmp_path, {"p_grid": [1, 2, "inf"]}))
    assert cfg.p_grid[-1] == float("inf")


def test_thread_variable_is_validated(monkeypatch, capsys):
    monkeypatch.setenv("QHA_NUM_THREADS", "zero")
    assert main(["diagnostics"]) == 2
    assert "QHA_NUM_THREADS" in capsys.readouterr().err


def test_restriction_is_byte_identical(tmp_path):
    cfg = write(tmp_path, {"N": 128, "p_grid": [1, 2]})
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.csv"
        assert main(["restriction", "--config", cfg, "--out", str(out), "--format", "csv", "--seed", "7"]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].startswith(b"trial,check,q,")


def test_growth_json(tmp_path):
    cfg = write(tmp_path, {"R_list": [1, 2], "family_size": 3, "p_grid": [1, 2, "inf"]})
    out = tmp_path / "g.json"
    assert main(["growth", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["passed"] and payload["slope_ceiling"] == 7.5
    assert {f["direction"] for f in payload["fits"]} == {"forward", "inverse"}


def test_verify_default(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())["rows"]
    assert len(rows) >= 25 and all(r["passed"] for r in rows)
    assert all({"anchor", "tolerance", "measured"} <= set(r) for r in rows)


def test_config_error_message_format():
    err = ConfigError("N", "must be a power of two", 4, "run.json")
    assert str(err) == "run.json:4: field 'N': must be a power of two"
