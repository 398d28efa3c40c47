import pandas as pd
import pytest
import yaml

from spillover import cli


def _write(path, cfg):
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


def test_help_lists_commands(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for name in ("svar-panel", "svar-country", "firm-reg", "firm-lp", "model-sweep", "verify-props"):
        assert name in out


def test_verify_props_succeeds(tmp_path):
    assert cli.main(["verify-props", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "propositions.txt").read_text()
    assert "FAIL" not in text and text.count("PASS") == 4
    manifest = yaml.safe_load((tmp_path / "manifest.yaml").read_text())
    assert manifest["command"] == "verify-props" and manifest["run"]["summary"]["passed"]


def test_verify_props_failure_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path / "c.yaml", {"b0_pair": [0.0, 0.1]})
    assert cli.main(["verify-props", "-c", cfg, "-o", str(tmp_path / "o")]) == 1
    assert "class=RegimeMismatch" in capsys.readouterr().err


def test_missing_data_path_is_config_error(tmp_path, capsys):
    cfg = _write(tmp_path / "c.yaml", {"data": {"macro": str(tmp_path / "nope.csv")}})
    assert cli.main(["svar-country", "-c", cfg, "-o", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error class=ConfigPathMissing") and 'message="' in err


def test_missing_config_file(tmp_path, capsys):
    assert cli.main(["firm-reg", "-c", str(tmp_path / "absent.yaml")]) == 2
    assert "class=ConfigPathMissing" in capsys.readouterr().err


def test_unknown_key_and_wrong_command(tmp_path, capsys):
    assert cli.main(["model-sweep", "-c", _write(tmp_path / "a.yaml", {"bogus": 1})]) == 2
    assert cli.main(["model-sweep", "-c", _write(tmp_path / "b.yaml", {"command": "firm-reg"})]) == 2
    assert capsys.readouterr().err.count("class=ConfigError") == 2


def test_svar_country_two_variable_fixture(tmp_path):
    cli.make_fixtures(tmp_path / "data", seed=1)
    cfg = _write(tmp_path / "c.yaml", {
        "data": {"macro": str(tmp_path / "data" / "macro.csv")},
        "country": "Peru",
        "var": {"variables": ["shock", "us_10y"], "lags": 2, "gibbs": {"iterations": 600, "burn_in": 100}},
        "irf": {"horizon": 12},
        "plots": False,
    })
    out = tmp_path / "o"
    assert cli.main(["svar-country", "-c", cfg, "-o", str(out), "--seed", "3"]) == 0
    df = pd.read_csv(out / "irf_country.csv")
    assert list(df.columns) == ["variable", "horizon", "median", "p16", "p84", "p05", "p95"]
    assert len(df) == 2 * 13
    impact = df[(df["variable"] == "us_10y") & (df["horizon"] == 0)]
    assert impact["median"].iloc[0] == pytest.approx(0.5)


def test_manifest_round_trip_reproduces(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    cfg = _write(tmp_path / "c.yaml", {"debt_sweep": {"b0": [0.0, 0.8, 21]}, "plots": False})
    assert cli.main(["model-sweep", "-c", cfg, "-o", str(first)]) == 0
    assert cli.main(["model-sweep", "-c", str(first / "manifest.yaml"), "-o", str(second)]) == 0
    for name in sorted(p.name for p in first.glob("*.csv")):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    a = yaml.safe_load((first / "manifest.yaml").read_text())
    b = yaml.safe_load((second / "manifest.yaml").read_text())
    a.pop("run"), b.pop("run")
    a.pop("output_dir"), b.pop("output_dir")
    assert a == b


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["verify-props"]) == 0
    assert (tmp_path / "env" / "propositions.csv").exists()


def test_firm_reg_tables_from_fixture_files(tmp_path):
    cli.make_fixtures(tmp_path / "data", seed=2)
    d = tmp_path / "data"
    cfg = _write(tmp_path / "c.yaml", {
        "data": {"firms": str(d / "firms.csv"), "shock": str(d / "shock_quarterly.csv"), "aggregates": str(d / "aggregates.csv")},
        "tables": ["baseline"],
    })
    out = tmp_path / "o"
    assert cli.main(["firm-reg", "-c", cfg, "-o", str(out)]) == 0
    res = pd.read_csv(out / "firm_results.csv")
    beta = res[res["spec_id"].str.startswith("baseline") & (res["coef_name"] == "interaction")]["estimate"]
    # the fixture plants -0.4 on the interaction
    assert len(beta) and ((beta + 0.4).abs() < 0.05).all()
    assert (out / "table_baseline.txt").exists()
