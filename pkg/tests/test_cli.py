import csv
import json

import pytest

from rmtclt.cli import main
from rmtclt.experiments import ExperimentConfig, recompute_from_disk, run
from rmtclt.ensembles import ConfigError


def test_tables_command(tmp_path):
    assert main(["tables", "--k-max", "6", "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "t.csv").open()))
    assert rows[5][1:] == ["6", "0", "4", "0", "1", "0", "0"]
    rows = list(csv.reader((tmp_path / "T.csv").open()))
    assert rows[4][1:5] == ["0", "-3", "0", "1"]


def test_run_tables_experiment(tmp_path, capsys):
    code = main(["run", "--experiment", "tables", "--out", str(tmp_path), "--format", "csv"])
    assert code == 0
    report = list(csv.DictReader((tmp_path / "report.csv").open()))
    assert all(r["passed"] == "True" for r in report)
    assert "tables: PASS" in capsys.readouterr().out


def test_run_oracle_and_recompute(tmp_path):
    out = tmp_path / "oracle"
    code = main(["run", "--experiment", "oracle", "--ensemble", "rademacher-all", "--n", "3",
                 "--replicates", "300", "--seed", "5", "--out", str(out)])
    assert code == 0
    saved = json.loads((out / "report.json").read_text())
    again = recompute_from_disk(out)
    assert [c["measured"] for c in saved["checks"]] == [c.measured for c in again.checks]


def test_logmgf_experiment():
    cfg = ExperimentConfig.from_dict({"experiment": "logmgf", "ensemble": "flip", "k_max": "5"})
    assert run(cfg).passed


def test_config_file_and_overrides(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("experiment=semicircle\nn=32\nreplicates=20\nrelation=flip\n")
    out = tmp_path / "semi"
    code = main(["run", "--config", str(cfgfile), "--n", "48", "--out", str(out)])
    assert code in (0, 1)
    saved = json.loads((out / "report.json").read_text())
    assert saved["config"]["n"] == "48" and saved["config"]["relation"] == "flip"
    assert (out / "samples_main.csv").exists() and (out / "samples_main.json").exists()


def test_configuration_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("experiment=clt\nwidth=3\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert "width" in capsys.readouterr().err
    assert main(["run", "--experiment", "clt", "--gamma", "2"]) == 2
    assert main(["run", "--experiment", "oracle", "--n", "9", "--ensemble", "rademacher-all"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["run", "--experiment", "nope"])
    assert exc.value.code == 2
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "clt", "format": "xml"})


def test_failed_check_gives_exit_one(tmp_path):
    # a 0.1% tolerance on 10 replicates cannot be met
    cfgfile = tmp_path / "strict.cfg"
    cfgfile.write_text("experiment=semicircle\nn=16\nreplicates=10\nsemicircle_tol=1e-5\n")
    assert main(["run", "--config", str(cfgfile)]) == 1


def test_predict_command(tmp_path, capsys):
    code = main(["predict", "--ensemble", "flip", "--n", "8", "--m-max", "3",
                 "--format", "csv", "--out", str(tmp_path)])
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "predictions.csv").open()))
    assert rows[0]["m"] == "1" and float(rows[0]["V_limit"]) == 4.0
    assert float(rows[0]["V_finite_n"]) == 4.0
