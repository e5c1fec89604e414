"""End-to-end command line flows and exit codes."""

import numpy as np
import pytest
import yaml

from rejopt.cli import main
from rejopt.experiments import (
    DictionarySpec,
    DistributionSpec,
    build_dictionary,
    sample_dataset,
    synth_distribution,
)


@pytest.fixture()
def workspace(tmp_path):
    spec = DistributionSpec(kind="sparse_realizable", size=4, d=0.2, a_margin=4.0, alpha=1.0)
    dist = synth_distribution(spec)
    dictionary = build_dictionary(DictionarySpec(kind="indicator", m=4), dist)
    data = sample_dataset(dist, 80, seed=3)
    data_path = tmp_path / "data.csv"
    data.save(data_path, header=True)
    dict_path = tmp_path / "dict.yaml"
    dictionary.save(dict_path)
    config = {
        "cost": {"d": 0.2, "tau": 0.3},
        "dictionary": "dict.yaml",
        "solver": {"r_n": 0.05},
        "cv": {"folds": 3},
        "seed": 1,
    }
    config_path = tmp_path / "config.yaml"
    config_path.write_text(yaml.safe_dump(config))
    return tmp_path, data_path, config_path, data


class TestFitPredict:
    def test_fit_outputs(self, workspace):
        tmp, data_path, config_path, data = workspace
        out = tmp / "fit"
        code = main(["fit", "--data", str(data_path), "--config", str(config_path),
                     "--out", str(out)])
        assert code == 0
        assert (out / "model.yaml").exists()
        decisions = (out / "decisions.csv").read_text().strip().splitlines()
        assert len(decisions) == data.n + 1
        header = decisions[0].split(",")
        assert header[-1] == "decision"
        values = {int(row.split(",")[-1]) for row in decisions[1:]}
        assert values <= {-1, 0, 1}

    def test_predict_matches_fit_decisions(self, workspace):
        tmp, data_path, config_path, _ = workspace
        fit_dir = tmp / "fit"
        main(["fit", "--data", str(data_path), "--config", str(config_path),
              "--out", str(fit_dir)])
        pred_dir = tmp / "pred"
        code = main(["predict", "--model", str(fit_dir / "model.yaml"),
                     "--data", str(data_path), "--out", str(pred_dir)])
        assert code == 0
        assert (pred_dir / "decisions.csv").read_text() == (
            fit_dir / "decisions.csv"
        ).read_text()

    def test_fit_with_cv_penalty(self, workspace):
        tmp, data_path, config_path, _ = workspace
        doc = yaml.safe_load(config_path.read_text())
        doc["solver"]["r_n"] = "cv"
        cv_config = tmp / "cv_config.yaml"
        cv_config.write_text(yaml.safe_dump(doc))
        out = tmp / "fit_cv"
        code = main(["fit", "--data", str(data_path), "--config", str(cv_config),
                     "--out", str(out)])
        assert code == 0
        model = yaml.safe_load((out / "model.yaml").read_text())
        assert model["r_n"] > 0.0


class TestTune:
    def test_outputs(self, workspace):
        tmp, data_path, config_path, _ = workspace
        out = tmp / "tune"
        code = main(["tune", "--data", str(data_path), "--config", str(config_path),
                     "--out", str(out)])
        assert code == 0
        doc = yaml.safe_load((out / "tuning.yaml").read_text())
        assert doc["chosen_r_n"] in doc["grid"]
        assert (out / "cv_curve.csv").exists()
        assert (out / "cv_curve.png").exists()


class TestVerifyAndReport:
    def test_verify_small_scenario(self, workspace, capsys):
        tmp = workspace[0]
        out = tmp / "verify"
        code = main(["verify", "--scenario", "s3", "--out", str(out),
                     "--replicates", "5", "--sample-size", "40"])
        captured = capsys.readouterr().out
        assert code == 0, captured
        assert "[PASS]" in captured
        assert (out / "s3_records.csv").exists()
        assert (out / "s3_summary.yaml").exists()
        assert (out / "s3_inequality.png").exists()

    def test_verify_custom_config(self, workspace):
        tmp = workspace[0]
        from tests.test_experiments import small_scenario

        cfg = small_scenario(replicates=3, sample_sizes=(40,))
        cfg_path = tmp / "scenario.yaml"
        cfg_path.write_text(yaml.safe_dump(cfg.to_dict()))
        out = tmp / "verify_custom"
        code = main(["verify", "--config", str(cfg_path), "--out", str(out)])
        assert code == 0
        assert (out / "tiny_records.csv").exists()

    def test_report_round_trip(self, workspace):
        tmp = workspace[0]
        out = tmp / "verify2"
        main(["verify", "--scenario", "s3", "--out", str(out),
              "--replicates", "4", "--sample-size", "40"])
        rep_out = tmp / "rendered"
        code = main(["report", "--records", str(out / "s3_records.csv"),
                     "--out", str(rep_out), "--prefix", "s3"])
        assert code == 0
        assert (rep_out / "s3_records.csv").read_text() == (
            out / "s3_records.csv"
        ).read_text()


class TestExitCodes:
    def test_missing_config_is_usage_error(self, workspace):
        tmp, data_path, _, _ = workspace
        code = main(["fit", "--data", str(data_path), "--config",
                     str(tmp / "absent.yaml"), "--out", str(tmp / "x")])
        assert code == 2

    def test_bad_model_file(self, workspace, tmp_path):
        tmp, data_path, _, _ = workspace
        bad = tmp_path / "bad.yaml"
        bad.write_text("cost: {d: 0.2, tau: 0.3}\n")
        code = main(["predict", "--model", str(bad), "--data", str(data_path),
                     "--out", str(tmp_path / "p")])
        assert code == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 2

    def test_verify_without_selector(self, tmp_path):
        code = main(["verify", "--out", str(tmp_path)])
        assert code == 2

    def test_failed_assertion_exits_one(self, workspace):
        # an impossible pass-rate bar forces a FAIL line and exit code 1
        tmp = workspace[0]
        from tests.test_experiments import small_scenario

        cfg = small_scenario(replicates=3, sample_sizes=(40,), rn_mode="fixed",
                             rn_fixed=0.001, min_pass_rate=2.0)
        cfg_path = tmp / "fail.yaml"
        cfg_path.write_text(yaml.safe_dump(cfg.to_dict()))
        code = main(["verify", "--config", str(cfg_path), "--out", str(tmp / "v")])
        assert code == 1
