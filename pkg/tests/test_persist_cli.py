import json

import pytest

from argn.cli import cli
from argn.encoders import EncodingOptions, encode_table, fit_encoders
from argn.model import ArgnModel, TrainConfig, train
from argn.persist import ModelFileError, load_model, save_model
from argn.sampling import GenerationRequest, generate, synthesize
from argn.tables import write_csv
from conftest import mixed_sample_table


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    table = mixed_sample_table(300, seed=6)
    encoders = fit_encoders(table, table.schema, EncodingOptions(n_bins=12))
    encoded = encode_table(table, encoders)
    model = ArgnModel(encoders.sub_columns, encoders=encoders, schema=table.schema)
    cfg = TrainConfig(batch_size=64, max_epochs=6, seed=0)
    train(model, encoded, cfg)
    model.train_config_echo = {"max_epochs": 6, "seed": 0}
    return model, table


def test_save_load_save_byte_identical(trained, tmp_path):
    model, _ = trained
    p1 = tmp_path / "m1.argn"
    p2 = tmp_path / "m2.argn"
    save_model(model, str(p1))
    loaded = load_model(str(p1))
    save_model(loaded, str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_loaded_model_generates_identically(trained, tmp_path):
    model, _ = trained
    path = tmp_path / "m.argn"
    save_model(model, str(path))
    loaded = load_model(str(path))
    req = GenerationRequest(n_rows=50, seed=3)
    assert generate(model, req).data.tobytes() == generate(loaded, req).data.tobytes()
    assert synthesize(model, req).cells == synthesize(loaded, req).cells


def test_magic_mismatch(trained, tmp_path):
    model, _ = trained
    path = tmp_path / "m.argn"
    save_model(model, str(path))
    blob = bytearray(path.read_bytes())
    blob[0] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(ModelFileError, match="not an ARGN model file"):
        load_model(str(path))


def test_version_mismatch(trained, tmp_path):
    model, _ = trained
    path = tmp_path / "m.argn"
    save_model(model, str(path))
    blob = bytearray(path.read_bytes())
    blob[4] = 99
    path.write_bytes(bytes(blob))
    with pytest.raises(ModelFileError, match="version 99"):
        load_model(str(path))


def test_truncated_weights(trained, tmp_path):
    model, _ = trained
    path = tmp_path / "m.argn"
    save_model(model, str(path))
    blob = path.read_bytes()
    path.write_bytes(blob[:-4])  # drop exactly one float
    with pytest.raises(ModelFileError, match=r"expected (\d+) floats, found"):
        load_model(str(path))
    expected = sum(p.value.size for p in model.param_list())
    try:
        load_model(str(path))
    except ModelFileError as exc:
        assert f"expected {expected} floats, found {expected - 1}" in str(exc)


# -- CLI -----------------------------------------------------------------------------


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    table = mixed_sample_table(400, seed=2)
    path = root / "data.csv"
    write_csv(table, str(path))
    return str(path)


@pytest.fixture(scope="module")
def quick_config(tmp_path_factory):
    root = tmp_path_factory.mktemp("cfg")
    path = root / "run.json"
    path.write_text(json.dumps({
        "train": {"max_epochs": 4, "batch_size": 64},
        "encoding": {"n_bins": 10},
        "value_protection": {"enabled": False},
    }))
    return str(path)


def test_cli_train_generate_deterministic(data_csv, quick_config, tmp_path):
    model_path = str(tmp_path / "m.argn")
    out1 = str(tmp_path / "s1.csv")
    out2 = str(tmp_path / "s2.csv")
    assert cli(["train", "--data", data_csv, "--config", quick_config,
                "--out", model_path, "--seed", "7"]) == 0
    assert cli(["generate", "--model", model_path, "-n", "80", "--out", out1,
                "--seed", "7"]) == 0
    assert cli(["generate", "--model", model_path, "-n", "80", "--out", out2,
                "--seed", "7"]) == 0
    with open(out1, "rb") as f1, open(out2, "rb") as f2:
        assert f1.read() == f2.read()


def test_cli_generate_with_condition_and_order(data_csv, quick_config, tmp_path):
    model_path = str(tmp_path / "m.argn")
    out = str(tmp_path / "cond.csv")
    cli(["train", "--data", data_csv, "--config", quick_config, "--out", model_path])
    assert cli(["generate", "--model", model_path, "-n", "30", "--out", out,
                "--condition", "cat_b=pos", "--order", "cat_b,cat_a",
                "--temperature", "0.8", "--seed", "1"]) == 0
    from argn.tables import read_csv

    rows = read_csv(out)
    assert all(v == "pos" for v in rows.column_values("cat_b"))


def test_cli_dcr_flags_train_copy(data_csv, tmp_path, capsys):
    out_cdf = str(tmp_path / "cdf.csv")
    # synthetic = copy of train -> all-zero DCR -> positive integral
    holdout = mixed_sample_table(200, seed=99)
    holdout_path = str(tmp_path / "holdout.csv")
    write_csv(holdout, holdout_path)
    assert cli(["dcr", "--train", data_csv, "--syn", data_csv,
                "--test", holdout_path, "--out-cdf", out_cdf]) == 0
    printed = capsys.readouterr().out
    assert "risk=1" in printed
    header = open(out_cdf).readline().strip()
    assert header == "distance,cdf_syn,cdf_test"


def test_cli_evaluate_without_holdout_omits_integral(data_csv, tmp_path):
    syn = mixed_sample_table(300, seed=55)
    syn_path = str(tmp_path / "syn.csv")
    write_csv(syn, syn_path)
    report_path = str(tmp_path / "report.json")
    assert cli(["evaluate", "--real", data_csv, "--syn", syn_path,
                "--report", report_path]) == 0
    report = json.loads(open(report_path).read())
    assert report["dcr_integral"] is None
    assert report["detection_auc"] is not None
    assert report["jsd"]["mean"] is not None


def test_cli_evaluate_with_holdout_reports_integral(data_csv, tmp_path):
    syn = mixed_sample_table(300, seed=55)
    holdout = mixed_sample_table(300, seed=56)
    syn_path = str(tmp_path / "syn.csv")
    holdout_path = str(tmp_path / "holdout.csv")
    write_csv(syn, syn_path)
    write_csv(holdout, holdout_path)
    report_path = str(tmp_path / "report.json")
    assert cli(["evaluate", "--real", data_csv, "--syn", syn_path,
                "--holdout", holdout_path, "--report", report_path]) == 0
    report = json.loads(open(report_path).read())
    assert isinstance(report["dcr_integral"], float)


def test_cli_unknown_flag_exits_one(data_csv):
    assert cli(["generate", "--nonsense"]) == 1


def test_cli_missing_subcommand_exits_one():
    assert cli([]) == 1


def test_cli_misspelled_config_key(data_csv, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"train": {"batchsize": 4}}))
    code = cli(["train", "--data", data_csv, "--config", str(bad),
                "--out", str(tmp_path / "m.argn")])
    assert code == 1


def test_cli_runtime_failure_exits_two(tmp_path):
    assert cli(["generate", "--model", str(tmp_path / "missing.argn"),
                "-n", "5", "--out", str(tmp_path / "x.csv")]) == 2


def test_cli_evaluate_with_target_reports_ml(data_csv, tmp_path):
    syn = mixed_sample_table(300, seed=77)
    syn_path = str(tmp_path / "syn.csv")
    write_csv(syn, syn_path)
    report_path = str(tmp_path / "ml.json")
    assert cli(["evaluate", "--real", data_csv, "--syn", syn_path,
                "--target", "cat_b", "--report", report_path]) == 0
    report = json.loads(open(report_path).read())
    assert report["ml_efficiency"]["task"] == "classification"
    assert 0.0 <= report["ml_efficiency"]["auc"] <= 1.0


def test_cli_audit_end_to_end(tmp_path):
    table = mixed_sample_table(240, seed=12)
    data_path = str(tmp_path / "audit_data.csv")
    write_csv(table, data_path)
    config_path = str(tmp_path / "audit_cfg.json")
    with open(config_path, "w") as fh:
        json.dump({
            "train": {"max_epochs": 3, "batch_size": 32},
            "encoding": {"n_bins": 10},
            "value_protection": {"enabled": True},
            "audit": {"n_shadow": 6, "shadow_size": 60, "n_queries": 10,
                      "subset_size": 2, "seed": 0,
                      "attacks": ["naive_gh", "direct_lookup", "closest_hamming"]},
        }, fh)
    report_path = str(tmp_path / "audit.json")
    assert cli(["audit", "--data", data_path, "--config", config_path,
                "--report", report_path, "--auto-target", "1"]) == 0
    report = json.loads(open(report_path).read())
    assert report["n_shadow"] == 6
    assert len(report["targets"]) == 1
    attacks = report["targets"][0]["attacks"]
    assert set(attacks) == {"naive_gh", "direct_lookup", "closest_hamming"}
    for res in attacks.values():
        assert 0.0 <= res["auc"] <= 1.0
        assert 0.0 <= res["accuracy"] <= 1.0
    assert report["config"]["value_protection"]["enabled"] is True
