import json
from pathlib import Path

import pytest

from scenebm.cli import main
from scenebm.manifest import read_manifest


@pytest.fixture
def workspace(tmp_path):
    data = tmp_path / "data.json"
    rc = main(["synth", "--out", str(data), "--n", "100", "--seed", "1"])
    assert rc == 0
    return tmp_path


def _train(workspace, epochs=3, seed=2):
    config = workspace / "config.json"
    config.write_text(json.dumps({
        "model_kind": "cosmo", "hidden": [6], "epochs": epochs,
        "learning_rate": 0.05, "seed": seed, "patience": 10,
    }))
    model = workspace / "model.bin"
    rc = main([
        "train", "--config", str(config),
        "--dataset", str(workspace / "data.json"), "--out", str(model),
    ])
    assert rc == 0
    return model


def test_synth_writes_manifest(workspace):
    manifest = read_manifest(workspace / "data.json")
    assert manifest["command"] == "synthesize"
    assert "dataset_fingerprint" in manifest


def test_full_pipeline(workspace):
    model = _train(workspace)
    assert model.exists()
    assert (workspace / "model.curves.csv").exists()
    report = workspace / "report.csv"
    rc = main([
        "eval", "--model", str(model), "--dataset", str(workspace / "data.json"),
        "--tasks", "1,2,3", "--out", str(report), "--gibbs-steps", "6",
    ])
    assert rc == 0
    lines = report.read_text().splitlines()
    assert lines[0].startswith("task,model,split,theta,tp")
    assert len(lines) > 1


def test_eval_does_not_touch_model_file(workspace):
    model = _train(workspace)
    before = model.read_bytes()
    rc = main([
        "eval", "--model", str(model), "--dataset", str(workspace / "data.json"),
        "--tasks", "2", "--gibbs-steps", "4",
    ])
    assert rc == 0
    assert model.read_bytes() == before


def test_generate_byte_identical_across_runs(workspace):
    model = _train(workspace)
    out_a = workspace / "a.json"
    out_b = workspace / "b.json"
    for out in (out_a, out_b):
        rc = main([
            "generate", "--model", str(model), "--out", str(out),
            "--n", "3", "--seed", "9", "--prototype", "table,plate",
        ])
        assert rc == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_generate_empty_output(workspace):
    model = _train(workspace)
    out = workspace / "none.json"
    rc = main([
        "generate", "--model", str(model), "--out", str(out),
        "--n", "0", "--seed", "1", "--hidden-units", "0",
    ])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["scenes"] == []


def test_missing_dataset_exits_2_and_names_path(workspace, capsys):
    rc = main([
        "train", "--dataset", str(workspace / "ghost.json"),
        "--out", str(workspace / "m.bin"),
    ])
    assert rc == 2
    assert "ghost.json" in capsys.readouterr().err


def test_empty_task_list_exits_1(workspace):
    model = _train(workspace)
    rc = main([
        "eval", "--model", str(model), "--dataset", str(workspace / "data.json"),
        "--tasks", "",
    ])
    assert rc == 1


def test_unknown_flag_exits_1():
    rc = main(["train", "--nonsense"])
    assert rc == 1


def test_corrupt_model_eval_exits_2(workspace, capsys):
    bad = workspace / "bad.bin"
    bad.write_bytes(b"nonsense")
    rc = main([
        "eval", "--model", str(bad), "--dataset", str(workspace / "data.json"),
        "--tasks", "1",
    ])
    assert rc == 2


def test_verify_passes_and_tolerates_bad_model_file(workspace, capsys):
    rc = main(["verify"])
    assert rc == 0
    bad = workspace / "bad.bin"
    bad.write_bytes(b"junk")
    rc = main(["verify", "--model", str(bad)])
    out = capsys.readouterr().out
    assert rc == 0  # built-in properties still pass
    assert "load error" in out


def test_train_reproducible_from_manifest(workspace):
    model = _train(workspace, epochs=2, seed=7)
    first = model.read_bytes()
    manifest = read_manifest(model)
    config = workspace / "replay.json"
    config.write_text(json.dumps(manifest["config"]["config"]))
    rc = main([
        "train", "--config", str(config),
        "--dataset", manifest["config"]["dataset"],
        "--out", str(model),
        "--split-seed", str(manifest["config"]["split_seed"]),
    ])
    assert rc == 0
    assert model.read_bytes() == first


def test_sweep_single_point_matches_train(workspace):
    model = _train(workspace, epochs=2, seed=3)
    train_curves = (workspace / "model.curves.csv").read_text()
    grid = workspace / "grid.json"
    grid.write_text(json.dumps({
        "base": {"model_kind": "cosmo", "hidden": [6], "epochs": 2,
                 "learning_rate": 0.05, "seed": 3, "patience": 10},
    }))
    out_dir = workspace / "sweep"
    rc = main([
        "sweep", "--config", str(grid), "--dataset", str(workspace / "data.json"),
        "--out", str(out_dir),
    ])
    assert rc == 0
    point_curves = (out_dir / "h6_l1_constant.curves.csv").read_text()
    assert point_curves == train_curves


def test_sweep_grid_over_hidden_counts(workspace):
    grid = workspace / "grid.json"
    grid.write_text(json.dumps({
        "base": {"model_kind": "cosmo", "epochs": 2, "learning_rate": 0.05,
                 "seed": 3, "patience": 10},
        "hidden_counts": [4, 8],
        "schedules": [{"kind": "constant", "t0": 1.0},
                      {"kind": "emc", "t0": 4.0, "a": 0.9}],
    }))
    out_dir = workspace / "sweep2"
    rc = main([
        "sweep", "--config", str(grid), "--dataset", str(workspace / "data.json"),
        "--out", str(out_dir), "--threads", "2",
    ])
    assert rc == 0
    assert len(list(Path(out_dir).glob("*.curves.csv"))) == 4


def _final_validation_total(csv_path):
    rows = [line.split(",") for line in Path(csv_path).read_text().splitlines()[1:]]
    last = max(int(r[0]) for r in rows)
    return sum(
        float(v) for (e, s, _b, v) in rows if s == "validation" and int(e) == last
    )


def test_sweep_more_hidden_units_help(tmp_path):
    data = tmp_path / "d.json"
    assert main(["synth", "--out", str(data), "--n", "300", "--seed", "3"]) == 0
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({
        "base": {"model_kind": "cosmo", "epochs": 12, "learning_rate": 0.05,
                 "seed": 3, "patience": 30},
        "hidden_counts": [4, 16],
    }))
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(grid), "--dataset", str(data),
                 "--out", str(out)]) == 0
    small = _final_validation_total(out / "h4_l1_constant.curves.csv")
    large = _final_validation_total(out / "h16_l1_constant.curves.csv")
    assert large <= small + 0.05


def test_sweep_single_layer_beats_stack(tmp_path):
    data = tmp_path / "d.json"
    assert main(["synth", "--out", str(data), "--n", "300", "--seed", "3"]) == 0
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({
        "base": {"model_kind": "cosmo", "hidden": [10], "epochs": 12,
                 "learning_rate": 0.05, "seed": 3, "patience": 30},
        "layer_counts": [1, 2],
    }))
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(grid), "--dataset", str(data),
                 "--out", str(out)]) == 0
    shallow = _final_validation_total(out / "h10_l1_constant.curves.csv")
    deep = _final_validation_total(out / "h10_l2_constant.curves.csv")
    assert shallow <= deep + 0.05


def test_sweep_unknown_keys_exit_1(workspace):
    grid = workspace / "grid.json"
    grid.write_text(json.dumps({"hidden_sizes": [4]}))
    rc = main([
        "sweep", "--config", str(grid), "--dataset", str(workspace / "data.json"),
        "--out", str(workspace / "sweepx"),
    ])
    assert rc == 1
