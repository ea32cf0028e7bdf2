"""Command-line pipeline: generation, training, evaluation, prediction,
exit codes, config-file handling and output reproducibility."""

import json
from pathlib import Path

import pytest

from cwm.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main


def _gen(out, n=2, seed=7, difficulty="single-mover"):
    return main(["gen", "--difficulty", difficulty, "--n", str(n),
                 "--seed", str(seed), "--out", str(out)])


def test_gen_writes_dataset(tmp_path):
    out = tmp_path / "ds"
    assert _gen(out) == EXIT_OK
    assert (out / "manifest.json").exists()
    assert (out / "clips" / "0000" / "frame0.png").exists()
    assert (out / "clips" / "0001" / "gt.json").exists()
    assert json.loads((out / "run_config.json").read_text()
                      )["command"] == "gen"


def test_gen_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _gen(a) == EXIT_OK and _gen(b) == EXIT_OK
    pa = (a / "clips" / "0000" / "frame0.png").read_bytes()
    pb = (b / "clips" / "0000" / "frame0.png").read_bytes()
    assert pa == pb


def test_missing_required_flags_is_usage_error(tmp_path, capsys):
    assert main(["gen", "--n", "2"]) == EXIT_USAGE
    assert main(["eval", "--task", "flow"]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == EXIT_USAGE


def test_missing_dataset_is_data_error(tiny_ckpt, tmp_path, capsys):
    rc = main(["eval", "--task", "flow", "--ckpt", str(tiny_ckpt),
               "--data", str(tmp_path / "nope"), "--out",
               str(tmp_path / "o")])
    assert rc == EXIT_DATA
    assert "data" in capsys.readouterr().err


def test_corrupt_checkpoint_is_data_error(tiny_dataset, tmp_path):
    bad = tmp_path / "bad.cwmc"
    bad.write_bytes(b"not a checkpoint")
    rc = main(["eval", "--task", "flow", "--ckpt", str(bad),
               "--data", str(tiny_dataset), "--out", str(tmp_path / "o")])
    assert rc == EXIT_DATA


def test_train_writes_checkpoint_and_curve(tiny_dataset, tmp_path):
    out = tmp_path / "run"
    rc = main(["train", "--policy", "tmp:p=0.99", "--data",
               str(tiny_dataset), "--steps", "2", "--batch", "2",
               "--seed", "0", "--out", str(out)])
    assert rc == EXIT_OK
    assert (out / "model.cwmc").exists()
    rows = (out / "loss.csv").read_text().strip().splitlines()
    assert rows[0] == "step,loss"
    assert len(rows) == 3
    resolved = json.loads((out / "run_config.json").read_text())["resolved"]
    assert resolved["policy"] == "tmp:p=0.99"
    assert resolved["steps"] == 2


def test_bad_policy_is_data_error(tiny_dataset, tmp_path):
    rc = main(["train", "--policy", "bogus:x=1", "--data",
               str(tiny_dataset), "--steps", "1", "--out",
               str(tmp_path / "o")])
    assert rc == EXIT_DATA


@pytest.mark.parametrize("task", ["flow", "keypoints"])
def test_eval_writes_metrics(tiny_ckpt, tiny_dataset, tmp_path, task):
    out = tmp_path / task
    rc = main(["eval", "--task", task, "--ckpt", str(tiny_ckpt),
               "--data", str(tiny_dataset), "--n", "2", "--out", str(out)])
    assert rc == EXIT_OK
    doc = json.loads((out / "metrics.json").read_text())
    assert doc["schema_version"] == 1
    assert doc["task"] == task
    assert doc["config"]["tau_seg"] == 0.5
    assert doc["metrics"]["n_clips"] == 2


def test_eval_metrics_byte_identical(tiny_ckpt, tiny_dataset, tmp_path):
    args = ["eval", "--task", "keypoints", "--ckpt", str(tiny_ckpt),
            "--data", str(tiny_dataset), "--n", "2"]
    out = tmp_path / "ev"
    assert main(args + ["--out", str(out)]) == EXIT_OK
    first = (out / "metrics.json").read_bytes()
    assert main(args + ["--out", str(out)]) == EXIT_OK
    assert (out / "metrics.json").read_bytes() == first


def test_eval_threshold_flag_overrides(tiny_ckpt, tiny_dataset, tmp_path):
    out = tmp_path / "ev"
    rc = main(["eval", "--task", "flow", "--ckpt", str(tiny_ckpt),
               "--data", str(tiny_dataset), "--n", "1", "--out", str(out),
               "--tau-occ", "0.7"])
    assert rc == EXIT_OK
    doc = json.loads((out / "metrics.json").read_text())
    assert doc["config"]["tau_occ"] == 0.7


def test_config_file_with_flag_override(tiny_ckpt, tiny_dataset, tmp_path):
    cfgfile = tmp_path / "run.toml"
    cfgfile.write_text(
        f'task = "keypoints"\nckpt = "{tiny_ckpt}"\n'
        f'data = "{tiny_dataset}"\nn = 2\n')
    out = tmp_path / "ev"
    rc = main(["eval", "--config", str(cfgfile), "--out", str(out),
               "--n", "1"])
    assert rc == EXIT_OK
    doc = json.loads((out / "metrics.json").read_text())
    assert doc["metrics"]["n_clips"] == 1  # flag wins over the file


def test_predict_writes_artifacts(tiny_ckpt, tiny_dataset, tmp_path):
    out = tmp_path / "pr"
    rc = main(["predict", "--ckpt", str(tiny_ckpt), "--data",
               str(tiny_dataset), "--clip", "0", "--moves", "3,3:0,2",
               "--out", str(out)])
    assert rc == EXIT_OK
    for name in ("prediction.png", "flow.png", "segment.png",
                 "run_config.json"):
        assert (out / name).exists()


def test_predict_factual_without_moves(tiny_ckpt, tiny_dataset, tmp_path):
    out = tmp_path / "pr"
    rc = main(["predict", "--ckpt", str(tiny_ckpt), "--data",
               str(tiny_dataset), "--clip", "0", "--out", str(out)])
    assert rc == EXIT_OK
    assert (out / "prediction.png").exists()
    assert not (out / "flow.png").exists()


def test_predict_unknown_clip_is_data_error(tiny_ckpt, tiny_dataset,
                                            tmp_path):
    rc = main(["predict", "--ckpt", str(tiny_ckpt), "--data",
               str(tiny_dataset), "--clip", "99", "--out",
               str(tmp_path / "pr")])
    assert rc == EXIT_DATA
