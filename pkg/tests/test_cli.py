import json

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from trajcast.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def make_dataset(root, n_sets=2, frames=30, seed=0):
    """Write a tiny manifest-backed dataset of straight-line walkers."""
    rng = np.random.default_rng(seed)
    files = {}
    for s in range(n_sets):
        rows = []
        for actor in (1, 2):
            x0, y0 = rng.uniform(-2, 2, size=2)
            vx, vy = rng.uniform(-0.3, 0.3, size=2)
            for f in range(frames):
                rows.append(f"{f}\t{actor}\t{x0 + vx * f:.4f}\t{y0 + vy * f:.4f}")
        fname = f"set_{s}.txt"
        (root / fname).write_text("\n".join(rows) + "\n")
        files[f"set{s}"] = [fname]
    manifest = root / "manifest.yaml"
    manifest.write_text(yaml.safe_dump({k: v for k, v in files.items()}))
    return manifest


def small_config(root, **extra):
    cfg = dict(
        epochs=1,
        batch_size=16,
        iterations=1,
        embed_dim=8,
        lstm_hidden=8,
        noise_dim=4,
        t_obs=4,
        t_pred=4,
        stride=5,
    )
    cfg.update(extra)
    path = root / "config.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return path


def train_once(runner, tmp_path):
    manifest = make_dataset(tmp_path)
    config = small_config(tmp_path)
    out = tmp_path / "run"
    result = runner.invoke(
        main,
        ["train", "--config", str(config), "--dataset", str(manifest),
         "--out", str(out), "--seed", "0"],
    )
    return result, manifest, config, out


def test_train_writes_checkpoint_and_manifest(runner, tmp_path):
    result, _, _, out = train_once(runner, tmp_path)
    assert result.exit_code == 0, result.output
    assert (out / "model.ckpt").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "train"
    assert manifest["seed"] == 0
    assert any(a.endswith("model.ckpt") for a in manifest["artifacts"])


def test_eval_writes_metrics(runner, tmp_path):
    result, manifest, config, out = train_once(runner, tmp_path)
    assert result.exit_code == 0, result.output
    eval_out = tmp_path / "eval"
    result = runner.invoke(
        main,
        ["eval", "--config", str(config), "--dataset", str(manifest),
         "--checkpoint", str(out / "model.ckpt"), "--out", str(eval_out),
         "--split", "set1", "--k", "2"],
    )
    assert result.exit_code == 0, result.output
    metrics = yaml.safe_load((eval_out / "metrics.yaml").read_text())
    assert set(metrics) >= {"ade", "fde", "units", "k"}
    assert metrics["k"] == 2
    assert metrics["ade"] >= 0


def test_predict_writes_jsonl(runner, tmp_path):
    result, manifest, config, out = train_once(runner, tmp_path)
    assert result.exit_code == 0, result.output
    pred_out = tmp_path / "pred"
    result = runner.invoke(
        main,
        ["predict", "--config", str(config), "--dataset", str(manifest),
         "--checkpoint", str(out / "model.ckpt"), "--out", str(pred_out),
         "--split", "set0", "--seed", "7"],
    )
    assert result.exit_code == 0, result.output
    lines = (pred_out / "predictions.jsonl").read_text().splitlines()
    assert lines
    obj = json.loads(lines[0])
    assert {"scene_id", "actors", "predicted"} <= set(obj)
    assert np.asarray(obj["predicted"]).shape[1:] == (4, 2)


def test_unknown_config_key_exits_2(runner, tmp_path):
    manifest = make_dataset(tmp_path)
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump({"epochs": 1, "learning_rate_typo": 0.1}))
    result = runner.invoke(
        main,
        ["train", "--config", str(bad), "--dataset", str(manifest),
         "--out", str(tmp_path / "o")],
    )
    assert result.exit_code == 2
    assert "error: config" in result.output
    assert "learning_rate_typo" in result.output


def test_missing_dataset_exits_3(runner, tmp_path):
    config = small_config(tmp_path)
    result = runner.invoke(
        main,
        ["train", "--config", str(config), "--dataset", str(tmp_path / "nope.yaml"),
         "--out", str(tmp_path / "o")],
    )
    assert result.exit_code == 3
    assert "error: data" in result.output


def test_malformed_data_exits_3(runner, tmp_path):
    (tmp_path / "set_0.txt").write_text("1\t1\tnot_a_number\t0\n")
    manifest = tmp_path / "manifest.yaml"
    manifest.write_text(yaml.safe_dump({"set0": ["set_0.txt"]}))
    config = small_config(tmp_path)
    result = runner.invoke(
        main,
        ["train", "--config", str(config), "--dataset", str(manifest),
         "--out", str(tmp_path / "o")],
    )
    assert result.exit_code == 3


def test_eval_without_checkpoint_exits_2(runner, tmp_path):
    manifest = make_dataset(tmp_path)
    result = runner.invoke(
        main,
        ["eval", "--dataset", str(manifest), "--out", str(tmp_path / "o")],
    )
    assert result.exit_code == 2


def test_corrupt_checkpoint_exits_2(runner, tmp_path):
    manifest = make_dataset(tmp_path)
    config = small_config(tmp_path)
    bad_ckpt = tmp_path / "bad.ckpt"
    bad_ckpt.write_bytes(b"\x00" * 200)
    result = runner.invoke(
        main,
        ["eval", "--config", str(config), "--dataset", str(manifest),
         "--checkpoint", str(bad_ckpt), "--out", str(tmp_path / "o")],
    )
    assert result.exit_code == 2


def test_viz_trajectories_byte_deterministic(runner, tmp_path):
    result, manifest, config, out = train_once(runner, tmp_path)
    assert result.exit_code == 0, result.output
    digests = []
    for run in ("viz_a", "viz_b"):
        viz_out = tmp_path / run
        result = runner.invoke(
            main,
            ["viz-trajectories", "--config", str(config), "--dataset", str(manifest),
             "--checkpoint", str(out / "model.ckpt"), "--out", str(viz_out),
             "--split", "set0", "--seed", "0"],
        )
        assert result.exit_code == 0, result.output
        pngs = sorted(viz_out.glob("scene_*.png"))
        assert pngs
        digests.append([p.read_bytes() for p in pngs])
    assert digests[0] == digests[1]


def test_viz_embeddings_writes_figures(runner, tmp_path):
    result, manifest, config, out = train_once(runner, tmp_path)
    assert result.exit_code == 0, result.output
    viz_out = tmp_path / "emb"
    result = runner.invoke(
        main,
        ["viz-embeddings", "--config", str(config), "--dataset", str(manifest),
         "--checkpoint", str(out / "model.ckpt"), "--out", str(viz_out),
         "--seed", "0"],
    )
    assert result.exit_code == 0, result.output
    assert (viz_out / "embedding_scatter.png").exists()
    assert (viz_out / "pair_a.png").exists()
    assert (viz_out / "pair_b.png").exists()
