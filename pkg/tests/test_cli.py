import json
from pathlib import Path

import pytest

from quadnet.cli import run

DATA = Path(__file__).resolve().parent.parent / "data" / "sample20"


@pytest.fixture
def quads_dir(tmp_path):
    rc = run(["gen-quads", "--catalog", str(DATA / "catalog.tsv"), "--edges", str(DATA / "edges.tsv"),
              "--out", str(tmp_path / "q"), "--seed", "1"])
    assert rc == 0
    return tmp_path / "q"


def test_gen_quads_on_bundled_sample(quads_dir):
    manifest = json.loads((quads_dir / "manifest.json").read_text())
    assert manifest["seed"] == 1 and manifest["fraction"] == 0.9
    assert manifest["counts"]["train_quadruplets"] > 0
    assert (quads_dir / "train.tsv").read_text().count("\t") == 3 * manifest["counts"]["train_quadruplets"]


def train_args(quads_dir, out, *extra):
    return ["train", "--quads", str(quads_dir / "train.tsv"), "--catalog", str(DATA / "catalog.tsv"),
            "--hash-dim", "32", "--hidden", "16", "--out-dim", "8", "--epochs", "3", "--batch-size", "8",
            "--out", str(out), *extra]


def test_train_eval_recommend(quads_dir, tmp_path, capsys):
    ckpt = tmp_path / "m.ckpt"
    assert run(train_args(quads_dir, ckpt)) == 0
    log = [json.loads(line) for line in Path(str(ckpt) + ".log.jsonl").read_text().splitlines()]
    assert [row["epoch"] for row in log] == [1, 2, 3]
    assert set(log[0]) == {"epoch", "l_sim", "l_comp", "l_neg", "l_reg", "total", "wall_ms"}

    rc = run(["eval", "--quads", str(quads_dir / "test.tsv"), "--ckpt", str(ckpt),
              "--catalog", str(DATA / "catalog.tsv"), "--out", str(tmp_path / "r.json"),
              "--hist", str(tmp_path / "h.csv")])
    assert rc == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert 0 <= report["ranking_acc"] <= 1
    assert len((tmp_path / "h.csv").read_text().splitlines()) == 101

    capsys.readouterr()
    rc = run(["recommend", "--ckpt", str(ckpt), "--catalog", str(DATA / "catalog.tsv"),
              "--anchor", "c00-i000", "--k", "3", "--m-c", "1.5", "--m-n", "1.9"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split("\t")[:4] == ["relation", "rank", "item_id", "distance"]
    sims = [line.split("\t") for line in lines[1:] if line.startswith("similar")]
    comps = [line.split("\t") for line in lines[1:] if line.startswith("complementary")]
    assert len(sims) == 3 and all(row[2] != "c00-i000" for row in sims)
    assert all(row[4] != "cat00" for row in comps)


def test_featurize_then_vectors(quads_dir, tmp_path):
    vec = tmp_path / "v.tsv"
    assert run(["featurize", "--catalog", str(DATA / "catalog.tsv"), "--hash-dim", "16", "--out", str(vec)]) == 0
    rc = run(["train", "--quads", str(quads_dir / "train.tsv"), "--vectors", str(vec), "--hidden", "8",
              "--out-dim", "4", "--epochs", "1", "--out", str(tmp_path / "m.ckpt")])
    assert rc == 0
    rc = run(["eval", "--quads", str(quads_dir / "test.tsv"), "--ckpt", str(tmp_path / "m.ckpt"),
              "--out", str(tmp_path / "r.json")])
    assert rc == 0


def test_unknown_flag(capsys):
    assert run(["train", "--bogus"]) == 1
    assert "usage:" in capsys.readouterr().err


def test_no_subcommand():
    assert run([]) == 1


def test_bad_margins(quads_dir, tmp_path, capsys):
    assert run(train_args(quads_dir, tmp_path / "m.ckpt", "--m-s", "0.5")) == 1
    assert "m_s < m_c < m_n" in capsys.readouterr().err


def test_missing_file_is_data_error(tmp_path, capsys):
    rc = run(["gen-quads", "--catalog", str(tmp_path / "none.tsv"), "--edges", str(DATA / "edges.tsv"),
              "--out", str(tmp_path / "q")])
    assert rc == 2
    assert "none.tsv" in capsys.readouterr().err


def test_corrupt_checkpoint_is_data_error(quads_dir, tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"nonsense")
    rc = run(["eval", "--quads", str(quads_dir / "test.tsv"), "--ckpt", str(bad),
              "--catalog", str(DATA / "catalog.tsv"), "--out", str(tmp_path / "r.json")])
    assert rc == 2


def test_config_file_with_flag_override(quads_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 4, "train": {"epochs": 2, "hash-dim": 32, "hidden": 8, "out_dim": 4}}))
    ckpt = tmp_path / "m.ckpt"
    rc = run(["train", "--config", str(cfg), "--quads", str(quads_dir / "train.tsv"),
              "--catalog", str(DATA / "catalog.tsv"), "--out", str(ckpt), "--epochs", "1"])
    assert rc == 0
    from quadnet.trainer import load_checkpoint
    state = load_checkpoint(ckpt)
    assert state.epoch == 1 and state.seed == 4
    assert state.params.dims == (32, 8, 4)


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert run(["gen-sample", "--config", str(cfg), "--out", str(tmp_path / "s")]) == 1


def test_config_margins_still_validated(quads_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m_c": 0.9}))
    assert run(train_args(quads_dir, tmp_path / "m.ckpt", "--config", str(cfg))) == 1
